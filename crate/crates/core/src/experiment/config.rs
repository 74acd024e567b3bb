//! TOML experiment configuration.
//!
//! Every section and field is optional except `experiment`; missing values
//! take the defaults below. Unknown keys are rejected so that typos surface
//! as errors instead of silently falling back to a default.

use crate::channel::NakagamiParams;
use crate::link::{
    Fading, GainNormalization, InterferenceModel, LinkConfig, MimoMode, ModulationScheme,
    DEFAULT_PACKET_BITS,
};
use crate::metrics::{ParamValue, PerFormula};
use crate::topology::{collinear_nodes, NetworkScenario, Node, NodeId, Point, PointOffsets};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CapacityVsNodes,
    PerVsDistance,
    PerVsModulation,
    BerVsDimension,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::CapacityVsNodes,
        ExperimentKind::PerVsDistance,
        ExperimentKind::PerVsModulation,
        ExperimentKind::BerVsDimension,
        ExperimentKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CapacityVsNodes => "capacity_vs_nodes",
            ExperimentKind::PerVsDistance => "per_vs_distance",
            ExperimentKind::PerVsModulation => "per_vs_modulation",
            ExperimentKind::BerVsDimension => "ber_vs_dimension",
            ExperimentKind::Custom => "custom",
        }
    }

    /// Name of the swept parameter as written to the CSV.
    pub fn param_name(self) -> &'static str {
        match self {
            ExperimentKind::CapacityVsNodes => "node_count",
            ExperimentKind::PerVsDistance => "spacing_m",
            ExperimentKind::PerVsModulation => "modulation",
            ExperimentKind::BerVsDimension => "dimension",
            ExperimentKind::Custom => "scenario",
        }
    }

    pub fn default_sweep(self) -> Vec<ParamValue> {
        let nums = |v: &[f64]| v.iter().map(|x| ParamValue::Number(*x)).collect();
        match self {
            ExperimentKind::CapacityVsNodes => nums(&[2.0, 4.0, 8.0]),
            ExperimentKind::PerVsDistance => nums(&[5.0, 8.0, 11.0]),
            ExperimentKind::PerVsModulation => vec![
                ParamValue::Label("bpsk".into()),
                ParamValue::Label("qpsk".into()),
            ],
            ExperimentKind::BerVsDimension => nums(&[2.0, 4.0]),
            ExperimentKind::Custom => vec![ParamValue::Label("custom".into())],
        }
    }

    fn changes_topology(self) -> bool {
        matches!(
            self,
            ExperimentKind::CapacityVsNodes | ExperimentKind::PerVsDistance
        )
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "experiment: unknown value '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for SnrSweep {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 20.0,
            step: 2.0,
        }
    }
}

impl SnrSweep {
    /// `start, start + step, ...` up to `stop` inclusive.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<()> {
        if ![self.start, self.stop, self.step]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(field_error("snr", "start, stop and step must be finite"));
        }
        if !(self.step > 0.0) {
            return Err(field_error("snr.step", "must be > 0"));
        }
        if self.stop < self.start {
            return Err(field_error("snr.stop", "must be >= snr.start"));
        }
        if (self.stop - self.start) / self.step > 1e6 {
            return Err(field_error("snr.step", "sweep has more than 10^6 points"));
        }
        Ok(())
    }
}

impl std::str::FromStr for SnrSweep {
    type Err = Error;

    /// `start:stop:step`, in dB.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("snr: '{p}' is not a number")))
        };
        match parts.as_slice() {
            [a, b, c] => {
                let sweep = SnrSweep {
                    start: parse(a)?,
                    stop: parse(b)?,
                    step: parse(c)?,
                };
                sweep.validate()?;
                Ok(sweep)
            }
            _ => Err(Error::Config(format!(
                "snr: expected start:stop:step, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingKind {
    #[default]
    Nakagami,
    Awgn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub fading: FadingKind,
    pub m: f64,
    pub omega: f64,
    pub dimension: usize,
    pub rotation_angle: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            fading: FadingKind::Nakagami,
            m: 1.0,
            omega: 1.0,
            dimension: 2,
            rotation_angle: std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub modulation: ModulationScheme,
    pub packet_bits: usize,
    pub mimo_mode: MimoMode,
    pub interference: InterferenceModel,
    pub normalization: GainNormalization,
    pub per_formula: PerFormula,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            modulation: ModulationScheme::Bpsk,
            packet_bits: DEFAULT_PACKET_BITS,
            mimo_mode: MimoMode::Multiplexing,
            interference: InterferenceModel::Ideal,
            normalization: GainNormalization::Power,
            per_formula: PerFormula::Conventional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    #[serde(default = "unit_power")]
    pub tx_power: f64,
}

fn unit_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetSpec {
    pub pair: [u32; 2],
    #[serde(default)]
    pub first: f64,
    #[serde(default)]
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub path_loss_exponent: f64,
    pub reference_distance: f64,
    /// Collinear layout, used unless `nodes` is given.
    pub node_count: usize,
    pub spacing: f64,
    pub radius: f64,
    pub tx_power: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub offsets: Vec<OffsetSpec>,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.0,
            reference_distance: 1.0,
            node_count: 2,
            spacing: 10.0,
            radius: 6.0,
            tx_power: 1.0,
            nodes: Vec::new(),
            offsets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Rayon worker count; absent means one per core. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Replaces the experiment's default swept values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<ParamValue>>,
    #[serde(default)]
    pub snr: SnrSweep,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub link: LinkSection,
    #[serde(default)]
    pub topology: TopologySection,
}

fn default_trials() -> u64 {
    1000
}

fn field_error(field: &str, msg: &str) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    /// All defaults for `experiment`.
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            trials: default_trials(),
            workers: None,
            output: None,
            sweep: None,
            snr: SnrSweep::default(),
            channel: ChannelSection::default(),
            link: LinkSection::default(),
            topology: TopologySection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sweep_values(&self) -> Vec<ParamValue> {
        self.sweep
            .clone()
            .unwrap_or_else(|| self.experiment.default_sweep())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(field_error("trials", "must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(field_error("workers", "must be >= 1"));
        }
        self.snr.validate()?;

        let ch = &self.channel;
        NakagamiParams::new(ch.m, ch.omega)
            .map_err(|e| field_error("channel.m / channel.omega", &e.to_string()))?;
        if ch.dimension == 0 {
            return Err(field_error("channel.dimension", "must be >= 1"));
        }
        if !ch.rotation_angle.is_finite() {
            return Err(field_error("channel.rotation_angle", "must be finite"));
        }
        if self.link.packet_bits == 0 {
            return Err(field_error("link.packet_bits", "must be >= 1"));
        }

        let topo = &self.topology;
        if !(topo.path_loss_exponent >= 0.0) || !topo.path_loss_exponent.is_finite() {
            return Err(field_error("topology.path_loss_exponent", "must be >= 0"));
        }
        if !(topo.reference_distance > 0.0) || !topo.reference_distance.is_finite() {
            return Err(field_error("topology.reference_distance", "must be > 0"));
        }
        if topo.nodes.is_empty() {
            if topo.node_count == 0 {
                return Err(field_error("topology.node_count", "must be >= 1"));
            }
            if !(topo.spacing > 0.0) || !(topo.radius > 0.0) || !(topo.tx_power > 0.0) {
                return Err(field_error(
                    "topology",
                    "spacing, radius and tx_power must be > 0",
                ));
            }
        } else if self.experiment.changes_topology() {
            return Err(field_error(
                "topology.nodes",
                &format!(
                    "explicit nodes cannot be combined with the {} sweep",
                    self.experiment
                ),
            ));
        }
        let ids: Vec<u32> = if topo.nodes.is_empty() {
            (0..topo.node_count as u32).collect()
        } else {
            topo.nodes.iter().map(|n| n.id).collect()
        };
        for o in &topo.offsets {
            for id in o.pair {
                if !ids.contains(&id) {
                    return Err(field_error(
                        "topology.offsets",
                        &format!("node id {id} does not exist"),
                    ));
                }
            }
        }

        let values = self.sweep_values();
        if values.is_empty() {
            return Err(field_error("sweep", "must list at least one value"));
        }
        for v in &values {
            self.check_sweep_value(v)?;
        }

        // every series must build; this catches geometry and packet-size
        // problems before any trial runs
        for v in &values {
            let (scenario, link) = self.series_setup(v)?;
            link.validate()
                .map_err(|e| field_error("link.packet_bits", &e.to_string()))?;
            if scenario.overlaps().is_empty() && scenario.nodes().len() > 1 {
                return Err(field_error(
                    "topology",
                    &format!("no two nodes overlap (sweep value {v})"),
                ));
            }
        }
        Ok(())
    }

    fn check_sweep_value(&self, v: &ParamValue) -> Result<()> {
        let bad = |msg: &str| field_error("sweep", &format!("value {v}: {msg}"));
        match (self.experiment, v) {
            (ExperimentKind::PerVsModulation, ParamValue::Label(s)) => s
                .parse::<ModulationScheme>()
                .map(|_| ())
                .map_err(|e| bad(&e.to_string())),
            (ExperimentKind::PerVsModulation, _) => Err(bad("expected a modulation name")),
            (ExperimentKind::Custom, _) => Ok(()),
            (ExperimentKind::PerVsDistance, ParamValue::Number(x)) => {
                if *x > 0.0 && x.is_finite() {
                    Ok(())
                } else {
                    Err(bad("spacing must be > 0"))
                }
            }
            (_, ParamValue::Number(x)) => {
                if *x >= 1.0 && x.fract() == 0.0 && *x <= 4096.0 {
                    Ok(())
                } else {
                    Err(bad("expected a positive integer"))
                }
            }
            (_, ParamValue::Label(_)) => Err(bad("expected a number")),
        }
    }

    fn base_nodes(&self, count: usize, spacing: f64) -> Result<Vec<Node>> {
        let topo = &self.topology;
        if topo.nodes.is_empty() {
            collinear_nodes(count, spacing, topo.radius, topo.tx_power)
        } else {
            topo.nodes
                .iter()
                .map(|n| Node::new(n.id, Point { x: n.x, y: n.y }, n.radius, n.tx_power))
                .collect()
        }
    }

    /// Scenario and link configuration for one swept value.
    pub fn series_setup(&self, value: &ParamValue) -> Result<(NetworkScenario, LinkConfig)> {
        let topo = &self.topology;
        let mut count = topo.node_count;
        let mut spacing = topo.spacing;
        let mut dim = self.channel.dimension;
        let mut modulation = self.link.modulation;
        let mut mimo_mode = self.link.mimo_mode;
        match (self.experiment, value) {
            (ExperimentKind::CapacityVsNodes, ParamValue::Number(n)) => count = *n as usize,
            (ExperimentKind::PerVsDistance, ParamValue::Number(d)) => spacing = *d,
            (ExperimentKind::PerVsModulation, ParamValue::Label(s)) => modulation = s.parse()?,
            (ExperimentKind::BerVsDimension, ParamValue::Number(m)) => {
                dim = *m as usize;
                mimo_mode = MimoMode::Diversity;
            }
            (ExperimentKind::Custom, _) => {}
            (kind, v) => {
                return Err(field_error(
                    "sweep",
                    &format!("value {v} does not apply to {kind}"),
                ))
            }
        }
        let offsets: Vec<((NodeId, NodeId), PointOffsets)> = topo
            .offsets
            .iter()
            .map(|o| {
                let off = PointOffsets {
                    first: o.first,
                    second: o.second,
                };
                ((NodeId(o.pair[0]), NodeId(o.pair[1])), off)
            })
            .collect();
        let scenario = NetworkScenario::new(
            self.base_nodes(count, spacing)?,
            topo.path_loss_exponent,
            topo.reference_distance,
            &offsets,
        )
        .map_err(|e| field_error("topology", &e.to_string()))?;

        let fading = match self.channel.fading {
            FadingKind::Nakagami => {
                Fading::Nakagami(NakagamiParams::new(self.channel.m, self.channel.omega)?)
            }
            FadingKind::Awgn => Fading::Awgn,
        };
        let link = LinkConfig {
            dim,
            fading,
            rotation_angle: self.channel.rotation_angle,
            modulation,
            packet_bits: self.link.packet_bits,
            mimo_mode,
            interference: self.link.interference,
            normalization: self.link.normalization,
            snr_db: self.snr.points(),
        };
        Ok((scenario, link))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}
