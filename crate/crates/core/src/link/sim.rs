//! Seeded Monte-Carlo packet trials over a network scenario.
//!
//! Every trial owns a ChaCha8 stream selected by its index, so a trial's
//! draws never depend on which worker runs it. Per-trial results are
//! collected in index order and folded sequentially.
//!
//! Within a trial the channels, bits and unit-variance noise are drawn once
//! and reused for every SNR point; only the noise scale changes.

use super::{
    detection_channel, modulate, received_signal, slice_block, transmit_block, GainNormalization,
    ModulationScheme, Transmission, TrialStats,
};
use crate::beamformer::{
    build_rotator, compose, left_pseudoinverse_of, normalization, solve_coupled_drivers,
    CompositeBeamformer, CoupledDriverProblem, DriverMatrix, NormalizationG,
};
use crate::channel::{derive_moments, sample_channel, stack, ChannelMatrix, NakagamiParams};
use crate::metrics::{capacity, db_to_linear, effective_snr};
use crate::topology::{NetworkScenario, NodeId, Point};
use crate::{CMatrix, Error, Result, C64, DEFAULT_RANK_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_PACKET_BITS: usize = 2304;

/// Use of the `M` antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MimoMode {
    /// `M` independent streams.
    #[default]
    Multiplexing,
    /// One stream repeated on every antenna, combined at the receiver.
    Diversity,
}

/// What the detector sees of the other node of an overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferenceModel {
    /// The interfering term is absent from the received block.
    #[default]
    Ideal,
    /// The interferer's packet is added to the received block as unknown signal.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    Nakagami(NakagamiParams),
    /// Identity channels and identity beamformers; the link is pure AWGN
    /// scaled by path gain.
    Awgn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub dim: usize,
    pub fading: Fading,
    pub rotation_angle: f64,
    pub modulation: ModulationScheme,
    pub packet_bits: usize,
    pub mimo_mode: MimoMode,
    pub interference: InterferenceModel,
    pub normalization: GainNormalization,
    /// Received SNR per symbol and receive antenna, referenced to the desired
    /// link's mean channel power `P * g(d) * Omega`.
    pub snr_db: Vec<f64>,
}

impl LinkConfig {
    pub fn new(dim: usize, fading: Fading, snr_db: Vec<f64>) -> Self {
        Self {
            dim,
            fading,
            rotation_angle: std::f64::consts::PI,
            modulation: ModulationScheme::default(),
            packet_bits: DEFAULT_PACKET_BITS,
            mimo_mode: MimoMode::default(),
            interference: InterferenceModel::default(),
            normalization: GainNormalization::default(),
            snr_db,
        }
    }

    pub fn streams(&self) -> usize {
        match self.mimo_mode {
            MimoMode::Multiplexing => self.dim,
            MimoMode::Diversity => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter(
                "antenna dimension must be >= 1".into(),
            ));
        }
        if let Fading::Nakagami(p) = &self.fading {
            p.validate()?;
        }
        if !self.rotation_angle.is_finite() {
            return Err(Error::InvalidParameter(
                "rotation angle must be finite".into(),
            ));
        }
        let unit = self.modulation.bits_per_symbol() * self.streams();
        if self.packet_bits == 0 || !self.packet_bits.is_multiple_of(unit) {
            return Err(Error::InvalidParameter(format!(
                "packet length {} is not a positive multiple of {unit} bits",
                self.packet_bits
            )));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "SNR list must be non-empty and finite".into(),
            ));
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        match self.fading {
            Fading::Nakagami(p) => p.omega_total,
            Fading::Awgn => 1.0,
        }
    }
}

/// Aggregated counters at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub snr_db: f64,
    pub stats: TrialStats,
    /// Per-trial capacity, averaged over the trial's links, in trial order.
    pub capacity: Vec<f64>,
}

/// Number of receive links a scenario yields per trial.
pub fn link_count(scenario: &NetworkScenario) -> usize {
    match scenario.overlaps().len() {
        0 => 1,
        n => 2 * n,
    }
}

/// Runs `n_trials` packet trials per link and SNR point.
///
/// A scenario without overlaps is accepted only as a single node, which is
/// simulated as one link at the reference distance. A numerical failure in a
/// trial erases every packet of that trial and scores its capacity as 0.
pub fn run_trials(
    scenario: &NetworkScenario,
    config: &LinkConfig,
    n_trials: u64,
    master_seed: u64,
) -> Result<Vec<PointStats>> {
    config.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidParameter("trial count must be >= 1".into()));
    }
    if scenario.overlaps().is_empty() && scenario.nodes().len() != 1 {
        return Err(Error::InvalidParameter(
            "scenario has several nodes but no overlapping pair".into(),
        ));
    }
    let per_trial: Vec<Vec<(TrialStats, f64)>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(t);
            run_one(scenario, config, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<PointStats> = config
        .snr_db
        .iter()
        .map(|&snr_db| PointStats {
            snr_db,
            stats: TrialStats::default(),
            capacity: Vec::with_capacity(n_trials as usize),
        })
        .collect();
    for trial in per_trial {
        for (point, (stats, cap)) in out.iter_mut().zip(trial) {
            point.stats += stats;
            point.capacity.push(cap);
        }
    }
    Ok(out)
}

struct Link {
    desired: NodeId,
    interferer: Option<NodeId>,
    s_desired: ChannelMatrix,
    s_interferer: Option<ChannelMatrix>,
    p_desired: f64,
    p_interferer: f64,
    /// Noise variance at 0 dB.
    noise_ref: f64,
}

/// Composite beamformer per participating node, and their normalization.
type Beamforming = (BTreeMap<NodeId, CompositeBeamformer>, NormalizationG);

struct Realization {
    links: Vec<Link>,
    beamformers: BTreeMap<NodeId, CompositeBeamformer>,
    g: NormalizationG,
}

fn draw_channel(config: &LinkConfig, gain: f64, rng: &mut ChaCha8Rng) -> Result<ChannelMatrix> {
    let base = match config.fading {
        Fading::Nakagami(p) => sample_channel(&derive_moments(&p)?, config.dim, rng)?,
        Fading::Awgn => ChannelMatrix::identity(config.dim),
    };
    Ok(base.scaled(gain.sqrt()))
}

fn gain_to(scenario: &NetworkScenario, node: NodeId, point: &Point) -> f64 {
    let n = scenario.node(node).expect("overlap ids resolve");
    scenario.path_gain(n.position.distance(point))
}

fn tx_power(scenario: &NetworkScenario, node: NodeId) -> f64 {
    scenario.node(node).expect("link ids resolve").tx_power
}

/// Channels for every link, plus drivers when the fading is not AWGN.
/// Channel draws for all overlaps happen before any solve, so a failed solve
/// leaves the stream position unchanged.
fn realize(
    scenario: &NetworkScenario,
    config: &LinkConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Link>, Result<Beamforming>)> {
    let omega = config.omega();
    let dim = config.dim;
    if scenario.overlaps().is_empty() {
        let node = &scenario.nodes()[0];
        let gain = scenario.path_gain(scenario.reference_distance);
        let link = Link {
            desired: node.id,
            interferer: None,
            s_desired: draw_channel(config, gain, rng)?,
            s_interferer: None,
            p_desired: node.tx_power,
            p_interferer: 0.0,
            noise_ref: node.tx_power * gain * omega,
        };
        let mut bf = BTreeMap::new();
        bf.insert(node.id, CompositeBeamformer::identity(node.id, dim));
        return Ok((vec![link], Ok((bf, NormalizationG::unit()))));
    }

    // (a at A_C, a at C_A, c at A_C, c at C_A) per overlap
    let mut channels = Vec::with_capacity(scenario.overlaps().len());
    for o in scenario.overlaps() {
        let (a, c) = o.node_pair;
        let (p_ac, p_ca) = (&o.point_in_first, &o.point_in_second);
        channels.push([
            draw_channel(config, gain_to(scenario, a, p_ac), rng)?,
            draw_channel(config, gain_to(scenario, a, p_ca), rng)?,
            draw_channel(config, gain_to(scenario, c, p_ac), rng)?,
            draw_channel(config, gain_to(scenario, c, p_ca), rng)?,
        ]);
    }

    let mut links = Vec::with_capacity(2 * channels.len());
    for (o, [a_ac, a_ca, c_ac, c_ca]) in scenario.overlaps().iter().zip(&channels) {
        let (a, c) = o.node_pair;
        let g_a = gain_to(scenario, a, &o.point_in_first);
        let g_c = gain_to(scenario, c, &o.point_in_second);
        links.push(Link {
            desired: a,
            interferer: Some(c),
            s_desired: a_ac.clone(),
            s_interferer: Some(c_ac.clone()),
            p_desired: tx_power(scenario, a),
            p_interferer: tx_power(scenario, c),
            noise_ref: tx_power(scenario, a) * g_a * omega,
        });
        links.push(Link {
            desired: c,
            interferer: Some(a),
            s_desired: c_ca.clone(),
            s_interferer: Some(a_ca.clone()),
            p_desired: tx_power(scenario, c),
            p_interferer: tx_power(scenario, a),
            noise_ref: tx_power(scenario, c) * g_c * omega,
        });
    }

    let beamformers = match config.fading {
        Fading::Awgn => Ok((
            scenario
                .nodes()
                .iter()
                .map(|n| (n.id, CompositeBeamformer::identity(n.id, dim)))
                .collect(),
            NormalizationG::unit(),
        )),
        Fading::Nakagami(p) => solve_beamformers(scenario, config, &p, &channels),
    };
    Ok((links, beamformers))
}

fn solve_beamformers(
    scenario: &NetworkScenario,
    config: &LinkConfig,
    params: &NakagamiParams,
    channels: &[[ChannelMatrix; 4]],
) -> Result<Beamforming> {
    let moments = derive_moments(params)?;
    let theta = build_rotator(&moments, config.dim, config.rotation_angle);
    let mut drivers: BTreeMap<NodeId, Vec<DriverMatrix>> = BTreeMap::new();
    for (o, [a_ac, a_ca, c_ac, c_ca]) in scenario.overlaps().iter().zip(channels) {
        let (a, c) = o.node_pair;
        // top block: the point where the owner interferes
        let s_a = stack(a_ca, a_ac)?;
        let s_c = stack(c_ca, c_ac)?;
        let problem = CoupledDriverProblem::new((a, c), (&s_a, &s_c, &theta), (&s_c, &s_a, &theta));
        let (m_ac, m_ca) = solve_coupled_drivers(&problem)?;
        drivers.entry(a).or_default().push(m_ac);
        drivers.entry(c).or_default().push(m_ca);
    }
    let composites = drivers
        .values()
        .map(|d| compose(d))
        .collect::<Result<Vec<_>>>()?;
    let g = normalization(&composites)?;
    Ok((composites.into_iter().map(|c| (c.owner, c)).collect(), g))
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

fn unit_noise(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// One trial: per SNR point, the link-summed counters and mean capacity.
fn run_one(
    scenario: &NetworkScenario,
    config: &LinkConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(TrialStats, f64)>> {
    let (links, solved) = realize(scenario, config, rng)?;
    let (beamformers, g) = match solved {
        Ok(v) => v,
        Err(e) if e.is_numerical() => {
            return Ok(erased(config, links.len()));
        }
        Err(e) => return Err(e),
    };
    let realization = Realization {
        links,
        beamformers,
        g,
    };

    let n_links = realization.links.len() as f64;
    let mut out = vec![(TrialStats::default(), 0.0); config.snr_db.len()];
    for link in &realization.links {
        for (acc, (stats, cap)) in out
            .iter_mut()
            .zip(run_link(&realization, link, config, rng)?)
        {
            acc.0 += stats;
            acc.1 += cap / n_links;
        }
    }
    Ok(out)
}

fn erased(config: &LinkConfig, n_links: usize) -> Vec<(TrialStats, f64)> {
    let mut stats = TrialStats::default();
    for _ in 0..n_links {
        stats.record_erasure();
    }
    vec![(stats, 0.0); config.snr_db.len()]
}

fn run_link(
    r: &Realization,
    link: &Link,
    config: &LinkConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(TrialStats, f64)>> {
    let scheme = config.modulation;
    let bits = random_bits(config.packet_bits, rng);
    let other_bits = random_bits(config.packet_bits, rng);
    let x = transmit_block(&modulate(&bits, scheme)?, config.dim, config.mimo_mode)?;
    let noise = unit_noise(config.dim, x.ncols(), rng);

    let m_d = &r.beamformers[&link.desired].entries;
    let p_d = link.p_desired;
    let mut tx = vec![Transmission {
        channel: &link.s_desired,
        beamformer: m_d,
        symbols: &x,
        power: p_d,
    }];
    let x_other;
    if let (InterferenceModel::Additive, Some(i), Some(s_i)) =
        (config.interference, link.interferer, &link.s_interferer)
    {
        x_other = transmit_block(
            &modulate(&other_bits, scheme)?,
            config.dim,
            config.mimo_mode,
        )?;
        tx.push(Transmission {
            channel: s_i,
            beamformer: &r.beamformers[&i].entries,
            symbols: &x_other,
            power: link.p_interferer,
        });
    }
    let signal = received_signal(
        &tx,
        &r.g,
        config.normalization,
        &CMatrix::zeros(config.dim, x.ncols()),
    )?;

    let scale = config.normalization.amplitude_scale(&r.g);
    let h = link.s_desired.entries() * m_d * C64::new(scale, 0.0);
    let h_rx = &h * C64::new(p_d.sqrt(), 0.0);
    let equalizer = match left_pseudoinverse_of(
        &detection_channel(&h_rx, config.mimo_mode),
        DEFAULT_RANK_TOLERANCE,
    ) {
        Ok(w) => w,
        Err(e) if e.is_numerical() => return Ok(erased(config, 1)),
        Err(e) => return Err(e),
    };
    // W (A + sigma N) = W A + sigma W N
    let z_signal = &equalizer * signal;
    let z_noise = &equalizer * noise;

    config
        .snr_db
        .iter()
        .map(|&snr_db| {
            let sigma2 = link.noise_ref / db_to_linear(snr_db);
            let z = &z_signal + &z_noise * C64::new(sigma2.sqrt(), 0.0);
            let decided = slice_block(&z, scheme);
            let mut stats = TrialStats::default();
            stats.record_packet(&bits, &decided, scheme.bits_per_symbol());
            let cap = capacity(effective_snr(p_d, &h, sigma2, &NormalizationG::unit())?)?;
            Ok((stats, cap))
        })
        .collect()
}
