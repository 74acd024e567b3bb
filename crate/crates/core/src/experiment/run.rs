//! Sweep execution: one [`MetricSeries`] per swept value.

use super::config::ExperimentConfig;
use crate::link::{run_trials, Fading, LinkConfig, PointStats};
use crate::metrics::{
    estimate_rates, mean_interval, packet_error_rate, Estimate, MetricPoint, MetricSeries,
    PerFormula, StreamErrorParams,
};
use crate::topology::NetworkScenario;
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

/// Runs every series of the configured sweep. Nothing is returned unless all
/// series complete.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricSeries>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    config
        .sweep_values()
        .into_iter()
        .map(|value| {
            let (scenario, link) = config.series_setup(&value)?;
            let points =
                pool.install(|| run_trials(&scenario, &link, config.trials, config.seed))?;
            let points = points
                .iter()
                .map(|p| point_metrics(p, &link, config.link.per_formula))
                .collect::<Result<Vec<_>>>()?;
            Ok(MetricSeries {
                param_name: config.experiment.param_name().to_string(),
                param_value: value,
                points,
                scenario_hash: scenario_hash(&scenario, &link),
                seed: config.seed,
                trials: config.trials,
            })
        })
        .collect()
}

/// Rates, capacity and the analytic PER evaluated at the measured SER and
/// at both ends of its interval.
pub fn point_metrics(
    p: &PointStats,
    link: &LinkConfig,
    formula: PerFormula,
) -> Result<MetricPoint> {
    if p.stats.bits_sent == 0 {
        return Err(Error::InvalidParameter(format!(
            "every packet at {} dB was erased",
            p.snr_db
        )));
    }
    let rates = estimate_rates(&p.stats)?;
    let bps = link.modulation.bits_per_symbol() as u64;
    let per_stream_bits = (link.packet_bits / link.streams()) as u64;
    let model = |ser: f64| {
        let stream = StreamErrorParams {
            d_min: link.modulation.min_distance(),
            bits: per_stream_bits,
            code_rate: 1.0,
            length: bps,
            ser: ser.clamp(0.0, 1.0),
        };
        packet_error_rate(&vec![stream; link.streams()], formula)
    };
    let (a, b) = (model(rates.ser.low)?, model(rates.ser.high)?);
    let per_model = Estimate {
        value: model(rates.ser.value)?,
        low: a.min(b),
        high: a.max(b),
    };
    Ok(MetricPoint {
        snr_db: p.snr_db,
        capacity: mean_interval(&p.capacity)?,
        ber: rates.ber,
        ser: rates.ser,
        per: rates.per,
        per_model,
        erasures: p.stats.erasures,
    })
}

/// SHA-256 over a canonical text form of everything that determines a
/// series besides the seed and trial count.
pub fn scenario_hash(scenario: &NetworkScenario, link: &LinkConfig) -> String {
    let mut s = String::new();
    for n in scenario.nodes() {
        let _ = writeln!(
            s,
            "node {} {:e} {:e} {:e} {:e}",
            n.id, n.position.x, n.position.y, n.range_radius, n.tx_power
        );
    }
    for o in scenario.overlaps() {
        let (a, b) = (o.point_in_first, o.point_in_second);
        let _ = writeln!(
            s,
            "overlap {} {} {:e} {:e} {:e} {:e}",
            o.node_pair.0, o.node_pair.1, a.x, a.y, b.x, b.y
        );
    }
    let _ = writeln!(
        s,
        "pathloss {:e} {:e}",
        scenario.path_loss_exponent, scenario.reference_distance
    );
    let fading = match link.fading {
        Fading::Nakagami(p) => format!("nakagami {:e} {:e}", p.m, p.omega_total),
        Fading::Awgn => "awgn".to_string(),
    };
    let _ = writeln!(
        s,
        "link {} {fading} {:e} {} {} {:?} {:?} {:?}",
        link.dim,
        link.rotation_angle,
        link.modulation.name(),
        link.packet_bits,
        link.mimo_mode,
        link.interference,
        link.normalization
    );
    for snr in &link.snr_db {
        let _ = write!(s, "{snr:e} ");
    }
    Sha256::digest(s.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ExperimentKind;
    use crate::link::{ModulationScheme, TrialStats};
    use crate::metrics::ParamValue;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.trials = 4;
        cfg.snr = "0:10:5".parse().unwrap();
        cfg
    }

    #[test]
    fn one_series_per_value() {
        for kind in [
            ExperimentKind::CapacityVsNodes,
            ExperimentKind::PerVsDistance,
            ExperimentKind::PerVsModulation,
            ExperimentKind::BerVsDimension,
            ExperimentKind::Custom,
        ] {
            let cfg = small(kind);
            let series = run_experiment(&cfg).unwrap();
            assert_eq!(series.len(), cfg.sweep_values().len());
            for s in &series {
                assert_eq!(s.points.len(), 3);
                assert_eq!(s.param_name, kind.param_name());
                assert_eq!(s.scenario_hash.len(), 64);
                for p in &s.points {
                    for (_, e) in p.named() {
                        assert!(e.low <= e.value && e.value <= e.high, "{kind}: {e:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hash_tracks_the_setup() {
        let cfg = small(ExperimentKind::PerVsDistance);
        let (sc5, l5) = cfg.series_setup(&ParamValue::Number(5.0)).unwrap();
        let (sc8, l8) = cfg.series_setup(&ParamValue::Number(8.0)).unwrap();
        assert_eq!(scenario_hash(&sc5, &l5), scenario_hash(&sc5, &l5.clone()));
        assert_ne!(scenario_hash(&sc5, &l5), scenario_hash(&sc8, &l8));
        let mut q = l5.clone();
        q.modulation = ModulationScheme::Qpsk;
        assert_ne!(scenario_hash(&sc5, &l5), scenario_hash(&sc5, &q));
    }

    #[test]
    fn per_model_uses_symbol_exponent() {
        let cfg = small(ExperimentKind::Custom);
        let (_, mut link) = cfg
            .series_setup(&ParamValue::Label("custom".into()))
            .unwrap();
        link.mimo_mode = crate::link::MimoMode::Diversity;
        let p = PointStats {
            snr_db: 0.0,
            stats: TrialStats {
                bits_sent: 2304 * 10,
                bit_errors: 3,
                symbols_sent: 2304 * 10,
                symbol_errors: 3,
                packets_sent: 10,
                packet_errors: 3,
                erasures: 0,
            },
            capacity: vec![1.0; 10],
        };
        let m = point_metrics(&p, &link, PerFormula::Conventional).unwrap();
        let ser: f64 = 3.0 / 23040.0;
        let want = 1.0 - (1.0 - ser).powf(2304.0);
        assert!((m.per_model.value - want).abs() < 1e-12);
        assert!(m.per_model.low <= m.per_model.value && m.per_model.value <= m.per_model.high);
        let all_erased = PointStats {
            stats: TrialStats {
                packets_sent: 1,
                packet_errors: 1,
                erasures: 1,
                ..Default::default()
            },
            ..p
        };
        assert!(point_metrics(&all_erased, &link, PerFormula::Conventional).is_err());
    }
}
