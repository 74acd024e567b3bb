//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use idt_core::beamformer::{
    build_rotator, left_pseudoinverse, solve_coupled_drivers, CoupledDriverProblem,
};
use idt_core::channel::{
    derive_moments, expected_gram, sample_channel, stack, NakagamiParams, StackedChannel,
};
use idt_core::experiment::{render_csv, run_experiment, ExperimentConfig, ExperimentKind};
use idt_core::link::{run_trials, Fading, LinkConfig};
use idt_core::metrics::{
    packet_error_rate, stream_error, wilson_interval, MetricSeries, ParamValue, PerFormula,
    StreamErrorParams,
};
use idt_core::topology::{NetworkScenario, Node, NodeId, Point};
use idt_core::{CMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;
use std::f64::consts::PI;
use std::time::Instant;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn random_stack(params: &NakagamiParams, rng: &mut ChaCha8Rng) -> StackedChannel {
    let mo = derive_moments(params).unwrap();
    let top = sample_channel(&mo, 2, rng).unwrap();
    let bottom = sample_channel(&mo, 2, rng).unwrap();
    stack(&top, &bottom).unwrap()
}

/// `(S^H S)^{-1} S^H` through an explicit inverse, independent of the SVD path.
fn normal_equations_pinv(s: &CMatrix) -> Option<CMatrix> {
    let sh = s.adjoint();
    (&sh * s).try_inverse().map(|inv| inv * sh)
}

/// Jacobi iteration on the two driver equations.
fn fixed_point(p: &CoupledDriverProblem<'_>) -> Option<(CMatrix, CMatrix)> {
    let pa = normal_equations_pinv(p.s_a.combined())?;
    let pc = normal_equations_pinv(p.s_c.combined())?;
    let mut x = CMatrix::zeros(2, 2);
    let mut y = CMatrix::zeros(2, 2);
    for _ in 0..100_000 {
        let nx = &pa * (&p.theta_a.entries - p.s_a_prime.combined() * &y);
        let ny = &pc * (&p.theta_c.entries - p.s_c_prime.combined() * &x);
        let step = (&nx - &x).norm() + (&ny - &y).norm();
        x = nx;
        y = ny;
        if !step.is_finite() || step > 1e12 {
            return None;
        }
        if step < 1e-14 * (1.0 + x.norm() + y.norm()) {
            return Some((x, y));
        }
    }
    None
}

fn moment_fidelity() -> Outcome {
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for (i, (m, omega)) in [(0.5, 1.0), (1.0, 1.0), (3.0, 2.0)].into_iter().enumerate() {
        let params = NakagamiParams::new(m, omega).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let mut acc = CMatrix::zeros(4, 4);
        for _ in 0..n {
            let s = random_stack(&params, &mut rng);
            acc += s.combined() * s.combined().adjoint();
        }
        acc /= C64::new(n as f64, 0.0);
        let want = expected_gram(&derive_moments(&params).unwrap(), 2);
        for (a, b) in acc.iter().zip(want.iter()) {
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    outcome(
        worst <= 0.02,
        format!("max relative gram error {:.3}% (limit 2%)", 100.0 * worst),
    )
}

fn solver_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let (mut worst_res, mut worst_gap) = (0.0f64, 0.0f64);
    let (mut compared, mut instances) = (0, 0);
    for i in 0..150 {
        let m = [0.5, 1.0, 3.0][i % 3];
        let params = NakagamiParams::new(m, 1.0).unwrap();
        let theta = build_rotator(&derive_moments(&params).unwrap(), 2, PI);
        let s_a = random_stack(&params, &mut rng);
        let s_c = random_stack(&params, &mut rng);
        let prob = CoupledDriverProblem::new(
            (NodeId(0), NodeId(1)),
            (&s_a, &s_c, &theta),
            (&s_c, &s_a, &theta),
        );
        let Ok((m_ac, m_ca)) = solve_coupled_drivers(&prob) else {
            return outcome(false, format!("instance {i} had no unique solution"));
        };
        instances += 1;
        let (ra, rc) = prob.residuals(&m_ac.entries, &m_ca.entries).unwrap();
        worst_res = worst_res.max(ra).max(rc);
        if let Some((x, y)) = fixed_point(&prob) {
            compared += 1;
            worst_gap = worst_gap
                .max((&m_ac.entries - x).norm())
                .max((&m_ca.entries - y).norm());
        }
    }
    outcome(
        worst_res <= 1e-10 && worst_gap <= 1e-8 && instances >= 100,
        format!(
            "{instances} instances, max residual {worst_res:.1e} (limit 1e-10), \
             max gap to fixed point {worst_gap:.1e} over {compared} converged (limit 1e-8)"
        ),
    )
}

fn pseudoinverse_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let params = NakagamiParams::new([0.5, 1.0, 3.0][i % 3], 1.0).unwrap();
        let s = random_stack(&params, &mut rng);
        let p = left_pseudoinverse(&s).unwrap();
        worst = worst.max((p * s.combined() - CMatrix::identity(2, 2)).norm());
    }
    outcome(
        worst <= 1e-10,
        format!("max |PS - I| {worst:.1e} over 1000 channels (limit 1e-10)"),
    )
}

fn single_node() -> NetworkScenario {
    let node = Node::new(0, Point { x: 0.0, y: 0.0 }, 6.0, 1.0).unwrap();
    NetworkScenario::new(vec![node], 3.0, 1.0, &[]).unwrap()
}

fn awgn_calibration() -> Outcome {
    let cfg = LinkConfig::new(1, Fading::Awgn, vec![0.0, 2.0, 4.0, 6.0]);
    let points = run_trials(&single_node(), &cfg, 450, 400).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in &points {
        let n = p.stats.bits_sent as f64;
        let want = q((2.0 * 10f64.powf(p.snr_db / 10.0)).sqrt());
        let got = p.stats.bit_errors as f64 / n;
        let z = (got - want) / (want * (1.0 - want) / n).sqrt();
        pass &= z.abs() <= 3.0 && n >= 1e6;
        parts.push(format!(
            "{} dB {got:.5} vs {want:.5} ({z:+.2} se)",
            p.snr_db
        ));
    }
    outcome(pass, parts.join(", "))
}

fn config(kind: ExperimentKind, trials: u64, snr: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.trials = trials;
    cfg.snr = snr.parse().unwrap();
    cfg
}

fn at(series: &MetricSeries, snr: f64) -> &idt_core::metrics::MetricPoint {
    series.point(snr).expect("swept SNR point")
}

fn capacity_trend() -> Outcome {
    let series = run_experiment(&config(ExperimentKind::CapacityVsNodes, 1000, "5:5:1")).unwrap();
    let caps: Vec<_> = series.iter().map(|s| at(s, 5.0).capacity).collect();
    let pass = caps.windows(2).all(|w| w[1].high < w[0].low);
    let text: Vec<String> = series
        .iter()
        .zip(&caps)
        .map(|(s, c)| {
            format!(
                "N={} {:.4} [{:.4}, {:.4}]",
                s.param_value, c.value, c.low, c.high
            )
        })
        .collect();
    outcome(pass, format!("capacity at 5 dB: {}", text.join(", ")))
}

fn distance_trend() -> Outcome {
    let snr = 25.0;
    let series = run_experiment(&config(ExperimentKind::PerVsDistance, 1000, "25:25:1")).unwrap();
    let pers: Vec<_> = series.iter().map(|s| at(s, snr).per).collect();
    let pass = pers.windows(2).all(|w| w[1].high < w[0].low);
    let text: Vec<String> = series
        .iter()
        .zip(&pers)
        .map(|(s, p)| {
            format!(
                "d={} {:.4} [{:.4}, {:.4}]",
                s.param_value, p.value, p.low, p.high
            )
        })
        .collect();
    outcome(pass, format!("PER at {snr} dB: {}", text.join(", ")))
}

fn diversity_slope() -> Outcome {
    let series =
        run_experiment(&config(ExperimentKind::BerVsDimension, 100_000, "8:12:4")).unwrap();
    let slope =
        |s: &MetricSeries| (at(s, 8.0).ber.value.log10() - at(s, 12.0).ber.value.log10()) / 4.0;
    let find = |m: f64| {
        series
            .iter()
            .find(|s| s.param_value == ParamValue::Number(m))
            .expect("dimension in sweep")
    };
    let (s2, s4) = (slope(find(2.0)), slope(find(4.0)));
    let ratio = s4 / s2;
    outcome(
        ratio >= 1.5,
        format!("slope M=2 {s2:.4}/dB, M=4 {s4:.4}/dB, ratio {ratio:.3} (need >= 1.5)"),
    )
}

fn per_model_consistency() -> Outcome {
    let cfg = LinkConfig::new(1, Fading::Awgn, vec![8.0]);
    let trials = 4000;
    let p = &run_trials(&single_node(), &cfg, trials, 800).unwrap()[0];
    let ser = p.stats.symbol_errors as f64 / p.stats.symbols_sent as f64;
    let stream = StreamErrorParams {
        d_min: 2.0,
        bits: cfg.packet_bits as u64,
        code_rate: 1.0,
        length: 1,
        ser,
    };
    let model = packet_error_rate(&[stream], PerFormula::Conventional).unwrap();
    let counted = wilson_interval(p.stats.packet_errors, p.stats.packets_sent)
        .unwrap()
        .value;
    let rel = (model - counted).abs() / counted;

    // literal form: bounded everywhere, and PER = 1 at p_e = 0
    let mut literal_ok = true;
    for i in 0..=100 {
        for d_min in [0.5, std::f64::consts::SQRT_2, 2.0] {
            let s = StreamErrorParams {
                ser: i as f64 / 100.0,
                d_min,
                ..stream
            };
            let v = packet_error_rate(&[s, s], PerFormula::Literal).unwrap();
            literal_ok &= (0.0..=1.0).contains(&v)
                && (0.0..=1.0).contains(&stream_error(&s, PerFormula::Literal));
        }
    }
    let zero_pe = StreamErrorParams {
        ser: 0.5,
        d_min: 0.5,
        ..stream
    };
    literal_ok &= stream_error(&zero_pe, PerFormula::Literal) == 0.0
        && packet_error_rate(&[zero_pe], PerFormula::Literal).unwrap() == 1.0;
    outcome(
        rel <= 0.2 && literal_ok,
        format!(
            "model {model:.4} vs counted {counted:.4} at 8 dB, relative gap {:.2}% (limit 20%); literal form bounded: {literal_ok}",
            100.0 * rel
        ),
    )
}

fn determinism() -> Outcome {
    let mut identical = true;
    let mut bytes = 0;
    for kind in [
        ExperimentKind::CapacityVsNodes,
        ExperimentKind::PerVsDistance,
        ExperimentKind::PerVsModulation,
        ExperimentKind::BerVsDimension,
        ExperimentKind::Custom,
    ] {
        let run = |workers| {
            let mut cfg = config(kind, 30, "0:20:2");
            cfg.seed = 900;
            cfg.workers = Some(workers);
            render_csv(&run_experiment(&cfg).unwrap()).unwrap()
        };
        let first = run(1);
        identical &= first == run(8) && first == run(1) && first == run(8);
        bytes += first.len();
    }
    outcome(
        identical,
        format!("5 experiments x 2 runs on 1 and 8 workers, {bytes} bytes of CSV each pass"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("moment fidelity", moment_fidelity),
        ("coupled solver correctness", solver_correctness),
        ("pseudoinverse identity", pseudoinverse_identity),
        ("AWGN BPSK calibration", awgn_calibration),
        ("capacity falls with node count", capacity_trend),
        ("PER falls with node spacing", distance_trend),
        ("diversity slope ratio", diversity_slope),
        ("PER model consistency", per_model_consistency),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {name}: {verdict} ({:.1}s) {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
