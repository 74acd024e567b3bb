use idt_core::experiment::{emit_csv, load_config, run_experiment, CSV_HEADER};
use idt_core::metrics::ParamValue;

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn file_to_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(&write_config(
        dir.path(),
        "experiment = \"per_vs_modulation\"\nseed = 11\ntrials = 12\n\n[snr]\nstart = 0\nstop = 12\nstep = 4\n",
    ))
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    emit_csv(&run_experiment(&cfg).unwrap(), &a).unwrap();
    emit_csv(&run_experiment(&cfg).unwrap(), &b).unwrap();
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap().as_slice());
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    // 4 SNR points x 2 modulations x 5 metrics
    assert_eq!(text.lines().count(), 1 + 40);
    for row in text.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 9);
        let (v, lo, hi): (f64, f64, f64) = (
            f[4].parse().unwrap(),
            f[5].parse().unwrap(),
            f[6].parse().unwrap(),
        );
        assert!(lo <= v && v <= hi, "{row}");
        assert_eq!((f[7], f[8]), ("12", "11"));
    }
}

#[test]
fn capacity_does_not_grow_with_node_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(&write_config(
        dir.path(),
        "experiment = \"capacity_vs_nodes\"\ntrials = 300\n\n[snr]\nstart = 0\nstop = 20\nstep = 5\n",
    ))
    .unwrap();
    let series = run_experiment(&cfg).unwrap();
    assert_eq!(
        series
            .iter()
            .map(|s| s.param_value.clone())
            .collect::<Vec<_>>(),
        [2.0, 4.0, 8.0].map(ParamValue::Number).to_vec()
    );
    for w in series.windows(2) {
        for (small, large) in w[0].points.iter().zip(&w[1].points) {
            assert!(
                large.capacity.value <= small.capacity.value,
                "{} dB",
                small.snr_db
            );
        }
    }
}

#[test]
fn explicit_topology_with_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(&write_config(
        dir.path(),
        r#"experiment = "custom"
trials = 8

[snr]
start = 10
stop = 10
step = 1

[link]
interference = "additive"

[[topology.nodes]]
id = 3
x = 0.0
y = 0.0
radius = 6.0

[[topology.nodes]]
id = 7
x = 9.0
y = 0.0
radius = 5.0
tx_power = 2.0

[[topology.offsets]]
pair = [3, 7]
first = -0.5
second = 0.5
"#,
    ))
    .unwrap();
    let series = run_experiment(&cfg).unwrap();
    assert_eq!(series.len(), 1);
    let p = &series[0].points[0];
    assert_eq!(p.erasures, 0);
    assert!(p.capacity.value > 0.0);
}
