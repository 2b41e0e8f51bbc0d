//! End-to-end runs of the `decoyqkd` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decoyqkd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identical_waveforms_have_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let s = fixture("signal_dual_peak.csv");
    let o = run(
        &["trace-distance", "--signal", path(&s), "--decoy", path(&s)],
        dir.path(),
    );
    assert_eq!(stdout(&o).trim(), "D[time] = 0");
    assert!(dir.path().join("signal_axis0.csv").exists());
}

#[test]
fn modulator_fixture_is_nearly_indistinguishable() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "trace-distance",
            "--signal",
            path(&fixture("signal_modulator.csv")),
            "--decoy",
            path(&fixture("decoy_modulator.csv")),
        ],
        dir.path(),
    );
    let text = stdout(&o);
    let d: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(d > 0.0 && d < 0.01, "{text}");
}

#[test]
fn joint_distance_exceeds_each_axis() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "trace-distance",
            "--joint",
            "--signal",
            path(&fixture("signal_laser_time.csv")),
            "--decoy",
            path(&fixture("decoy_laser_time.csv")),
            "--signal",
            path(&fixture("signal_laser_freq.csv")),
            "--decoy",
            path(&fixture("decoy_laser_freq.csv")),
        ],
        dir.path(),
    );
    let text = stdout(&o);
    let values: Vec<f64> = text
        .lines()
        .map(|l| l.rsplit(' ').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3, "{text}");
    assert!(text.lines().last().unwrap().starts_with("D[joint]"));
    assert!(values[2] > values[0] && values[2] > values[1]);
    assert!(dir.path().join("signal_joint.csv").exists());
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--regime",
        "imperfect",
        "--d",
        "1e-3",
        "--distance-step",
        "5",
        "--plot",
    ];
    let first = stdout(&run(&args, a.path()));
    let second = stdout(&run(&args, b.path()));
    assert_eq!(first, second);
    assert_eq!(first.trim(), "imperfect D=0.00100000: max distance 45 km");
    for name in ["rate_imperfect_D1e-3.csv", "summary.csv", "rates.gp"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name} differs");
    }
    let csv = fs::read_to_string(a.path().join("rate_imperfect_D1e-3.csv")).unwrap();
    assert!(csv.starts_with("length_km,rate,mu,nu\n"));
    assert_eq!(csv.lines().count(), 1 + 33);
}

#[test]
fn example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/modulator_source.json");
    let o = run(&["simulate", "--config", path(&config)], dir.path());
    let text = stdout(&o);
    assert!(
        text.contains("imperfect D=0.00361787: max distance 22 km"),
        "{text}"
    );
    assert!(
        text.contains("calibrated D=0.00361787: max distance 83 km"),
        "{text}"
    );
}

#[test]
fn attack_on_identical_waveforms_finds_no_breach() {
    let dir = tempfile::tempdir().unwrap();
    let s = fixture("signal_dual_peak.csv");
    let o = run(
        &[
            "attack",
            "--signal",
            path(&s),
            "--decoy",
            path(&s),
            "--distance-step",
            "10",
        ],
        dir.path(),
    );
    assert_eq!(stdout(&o), "D = 0\nno breach\n");
}

#[test]
fn attack_on_dual_peak_fixture_breaches() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "attack",
            "--signal",
            path(&fixture("signal_dual_peak.csv")),
            "--decoy",
            path(&fixture("decoy_dual_peak.csv")),
            "--distance-start",
            "30",
            "--distance-stop",
            "70",
            "--plot",
        ],
        dir.path(),
    );
    let text = stdout(&o);
    let km: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("first breach at "))
        .and_then(|l| l.strip_suffix(" km"))
        .expect("a breach")
        .parse()
        .unwrap();
    assert!((40.0..=60.0).contains(&km), "{text}");
    for name in ["attack.csv", "windows.txt", "attack.gp"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn bad_intensities_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = fixture("signal_dual_peak.csv");
    let o = run(
        &[
            "attack",
            "--signal",
            path(&s),
            "--decoy",
            path(&s),
            "--mu",
            "0.1",
            "--nu",
            "0.2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "trace-distance",
            "--signal",
            "/nonexistent.csv",
            "--decoy",
            "/nonexistent.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}
