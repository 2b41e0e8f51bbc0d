//! Regenerates the synthetic waveform fixtures in `fixtures/`.
//!
//! ```text
//! cargo run -p decoy-qkd --example make_fixtures [out_dir]
//! ```
//!
//! * `*_dual_peak`: pump-current modulated laser. The signal pulse has a
//!   relaxation-oscillation satellite that the decoy pulse mostly lacks.
//! * `*_modulator`: external intensity modulator. Identical pulse shapes, so the
//!   residual distance is measurement noise.
//! * `*_laser_time`, `*_laser_freq`: arrival time and optical frequency of a
//!   current-modulated laser, combined as independent observables.

use std::fs;
use std::path::{Path, PathBuf};

use decoy_qkd::distinguishability::{
    ingest_waveform, normalize_pair, product_joint, trace_distance,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gauss(x: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((x - centre) / width).powi(2)).exp()
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn write_trace(dir: &Path, stem: &str, label: &str, units: &str, samples: &[(f64, f64)]) {
    let mut text = String::from("coordinate,amplitude\n");
    for (x, y) in samples {
        text.push_str(&format!("{x},{y}\n"));
    }
    fs::write(dir.join(format!("{stem}.csv")), text).expect("write csv");
    let meta = format!("{{\n  \"axis_label\": \"{label}\",\n  \"units\": \"{units}\"\n}}\n");
    fs::write(dir.join(format!("{stem}.json")), meta).expect("write sidecar");
}

fn pair_distance(dir: &Path, signal: &str, decoy: &str) -> f64 {
    let s = ingest_waveform(dir.join(format!("{signal}.csv"))).unwrap();
    let d = ingest_waveform(dir.join(format!("{decoy}.csv"))).unwrap();
    let (fs, fd) = normalize_pair(&s, &d, None).unwrap();
    trace_distance(&fs, &fd).unwrap()
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(&out).expect("create output dir");

    // pump-current modulation: 20 ps sampling over 1.2 ns
    let t = grid(0.0, 1200.0, 20.0);
    let width = 65.0;
    let signal: Vec<_> = t
        .iter()
        .map(|&x| (x, gauss(x, 450.0, width) + 0.32 * gauss(x, 800.0, width)))
        .collect();
    let decoy: Vec<_> = t
        .iter()
        .map(|&x| {
            (
                x,
                0.35 * (gauss(x, 515.0, width) + 0.071 * gauss(x, 800.0, width)),
            )
        })
        .collect();
    write_trace(&out, "signal_dual_peak", "time", "ps", &signal);
    write_trace(&out, "decoy_dual_peak", "time", "ps", &decoy);

    // external modulator: same shape, noisy acquisition
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d);
    let noise = Normal::new(0.0, 2.1e-3).unwrap();
    let t = grid(0.0, 1200.0, 10.0);
    let shape = |x: f64| gauss(x, 600.0, 80.0);
    let signal: Vec<_> = t
        .iter()
        .map(|&x| (x, shape(x) + noise.sample(&mut rng)))
        .collect();
    let decoy: Vec<_> = t
        .iter()
        .map(|&x| (x, 0.3 * shape(x) + 0.3 * noise.sample(&mut rng)))
        .collect();
    write_trace(&out, "signal_modulator", "time", "ps", &signal);
    write_trace(&out, "decoy_modulator", "time", "ps", &decoy);

    // current-modulated laser: timing shift and chirp
    let t = grid(0.0, 1000.0, 10.0);
    let signal: Vec<_> = t.iter().map(|&x| (x, gauss(x, 500.0, 60.0))).collect();
    let decoy: Vec<_> = t
        .iter()
        .map(|&x| (x, 0.4 * gauss(x, 517.5, 60.0)))
        .collect();
    write_trace(&out, "signal_laser_time", "time", "ps", &signal);
    write_trace(&out, "decoy_laser_time", "time", "ps", &decoy);
    let f = grid(-10.0, 10.0, 0.2);
    let signal: Vec<_> = f.iter().map(|&x| (x, gauss(x, 0.0, 2.0))).collect();
    let decoy: Vec<_> = f.iter().map(|&x| (x, 0.4 * gauss(x, 0.4, 2.0))).collect();
    write_trace(&out, "signal_laser_freq", "frequency", "GHz", &signal);
    write_trace(&out, "decoy_laser_freq", "frequency", "GHz", &decoy);

    println!(
        "dual peak  D = {:.6}",
        pair_distance(&out, "signal_dual_peak", "decoy_dual_peak")
    );
    println!(
        "modulator  D = {:.6}",
        pair_distance(&out, "signal_modulator", "decoy_modulator")
    );
    let load = |stem: &str| ingest_waveform(out.join(format!("{stem}.csv"))).unwrap();
    let (st, dt) =
        normalize_pair(&load("signal_laser_time"), &load("decoy_laser_time"), None).unwrap();
    let (sf, df) =
        normalize_pair(&load("signal_laser_freq"), &load("decoy_laser_freq"), None).unwrap();
    println!(
        "laser      D_time = {:.6}",
        trace_distance(&st, &dt).unwrap()
    );
    println!(
        "laser      D_freq = {:.6}",
        trace_distance(&sf, &df).unwrap()
    );
    let joint = trace_distance(
        &product_joint(&st, &sf).unwrap(),
        &product_joint(&dt, &df).unwrap(),
    )
    .unwrap();
    println!("laser      D_joint = {joint:.6}");
}
