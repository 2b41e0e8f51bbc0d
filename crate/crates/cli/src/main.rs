//! `decoyqkd`: trace distances, key-rate curves and attack scans from the
//! command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use decoy_qkd::attack::{breach_scan, first_breach};
use decoy_qkd::config::{load_distributions, RunConfig, WaveformPair};
use decoy_qkd::distinguishability::{
    ingest_waveform, normalize_pair, product_joint, trace_distance,
};
use decoy_qkd::key_rate::{max_distance, rate_vs_distance};
use decoy_qkd::report::{
    attack_plot_script, compact, describe_windows, rate_plot_script, sig6, write_breach_csv,
};
use decoy_qkd::{DetectorParams, MismatchSpec, Regime, SideChannelDistribution};

#[derive(Parser)]
#[command(
    name = "decoyqkd",
    version,
    about = "Decoy-state QKD with distinguishable intensity settings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace distance between signal and decoy waveforms.
    TraceDistance(TraceDistanceArgs),
    /// Optimized key rate versus distance.
    Simulate(SimulateArgs),
    /// Photon-number-splitting attack scan against the standard analysis.
    Attack(AttackArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Detector preset; overrides the configured detector.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Waveforms {
    /// Signal waveform CSV; repeat once per axis.
    #[arg(long = "signal")]
    signal: Vec<PathBuf>,
    /// Decoy waveform CSV; repeat once per axis, in the same order.
    #[arg(long = "decoy")]
    decoy: Vec<PathBuf>,
    /// Uniform bin width instead of the native sample spacing.
    #[arg(long)]
    bin_width: Option<f64>,
}

#[derive(Args)]
struct TraceDistanceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    waveforms: Waveforms,
    /// Combine two axes as independent observables.
    #[arg(long)]
    joint: bool,
}

#[derive(Args)]
struct DistanceFlags {
    #[arg(long)]
    distance_start: Option<f64>,
    #[arg(long)]
    distance_stop: Option<f64>,
    #[arg(long)]
    distance_step: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Regime to run; repeatable.
    #[arg(long = "regime")]
    regimes: Vec<Regime>,
    /// Signal/decoy trace distance; repeatable.
    #[arg(long = "d")]
    d: Vec<f64>,
    #[command(flatten)]
    distance: DistanceFlags,
    /// Also write a gnuplot script.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    waveforms: Waveforms,
    /// Signal mean photon number.
    #[arg(long)]
    mu: Option<f64>,
    /// Decoy mean photon number.
    #[arg(long)]
    nu: Option<f64>,
    #[command(flatten)]
    distance: DistanceFlags,
    /// Also write a gnuplot script.
    #[arg(long)]
    plot: bool,
}

/// A bad combination of arguments, reported with the usage exit status.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TraceDistance(args) => cmd_trace_distance(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Attack(args) => cmd_attack(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(preset) = &common.preset {
        DetectorParams::preset(preset)?;
        cfg.detector = decoy_qkd::config::DetectorChoice::Preset(preset.clone());
    }
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Flag-given waveform pairs replace the configured ones.
fn apply_waveforms(cfg: &mut RunConfig, w: &Waveforms) -> Result<()> {
    if w.signal.len() != w.decoy.len() {
        bail!(Usage(format!(
            "got {} --signal and {} --decoy files",
            w.signal.len(),
            w.decoy.len()
        )));
    }
    if !w.signal.is_empty() {
        cfg.mismatch.d_mu_nu = None;
        cfg.mismatch.waveforms = Some(
            w.signal
                .iter()
                .zip(&w.decoy)
                .map(|(s, d)| WaveformPair {
                    signal: s.clone(),
                    decoy: d.clone(),
                })
                .collect(),
        );
    }
    if w.bin_width.is_some() {
        cfg.mismatch.bin_width = w.bin_width;
    }
    Ok(())
}

fn apply_distance(cfg: &mut RunConfig, flags: &DistanceFlags) {
    let g = &mut cfg.distance_grid;
    g.start = flags.distance_start.unwrap_or(g.start);
    g.stop = flags.distance_stop.unwrap_or(g.stop);
    g.step = flags.distance_step.unwrap_or(g.step);
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_distribution(path: &Path, dist: &SideChannelDistribution) -> Result<()> {
    let mut buf = Vec::new();
    dist.write_csv(&mut buf)?;
    write_file(path, buf)
}

fn cmd_trace_distance(args: TraceDistanceArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    apply_waveforms(&mut cfg, &args.waveforms)?;
    let Some(pairs) = cfg.mismatch.waveforms.clone() else {
        bail!(Usage(
            "give --signal/--decoy files or a config with waveforms".into()
        ));
    };
    if args.joint && pairs.len() != 2 {
        bail!(Usage("--joint needs exactly two signal/decoy pairs".into()));
    }
    let dir = output_dir(&cfg)?;

    let mut per_axis = Vec::new();
    for (i, pair) in pairs.iter().enumerate() {
        let s = ingest_waveform(&pair.signal)
            .with_context(|| format!("reading {}", pair.signal.display()))?;
        let d = ingest_waveform(&pair.decoy)
            .with_context(|| format!("reading {}", pair.decoy.display()))?;
        let (fs_, fd) = normalize_pair(&s, &d, cfg.mismatch.bin_width)?;
        let dist = trace_distance(&fs_, &fd)?;
        println!("D[{}] = {}", s.axis_label(), sig6(dist));
        write_distribution(&dir.join(format!("signal_axis{i}.csv")), &fs_)?;
        write_distribution(&dir.join(format!("decoy_axis{i}.csv")), &fd)?;
        per_axis.push((fs_, fd));
    }
    if args.joint {
        let (s0, d0) = &per_axis[0];
        let (s1, d1) = &per_axis[1];
        let js = product_joint(s0, s1)?;
        let jd = product_joint(d0, d1)?;
        println!("D[joint] = {}", sig6(trace_distance(&js, &jd)?));
        write_distribution(&dir.join("signal_joint.csv"), &js)?;
        write_distribution(&dir.join("decoy_joint.csv"), &jd)?;
    }
    Ok(())
}

fn curve_file(regime: Regime, d: f64) -> String {
    if regime == Regime::Standard {
        return "rate_standard.csv".into();
    }
    // measured distances would otherwise give 17-digit file names
    let mut label = format!("{d:e}");
    if label.len() > 8 {
        label = format!("{d:.5e}");
    }
    format!("rate_{}_D{label}.csv", regime.as_str())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if !args.d.is_empty() {
        cfg.mismatch.waveforms = None;
        cfg.mismatch.d_mu_nu = Some(args.d.clone());
    }
    if !args.regimes.is_empty() {
        cfg.regime = None;
        cfg.regimes = Some(args.regimes.clone());
    }
    apply_distance(&mut cfg, &args.distance);
    if cfg.mismatch.d_mu_nu.is_none() && cfg.mismatch.waveforms.is_none() {
        bail!(Usage(
            "give --d values or a config with a mismatch section".into()
        ));
    }
    cfg.validate()?;

    let params = cfg.detector.resolve()?;
    let regimes = cfg.regimes()?;
    let ds = cfg.mismatch_values()?;
    let lengths = cfg.distance_grid.points()?;
    let dir = output_dir(&cfg)?;

    let mut summary = String::from("regime,d_mu_nu,max_distance_km\n");
    let mut plotted = Vec::new();
    for &regime in &regimes {
        // the standard analysis ignores the mismatch, so one curve suffices
        let ds = if regime == Regime::Standard {
            &[0.0][..]
        } else {
            &ds[..]
        };
        for &d in ds {
            let mismatch = MismatchSpec::signal_decoy(d)?;
            let curve =
                rate_vs_distance(&params, &mismatch, regime, &lengths, &cfg.intensity_grid)?;
            let name = curve_file(regime, d);
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            write_file(&dir.join(&name), buf)?;
            let reach = max_distance(&curve);
            let positive = curve.points.iter().any(|p| p.rate > 0.0);
            summary.push_str(&format!("{},{},{}\n", regime.as_str(), d, reach));
            let label = if regime == Regime::Standard {
                regime.to_string()
            } else {
                format!("{regime} D={}", sig6(d))
            };
            if positive {
                println!("{label}: max distance {} km", compact(reach));
            } else {
                println!("{label}: no secure key at any distance");
            }
            plotted.push((name, label));
        }
    }
    write_file(&dir.join("summary.csv"), summary)?;
    if args.plot {
        write_file(
            &dir.join("rates.gp"),
            rate_plot_script(&plotted, "rates.png"),
        )?;
    }
    Ok(())
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    apply_waveforms(&mut cfg, &args.waveforms)?;
    apply_distance(&mut cfg, &args.distance);
    cfg.attack.mu = args.mu.unwrap_or(cfg.attack.mu);
    cfg.attack.nu = args.nu.unwrap_or(cfg.attack.nu);
    let (mu, nu) = (cfg.attack.mu, cfg.attack.nu);
    if !(mu > nu && nu > 0.0) {
        bail!(Usage(format!(
            "attack needs mu > nu > 0 (got mu={mu}, nu={nu})"
        )));
    }
    let Some(pairs) = cfg.mismatch.waveforms.clone() else {
        bail!(Usage(
            "attack needs --signal/--decoy files or configured waveforms".into()
        ));
    };
    let params = cfg.detector.resolve()?;
    let lengths = cfg.distance_grid.points()?;
    let (f_s, f_d) = load_distributions(&pairs, cfg.mismatch.bin_width)?;
    let dir = output_dir(&cfg)?;

    println!("D = {}", sig6(trace_distance(&f_s, &f_d)?));
    let scan = breach_scan(&params, &f_s, &f_d, mu, nu, &lengths)?;
    let mut buf = Vec::new();
    write_breach_csv(&scan, &mut buf)?;
    write_file(&dir.join("attack.csv"), buf)?;
    write_file(&dir.join("windows.txt"), describe_windows(&scan, &f_s))?;
    if args.plot {
        write_file(
            &dir.join("attack.gp"),
            attack_plot_script("attack.csv", "attack.png"),
        )?;
    }
    match first_breach(&scan) {
        Some(l) => println!("first breach at {} km", compact(l)),
        None => println!("no breach"),
    }
    Ok(())
}
