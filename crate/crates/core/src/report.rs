//! Text, CSV and gnuplot output.
//!
//! CSV files keep full precision (shortest round-trip representation).
//! Numbers meant for people go through [`sig6`].

use std::fmt::Write as _;
use std::io::Write;

use crate::attack::BreachPoint;
use crate::distinguishability::SideChannelDistribution;
use crate::error::{Error, Result};

/// Formats `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

/// Formats `x` with `digits` significant digits, switching to scientific
/// notation outside `[1e-4, 1e6)`.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits > 0, "need at least one significant digit");
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{:.*e}", digits - 1, x);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit (9.999995 → 10.00000)
    let carried = s
        .trim_start_matches('-')
        .split('.')
        .next()
        .map_or(0, str::len);
    if exp >= 0 && carried as i32 > exp + 1 && decimals > 0 {
        return format!("{x:.prec$}", prec = decimals - 1);
    }
    s
}

/// [`sig6`] without trailing fractional zeros, for labels.
pub fn compact(x: f64) -> String {
    let s = sig6(x);
    if s.contains('e') || !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes `length_km,r_lower,r_upper,breached,p_ss,p_ds,p_sd,p_dd`; attack
/// columns are empty where no disguising strategy exists.
pub fn write_breach_csv<W: Write>(points: &[BreachPoint], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "length_km",
        "r_lower",
        "r_upper",
        "breached",
        "p_ss",
        "p_ds",
        "p_sd",
        "p_dd",
    ])?;
    for p in points {
        let mut row = vec![
            p.length_km.to_string(),
            p.r_lower.to_string(),
            p.r_upper.map(|r| r.to_string()).unwrap_or_default(),
            p.breached.to_string(),
        ];
        match &p.outcome {
            Some(o) => row.extend(
                [o.guess.p_ss, o.guess.p_ds, o.guess.p_sd, o.guess.p_dd].map(|v| v.to_string()),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Human-readable windows for each distance of a scan.
pub fn describe_windows(points: &[BreachPoint], grid: &SideChannelDistribution) -> String {
    let mut out = String::new();
    for p in points {
        let _ = write!(out, "L = {} km: ", compact(p.length_km));
        match &p.outcome {
            None => out.push_str("no disguising strategy\n"),
            Some(o) => {
                let _ = writeln!(
                    out,
                    "W_s = {}; W_d = {}; Y1_mu_eve = {}",
                    describe_bins(o.windows.signal_window(), grid),
                    describe_bins(o.windows.decoy_window(), grid),
                    sig6(o.y1_mu_eve)
                );
            }
        }
    }
    out
}

/// Contiguous runs of bins as coordinate intervals (one-axis grids) or index
/// ranges (joint grids).
pub fn describe_bins(bins: &[usize], grid: &SideChannelDistribution) -> String {
    if bins.is_empty() {
        return "{}".into();
    }
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &b in bins {
        match runs.last_mut() {
            Some((_, hi)) if *hi + 1 == b => *hi = b,
            _ => runs.push((b, b)),
        }
    }
    let parts: Vec<String> = runs
        .iter()
        .map(|&(lo, hi)| match grid.axes() {
            [axis] => format!("[{}, {})", compact(axis.bin(lo).0), compact(axis.bin(hi).1)),
            _ if lo == hi => format!("#{lo}"),
            _ => format!("#{lo}..#{hi}"),
        })
        .collect();
    parts.join(" ∪ ")
}

/// gnuplot script plotting key-rate curves on a log scale. `curves` pairs a
/// CSV file name (as written next to the script) with its legend title.
pub fn rate_plot_script(curves: &[(String, String)], image: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{image}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set format y '10^{{%L}}'");
    let _ = writeln!(s, "set xlabel 'Distance (km)'");
    let _ = writeln!(s, "set ylabel 'Key rate (per pulse)'");
    let plots: Vec<String> = curves
        .iter()
        .map(|(csv, title)| {
            format!("'{csv}' using 1:($2 > 0 ? $2 : NaN) with lines title '{title}'")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// gnuplot script plotting `r_lower` and `r_upper` from an attack CSV.
pub fn attack_plot_script(csv: &str, image: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{image}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set format y '10^{{%L}}'");
    let _ = writeln!(s, "set xlabel 'Distance (km)'");
    let _ = writeln!(s, "set ylabel 'Key rate (per pulse)'");
    let _ = writeln!(
        s,
        "plot '{csv}' using 1:($2 > 0 ? $2 : NaN) skip 1 with linespoints title 'R^l', \\\n     \
         '{csv}' using 1:($3 > 0 ? $3 : NaN) skip 1 with linespoints title 'R^u'"
    );
    s
}
