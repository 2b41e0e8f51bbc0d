//! Secure key rate, intensity optimization and rate-vs-distance curves.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bounds_calibrated, bounds_weak_vacuum, BoundResult};
use crate::channel::{weak_vacuum_statistics, DetectorParams, ObservedStatistics};
use crate::distinguishability::MismatchSpec;
use crate::error::{Error, Result};

/// Which security analysis turns the observations into bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Perfect source: any stated mismatch is ignored.
    Standard,
    /// Distinguishable source.
    Imperfect,
    /// Distinguishable source with a calibrated receiver.
    Calibrated,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Standard, Regime::Imperfect, Regime::Calibrated];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Standard => "standard",
            Regime::Imperfect => "imperfect",
            Regime::Calibrated => "calibrated",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Regime::Standard),
            "imperfect" => Ok(Regime::Imperfect),
            "calibrated" => Ok(Regime::Calibrated),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected standard, imperfect or calibrated)"
            ))),
        }
    }
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::out_of_range("x", x, "[0, 1]"));
    }
    Ok(h2(x))
}

fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `q · max(0, −Q_μ f H₂(E_μ) + Y₁ μ e^{−μ} [1 − H₂(e₁)])`.
///
/// Error rates above one half are treated as one half: they carry no secret
/// information rather than some.
pub fn secure_rate(
    stats: &ObservedStatistics,
    mu: f64,
    y1_lower: f64,
    e1_upper: f64,
    params: &DetectorParams,
) -> Result<f64> {
    let signal = stats.signal()?;
    Ok(rate_from_parts(
        signal.gain,
        signal.error_rate,
        mu,
        y1_lower,
        e1_upper,
        params,
    ))
}

fn rate_from_parts(
    gain: f64,
    qber: f64,
    mu: f64,
    y1_lower: f64,
    e1_upper: f64,
    params: &DetectorParams,
) -> f64 {
    if !(y1_lower > 0.0) {
        return 0.0;
    }
    let leak = gain * params.f_ec * h2(qber.clamp(0.0, 0.5));
    let private = y1_lower * mu * (-mu).exp() * (1.0 - h2(e1_upper.clamp(0.0, 0.5)));
    params.q * (private - leak).max(0.0)
}

/// Bounds for one regime on weak+vacuum statistics.
pub fn regime_bounds(
    regime: Regime,
    stats: &ObservedStatistics,
    mu: f64,
    nu: f64,
    mismatch: &MismatchSpec,
    params: &DetectorParams,
) -> Result<BoundResult> {
    match regime {
        Regime::Standard => bounds_weak_vacuum(stats, mu, nu, 0.0, params.e0),
        Regime::Imperfect => bounds_weak_vacuum(stats, mu, nu, mismatch.d_mu_nu, params.e0),
        Regime::Calibrated => bounds_calibrated(stats, mu, nu, mismatch.d_mu_nu, params),
    }
}

/// Rate for fixed intensities on the honest channel.
pub fn rate_at(
    params: &DetectorParams,
    length_km: f64,
    mu: f64,
    nu: f64,
    mismatch: &MismatchSpec,
    regime: Regime,
) -> Result<f64> {
    let stats = weak_vacuum_statistics(params, length_km, mu, nu)?;
    let b = regime_bounds(regime, &stats, mu, nu, mismatch, params)?;
    secure_rate(&stats, mu, b.y1_lower, b.e1_upper, params)
}

/// Inclusive `lo, lo + step, ..., ≤ hi` range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let r = Self { lo, hi, step };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.step > 0.0 && self.hi >= self.lo) || !self.hi.is_finite() {
            return Err(Error::Config(format!(
                "grid range needs lo > 0, step > 0 and hi >= lo (got {:?})",
                self
            )));
        }
        Ok(())
    }

    /// Grid points, snapped to 12 decimals so `0.01·7` prints as `0.07`.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| snap(self.lo + i as f64 * self.step))
            .collect()
    }
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// The `(μ, ν)` search grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityGrid {
    pub mu: GridRange,
    pub nu: GridRange,
}

impl IntensityGrid {
    pub fn new(mu: GridRange, nu: GridRange) -> Result<Self> {
        mu.validate()?;
        nu.validate()?;
        Ok(Self { mu, nu })
    }

    pub fn validate(&self) -> Result<()> {
        self.mu.validate()?;
        self.nu.validate()
    }
}

impl Default for IntensityGrid {
    /// `μ ∈ [0.01, 0.5]`, `ν ∈ [0.01, 0.2]`, step 0.01.
    fn default() -> Self {
        Self {
            mu: GridRange {
                lo: 0.01,
                hi: 0.5,
                step: 0.01,
            },
            nu: GridRange {
                lo: 0.01,
                hi: 0.2,
                step: 0.01,
            },
        }
    }
}

/// Best grid point at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub mu: f64,
    pub nu: f64,
    pub rate: f64,
}

/// Exhaustive search over `μ > ν` grid pairs.
///
/// Ties (including the all-zero case) go to the smallest `μ`, then the
/// smallest `ν`. Returns `None` only when the grid has no pair with `μ > ν`.
pub fn optimize_intensities(
    params: &DetectorParams,
    length_km: f64,
    mismatch: &MismatchSpec,
    regime: Regime,
    grid: &IntensityGrid,
) -> Result<Option<Optimum>> {
    grid.validate()?;
    let nus = grid.nu.points();
    let mut best: Option<Optimum> = None;
    for mu in grid.mu.points() {
        for &nu in nus.iter().filter(|&&nu| nu < mu) {
            let rate = rate_at(params, length_km, mu, nu, mismatch, regime)?;
            if best.is_none_or(|b| rate > b.rate) {
                best = Some(Optimum { mu, nu, rate });
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub length_km: f64,
    pub rate: f64,
    pub mu: f64,
    pub nu: f64,
}

/// Optimized key rate along a distance grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub regime: Regime,
    pub mismatch: MismatchSpec,
    pub points: Vec<RatePoint>,
}

impl RateCurve {
    /// Writes `length_km,rate,mu,nu` rows at full precision.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["length_km", "rate", "mu", "nu"])?;
        for p in &self.points {
            wtr.write_record([
                p.length_km.to_string(),
                p.rate.to_string(),
                p.mu.to_string(),
                p.nu.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Evenly spaced distances `start, start + step, ..., ≤ stop`.
pub fn distance_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && stop >= start && start >= 0.0) {
        return Err(Error::Config(format!(
            "distance grid needs 0 <= start <= stop and step > 0 (got {start}, {stop}, {step})"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| snap(start + i as f64 * step)).collect())
}

/// Per-distance optimized rates. Distances are evaluated in parallel; the
/// result does not depend on the thread count.
pub fn rate_vs_distance(
    params: &DetectorParams,
    mismatch: &MismatchSpec,
    regime: Regime,
    l_grid: &[f64],
    grid: &IntensityGrid,
) -> Result<RateCurve> {
    params.validate()?;
    if l_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "distance grid must be strictly increasing".into(),
        ));
    }
    let points = l_grid
        .par_iter()
        .map(|&length_km| {
            let best = optimize_intensities(params, length_km, mismatch, regime, grid)?
                .ok_or_else(|| Error::Config("intensity grid has no pair with mu > nu".into()))?;
            Ok(RatePoint {
                length_km,
                rate: best.rate,
                mu: best.mu,
                nu: best.nu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateCurve {
        regime,
        mismatch: *mismatch,
        points,
    })
}

/// Largest distance with a positive rate, or 0 when there is none.
pub fn max_distance(curve: &RateCurve) -> f64 {
    curve
        .points
        .iter()
        .filter(|p| p.rate > 0.0)
        .map(|p| p.length_km)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -0.033 log2 0.033 - 0.967 log2 0.967
        assert_abs_diff_eq!(binary_entropy(0.033).unwrap(), 0.209_220_5, epsilon = 1e-7);
        assert_abs_diff_eq!(
            binary_entropy(0.2).unwrap(),
            binary_entropy(0.8).unwrap(),
            epsilon = 1e-15
        );
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn zero_yield_or_half_error_gives_zero_rate() {
        let p = DetectorParams::gys();
        let stats = weak_vacuum_statistics(&p, 10.0, 0.5, 0.1).unwrap();
        assert_eq!(secure_rate(&stats, 0.5, 0.0, 0.01, &p).unwrap(), 0.0);
        assert_eq!(secure_rate(&stats, 0.5, 0.03, 0.5, &p).unwrap(), 0.0);
        assert_eq!(secure_rate(&stats, 0.5, 0.03, 0.7, &p).unwrap(), 0.0);
    }

    #[test]
    fn grid_points_are_snapped() {
        let pts = GridRange::new(0.01, 0.5, 0.01).unwrap().points();
        assert_eq!(pts.len(), 50);
        assert_eq!(pts[6], 0.07);
        assert_eq!(pts[49], 0.5);
        assert!(GridRange::new(0.0, 0.5, 0.01).is_err());
        assert!(GridRange::new(0.1, 0.05, 0.01).is_err());
    }

    #[test]
    fn all_zero_grid_reports_smallest_pair() {
        let p = DetectorParams::gys();
        let m = MismatchSpec::signal_decoy(0.5).unwrap();
        let best = optimize_intensities(&p, 10.0, &m, Regime::Imperfect, &IntensityGrid::default())
            .unwrap()
            .unwrap();
        assert_eq!(best.rate, 0.0);
        assert_eq!((best.mu, best.nu), (0.02, 0.01));
    }

    #[test]
    fn all_zero_curve_has_no_distance() {
        let curve = RateCurve {
            regime: Regime::Imperfect,
            mismatch: MismatchSpec::perfect(),
            points: (0..5)
                .map(|l| RatePoint {
                    length_km: l as f64,
                    rate: 0.0,
                    mu: 0.02,
                    nu: 0.01,
                })
                .collect(),
        };
        assert_eq!(max_distance(&curve), 0.0);
    }

    #[test]
    fn single_point_curve_is_the_optimum() {
        let p = DetectorParams::gys();
        let m = MismatchSpec::signal_decoy(1e-4).unwrap();
        let g = IntensityGrid::default();
        let curve = rate_vs_distance(&p, &m, Regime::Imperfect, &[0.0], &g).unwrap();
        let best = optimize_intensities(&p, 0.0, &m, Regime::Imperfect, &g)
            .unwrap()
            .unwrap();
        assert_eq!(curve.points[0].rate, best.rate);
        assert_eq!((curve.points[0].mu, curve.points[0].nu), (best.mu, best.nu));
    }

    #[test]
    fn decreasing_distance_grid_is_rejected() {
        let p = DetectorParams::gys();
        let r = rate_vs_distance(
            &p,
            &MismatchSpec::perfect(),
            Regime::Standard,
            &[10.0, 5.0],
            &IntensityGrid::default(),
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
        assert!("other".parse::<Regime>().is_err());
    }

    #[test]
    fn distance_grid_is_inclusive() {
        let g = distance_grid(0.0, 160.0, 1.0).unwrap();
        assert_eq!(g.len(), 161);
        assert_eq!(g[160], 160.0);
    }
}
