//! Decoy-state estimates of the vacuum yield, single-photon yield and
//! single-photon error rate.
//!
//! A side channel with trace distance `D` between two settings lets the
//! n-photon yields of those settings differ by at most `2D`. The bounds
//! below carry that slack through the usual decoy algebra. With `D = 0` they
//! collapse to the standard decoy estimates. When Bob has calibrated his
//! transmittance the slack on `Yₙ` shrinks to `2D[1 − (1 − η_cal)ⁿ]`.
//!
//! All results are clamped to `[0, 1]`. A single-photon yield bound of zero
//! means "no key"; it is not an error.

use serde::{Deserialize, Serialize};

use crate::channel::{DetectorParams, Observation, ObservedStatistics};
use crate::distinguishability::MismatchSpec;
use crate::error::{Error, Result};

/// Error probability of a dark count when none is supplied.
pub const DEFAULT_DARK_COUNT_ERROR: f64 = 0.5;

/// Tolerance when matching stated intensities to the observations.
const INTENSITY_MATCH: f64 = 1e-12;

/// Signal, decoy and vacuum(-like) mean photon numbers `μ > ν > ν₁ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intensities {
    pub mu: f64,
    pub nu: f64,
    #[serde(default)]
    pub nu1: f64,
}

impl Intensities {
    pub fn new(mu: f64, nu: f64, nu1: f64) -> Self {
        Self { mu, nu, nu1 }
    }

    pub fn weak_vacuum(mu: f64, nu: f64) -> Self {
        Self { mu, nu, nu1: 0.0 }
    }

    fn check_ordering(&self) -> Result<()> {
        let Self { mu, nu, nu1 } = *self;
        if !(nu1 >= 0.0 && nu > nu1 && mu > nu) {
            return Err(Error::Precondition(format!(
                "intensities must satisfy mu > nu > nu1 >= 0 (mu={mu}, nu={nu}, nu1={nu1})"
            )));
        }
        Ok(())
    }

    fn check_general(&self) -> Result<()> {
        self.check_ordering()?;
        if self.mu < self.nu + self.nu1 {
            return Err(Error::Precondition(format!(
                "the three-intensity bound assumes mu >= nu + nu1 (mu={}, nu={}, nu1={})",
                self.mu, self.nu, self.nu1
            )));
        }
        Ok(())
    }
}

/// The individual upper bounds on `e₁`. Unpopulated terms are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KTerms {
    pub k_mu: Option<f64>,
    pub k_nu: Option<f64>,
    pub k_nu1: Option<f64>,
    pub k_mu_nu: Option<f64>,
    pub k_mu_nu1: Option<f64>,
}

impl KTerms {
    pub fn named(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("K_mu", self.k_mu),
            ("K_nu", self.k_nu),
            ("K_nu1", self.k_nu1),
            ("K_mu_nu", self.k_mu_nu),
            ("K_mu_nu1", self.k_mu_nu1),
        ]
    }

    /// Smallest populated term; `+∞` when none is populated.
    pub fn min(&self) -> f64 {
        self.named()
            .iter()
            .filter_map(|(_, k)| *k)
            .fold(f64::INFINITY, f64::min)
    }

    /// The bound itself: the minimum clamped to `[0, 1]`.
    pub fn bound(&self) -> f64 {
        self.min().clamp(0.0, 1.0)
    }
}

/// Everything one decoy estimation produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub y0_lower: f64,
    pub y1_lower: f64,
    /// `1` when `y1_lower` is zero and no K term can be formed.
    pub e1_upper: f64,
    pub k_terms: KTerms,
    /// Yield penalty `g` subtracted from the perfect-source estimate.
    pub g_term: f64,
    /// Vacuum penalty `g′`.
    pub g_prime_term: f64,
}

impl BoundResult {
    /// Whether the single-photon yield bound leaves room for a key.
    pub fn has_single_photon_yield(&self) -> bool {
        self.y1_lower > 0.0
    }
}

struct Observed {
    signal: Observation,
    decoy: Observation,
    vacuum: Observation,
}

fn observed(stats: &ObservedStatistics, intens: &Intensities) -> Result<Observed> {
    let obs = Observed {
        signal: stats.signal()?,
        decoy: stats.decoy()?,
        vacuum: stats.vacuum()?,
    };
    for (name, stated, seen) in [
        ("signal", intens.mu, obs.signal.intensity),
        ("decoy", intens.nu, obs.decoy.intensity),
        ("vacuum", intens.nu1, obs.vacuum.intensity),
    ] {
        if (stated - seen).abs() > INTENSITY_MATCH {
            return Err(Error::Precondition(format!(
                "{name} intensity {stated} does not match the observed setting {seen}"
            )));
        }
    }
    Ok(obs)
}

/// Vacuum penalty `g′ = 2D_{μν₁}ν(e^{ν₁} − 1) + 2D_{μν}ν₁(e^ν − 1)`.
pub fn g_prime_term(intens: &Intensities, mismatch: &MismatchSpec) -> f64 {
    let Intensities { nu, nu1, .. } = *intens;
    2.0 * mismatch.d_mu_nu1 * nu * nu1.exp_m1() + 2.0 * mismatch.d_mu_nu * nu1 * nu.exp_m1()
}

/// Yield penalty `g = 2μ[D_{μν}(e^ν − 1) + D_{μν₁}(e^{ν₁} − 1)] / [μ(ν − ν₁) − (ν² − ν₁²)]`.
pub fn g_term(intens: &Intensities, mismatch: &MismatchSpec) -> f64 {
    let Intensities { mu, nu, nu1 } = *intens;
    2.0 * mu * (mismatch.d_mu_nu * nu.exp_m1() + mismatch.d_mu_nu1 * nu1.exp_m1())
        / (mu * (nu - nu1) - (nu * nu - nu1 * nu1))
}

/// Lower bound on the vacuum yield from the decoy and vacuum-like settings.
///
/// With a true vacuum (`ν₁ = 0`) this is exactly the observed vacuum gain.
pub fn y0_lower_general(
    stats: &ObservedStatistics,
    intens: &Intensities,
    mismatch: &MismatchSpec,
) -> Result<f64> {
    intens.check_ordering()?;
    let obs = observed(stats, intens)?;
    if intens.nu1 == 0.0 {
        return Ok(obs.vacuum.gain.clamp(0.0, 1.0));
    }
    let Intensities { nu, nu1, .. } = *intens;
    let numerator = nu * nu1.exp() * obs.vacuum.gain
        - nu1 * nu.exp() * obs.decoy.gain
        - g_prime_term(intens, mismatch);
    Ok((numerator / (nu - nu1)).clamp(0.0, 1.0))
}

/// The perfect-source single-photon estimate `G(μ, ν, ν₁)` (unclamped).
pub fn perfect_source_y1(
    stats: &ObservedStatistics,
    intens: &Intensities,
    y0_lower: f64,
) -> Result<f64> {
    intens.check_general()?;
    let obs = observed(stats, intens)?;
    let Intensities { mu, nu, nu1 } = *intens;
    let spread = nu * nu - nu1 * nu1;
    let numerator = nu.exp() * obs.decoy.gain
        - nu1.exp() * obs.vacuum.gain
        - spread / (mu * mu) * (mu.exp() * obs.signal.gain - y0_lower);
    Ok(mu * numerator / (mu * (nu - nu1) - spread))
}

/// Lower bound on the signal's single-photon yield, `G − g` clamped to `[0, 1]`.
pub fn y1_lower_general(
    stats: &ObservedStatistics,
    intens: &Intensities,
    mismatch: &MismatchSpec,
    y0_lower: f64,
) -> Result<f64> {
    let big_g = perfect_source_y1(stats, intens, y0_lower)?;
    Ok((big_g - g_term(intens, mismatch)).clamp(0.0, 1.0))
}

/// Weak+vacuum single-photon yield bound (`ν₁ = 0`, `Y₀ᴸ = Q_vac`).
pub fn y1_lower_weak_vacuum(
    stats: &ObservedStatistics,
    mu: f64,
    nu: f64,
    d_mu_nu: f64,
) -> Result<f64> {
    let intens = Intensities::weak_vacuum(mu, nu);
    intens.check_ordering()?;
    let obs = observed(stats, &intens)?;
    Ok(weak_vacuum_y1(&obs, mu, nu, 2.0 * d_mu_nu * nu.exp_m1()))
}

fn weak_vacuum_y1(obs: &Observed, mu: f64, nu: f64, penalty: f64) -> f64 {
    let mu2 = mu * mu;
    let nu2 = nu * nu;
    let bracket = nu.exp() * obs.decoy.gain
        - nu2 / mu2 * mu.exp() * obs.signal.gain
        - (mu2 - nu2) / mu2 * obs.vacuum.gain
        - penalty;
    (mu / (mu * nu - nu2) * bracket).clamp(0.0, 1.0)
}

/// Upper bound on the signal's single-photon error rate.
///
/// Returns the clamped minimum together with every K term. With a true
/// vacuum the `K^{ν₁}` term degenerates to `e₁ ≤ 1/Y₁` and is left out.
pub fn e1_upper_general(
    stats: &ObservedStatistics,
    intens: &Intensities,
    mismatch: &MismatchSpec,
    y0_lower: f64,
    y1_lower: f64,
) -> Result<(f64, KTerms)> {
    e1_upper_general_with(
        stats,
        intens,
        mismatch,
        y0_lower,
        y1_lower,
        DEFAULT_DARK_COUNT_ERROR,
    )
}

/// [`e1_upper_general`] with an explicit dark-count error probability.
pub fn e1_upper_general_with(
    stats: &ObservedStatistics,
    intens: &Intensities,
    mismatch: &MismatchSpec,
    y0_lower: f64,
    y1_lower: f64,
    e0: f64,
) -> Result<(f64, KTerms)> {
    intens.check_general()?;
    if !(y1_lower > 0.0) {
        return Err(Error::NoSinglePhotonYield);
    }
    let obs = observed(stats, intens)?;
    let Intensities { mu, nu, nu1 } = *intens;
    let (d, d1) = (mismatch.d_mu_nu, mismatch.d_mu_nu1);
    let s = mu.exp() * obs.signal.error_gain();
    let w = nu.exp() * obs.decoy.error_gain();
    let v = nu1.exp() * obs.vacuum.error_gain();
    let dark = e0 * y0_lower;

    let k = KTerms {
        k_mu: Some((s - dark) / (mu * y1_lower)),
        k_nu: Some((w - dark + 2.0 * nu * d) / (nu * y1_lower)),
        k_nu1: (nu1 > 0.0).then(|| (v - dark + 2.0 * nu1 * d1) / (nu1 * y1_lower)),
        k_mu_nu: Some((s - w + 2.0 * d * nu.exp_m1()) / ((mu - nu) * y1_lower)),
        k_mu_nu1: Some((s - v + 2.0 * d1 * nu1.exp_m1()) / ((mu - nu1) * y1_lower)),
    };
    Ok((k.bound(), k))
}

/// Weak+vacuum error-rate bound, `min{K^μ, K^ν, K^{μν}}`.
pub fn e1_upper_weak_vacuum(
    stats: &ObservedStatistics,
    mu: f64,
    nu: f64,
    d_mu_nu: f64,
    y1_lower: f64,
) -> Result<f64> {
    let intens = Intensities::weak_vacuum(mu, nu);
    intens.check_ordering()?;
    if !(y1_lower > 0.0) {
        return Err(Error::NoSinglePhotonYield);
    }
    let obs = observed(stats, &intens)?;
    let penalties = Penalties::imperfect(nu, d_mu_nu);
    Ok(weak_vacuum_k(&obs, mu, nu, y1_lower, DEFAULT_DARK_COUNT_ERROR, &penalties).bound())
}

/// Slack terms of the weak+vacuum bounds.
struct Penalties {
    /// Subtracted inside the `Y₁` bracket.
    yield_slack: f64,
    /// Added to the numerator of `K^ν`.
    k_nu: f64,
    /// Added to the numerator of `K^{μν}`.
    k_mu_nu: f64,
}

impl Penalties {
    fn imperfect(nu: f64, d: f64) -> Self {
        let slack = 2.0 * d * nu.exp_m1();
        Self {
            yield_slack: slack,
            k_nu: 2.0 * nu * d,
            k_mu_nu: slack,
        }
    }

    fn calibrated(nu: f64, d: f64, eta_cal: f64) -> Self {
        // e^ν − e^{ν(1−η)} = e^ν (1 − e^{−νη})
        let slack = 2.0 * d * (-nu.exp() * (-nu * eta_cal).exp_m1());
        Self {
            yield_slack: slack,
            k_nu: 2.0 * nu * d * eta_cal,
            k_mu_nu: slack,
        }
    }
}

fn weak_vacuum_k(
    obs: &Observed,
    mu: f64,
    nu: f64,
    y1: f64,
    e0: f64,
    penalties: &Penalties,
) -> KTerms {
    let s = mu.exp() * obs.signal.error_gain();
    let w = nu.exp() * obs.decoy.error_gain();
    let dark = e0 * obs.vacuum.gain;
    KTerms {
        k_mu: Some((s - dark) / (mu * y1)),
        k_nu: Some((w - dark + penalties.k_nu) / (nu * y1)),
        k_nu1: None,
        k_mu_nu: Some((s - w + penalties.k_mu_nu) / ((mu - nu) * y1)),
        k_mu_nu1: None,
    }
}

fn weak_vacuum_result(
    stats: &ObservedStatistics,
    mu: f64,
    nu: f64,
    e0: f64,
    penalties: Penalties,
) -> Result<BoundResult> {
    let intens = Intensities::weak_vacuum(mu, nu);
    intens.check_ordering()?;
    let obs = observed(stats, &intens)?;
    let y1_lower = weak_vacuum_y1(&obs, mu, nu, penalties.yield_slack);
    let (e1_upper, k_terms) = if y1_lower > 0.0 {
        let k = weak_vacuum_k(&obs, mu, nu, y1_lower, e0, &penalties);
        (k.bound(), k)
    } else {
        (1.0, KTerms::default())
    };
    Ok(BoundResult {
        y0_lower: obs.vacuum.gain.clamp(0.0, 1.0),
        y1_lower,
        e1_upper,
        k_terms,
        g_term: mu * penalties.yield_slack / (mu * nu - nu * nu),
        g_prime_term: 0.0,
    })
}

/// Weak+vacuum bounds for a source with signal/decoy trace distance `d_mu_nu`.
pub fn bounds_weak_vacuum(
    stats: &ObservedStatistics,
    mu: f64,
    nu: f64,
    d_mu_nu: f64,
    e0: f64,
) -> Result<BoundResult> {
    weak_vacuum_result(stats, mu, nu, e0, Penalties::imperfect(nu, d_mu_nu))
}

/// Weak+vacuum bounds when Bob knows his own transmittance `η_cal`.
///
/// Never worse than [`bounds_weak_vacuum`] on the same inputs, and identical
/// to it for `η_cal = 1`.
pub fn bounds_calibrated(
    stats: &ObservedStatistics,
    mu: f64,
    nu: f64,
    d_mu_nu: f64,
    params: &DetectorParams,
) -> Result<BoundResult> {
    let eta_cal = params.eta_bob_cal();
    if !(eta_cal > 0.0 && eta_cal <= 1.0) {
        return Err(Error::out_of_range("eta_bob_cal", eta_cal, "(0, 1]"));
    }
    weak_vacuum_result(
        stats,
        mu,
        nu,
        params.e0,
        Penalties::calibrated(nu, d_mu_nu, eta_cal),
    )
}

/// Full three-intensity estimate (`Y₀ᴸ`, `Y₁ᴸ`, `e₁ᵁ`).
///
/// `ν₁ > 0` requires the vacuum-like setting's statistics; they are never
/// substituted.
pub fn bounds_general(
    stats: &ObservedStatistics,
    intens: &Intensities,
    mismatch: &MismatchSpec,
    e0: f64,
) -> Result<BoundResult> {
    intens.check_general()?;
    let y0_lower = y0_lower_general(stats, intens, mismatch)?;
    let y1_lower = y1_lower_general(stats, intens, mismatch, y0_lower)?;
    let (e1_upper, k_terms) = if y1_lower > 0.0 {
        e1_upper_general_with(stats, intens, mismatch, y0_lower, y1_lower, e0)?
    } else {
        (1.0, KTerms::default())
    };
    Ok(BoundResult {
        y0_lower,
        y1_lower,
        e1_upper,
        k_terms,
        g_term: g_term(intens, mismatch),
        g_prime_term: g_prime_term(intens, mismatch),
    })
}
