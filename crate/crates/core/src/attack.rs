//! Windowed photon-number-splitting attack on a source whose signal and
//! decoy pulses are partially distinguishable.
//!
//! Eve watches a side channel, guesses signal inside `W_s` and decoy inside
//! `W_d`, and picks in-window yields `Zₙ^μ`, `Zₙ^ν` so that Bob's gains match
//! the honest ones while the error counts stay at or below them. Outside the
//! windows single photons are blocked and multiphoton pulses are forwarded
//! over the honest channel. With the windows fixed, minimizing the true
//! single-photon yield is a linear program.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::bounds_weak_vacuum;
use crate::channel::{
    honest_yield, transmittance, weak_vacuum_statistics, DetectorParams, Observation,
    ObservedStatistics,
};
use crate::distinguishability::{
    photon_number_cutoff, poisson_pn, poisson_tail, IntensityLabel, SideChannelDistribution,
};
use crate::error::{Error, Result};
use crate::key_rate::secure_rate;
use crate::simplex::{LinearProgram, LpOutcome, Relation};

/// Band within which achieved statistics must reproduce the targets.
pub const MATCH_TOLERANCE: f64 = 1e-9;

/// Poisson mass allowed beyond the photon-number cutoff.
pub const PHOTON_TAIL: f64 = 1e-12;

/// Eve's observation windows as sorted, disjoint sets of flat bin indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackWindows {
    w_s: Vec<usize>,
    w_d: Vec<usize>,
}

impl AttackWindows {
    pub fn new(mut w_s: Vec<usize>, mut w_d: Vec<usize>) -> Result<Self> {
        w_s.sort_unstable();
        w_s.dedup();
        w_d.sort_unstable();
        w_d.dedup();
        let (mut i, mut j) = (0, 0);
        while i < w_s.len() && j < w_d.len() {
            match w_s[i].cmp(&w_d[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Err(Error::OverlappingWindows),
            }
        }
        Ok(Self { w_s, w_d })
    }

    pub fn signal_window(&self) -> &[usize] {
        &self.w_s
    }

    pub fn decoy_window(&self) -> &[usize] {
        &self.w_d
    }
}

/// `p_ij`: probability that Eve guesses `i` when Alice sent `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuessMatrix {
    pub p_ss: f64,
    pub p_ds: f64,
    pub p_sd: f64,
    pub p_dd: f64,
}

impl GuessMatrix {
    pub fn new(p_ss: f64, p_ds: f64, p_sd: f64, p_dd: f64) -> Result<Self> {
        for (name, v) in [
            ("p_ss", p_ss),
            ("p_ds", p_ds),
            ("p_sd", p_sd),
            ("p_dd", p_dd),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::out_of_range(name, v, "[0, 1]"));
            }
        }
        let slack = 1e-12;
        if p_ss + p_ds > 1.0 + slack || p_sd + p_dd > 1.0 + slack {
            return Err(Error::Precondition(
                "guess probabilities for one sent state exceed one".into(),
            ));
        }
        Ok(Self {
            p_ss,
            p_ds,
            p_sd,
            p_dd,
        })
    }

    /// Guess row for a sent state: `(P(s|·), P(d|·))`.
    fn row(&self, sent: IntensityLabel) -> (f64, f64) {
        match sent {
            IntensityLabel::Decoy => (self.p_sd, self.p_dd),
            _ => (self.p_ss, self.p_ds),
        }
    }

    /// Fraction of pulses of the sent state that fall outside both windows.
    fn outside(&self, sent: IntensityLabel) -> f64 {
        let (s, d) = self.row(sent);
        (1.0 - s - d).max(0.0)
    }
}

/// Window sums of the two side-channel distributions.
pub fn guess_matrix(
    f_signal: &SideChannelDistribution,
    f_decoy: &SideChannelDistribution,
    windows: &AttackWindows,
) -> Result<GuessMatrix> {
    if !f_signal.same_grid(f_decoy) {
        return Err(Error::GridMismatch);
    }
    let bins = f_signal.len();
    if windows.w_s.iter().chain(&windows.w_d).any(|&i| i >= bins) {
        return Err(Error::Precondition(format!(
            "window index beyond the {bins} available bins"
        )));
    }
    let sum = |f: &SideChannelDistribution, w: &[usize]| -> f64 {
        w.iter()
            .map(|&i| f.probabilities()[i])
            .sum::<f64>()
            .min(1.0)
    };
    GuessMatrix::new(
        sum(f_signal, &windows.w_s),
        sum(f_signal, &windows.w_d),
        sum(f_decoy, &windows.w_s),
        sum(f_decoy, &windows.w_d),
    )
}

/// Honest n-photon yields `Y₀ + 1 − (1 − η)ⁿ` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HonestYields {
    eta: f64,
    yields: Vec<f64>,
}

impl HonestYields {
    pub fn new(eta: f64, y0: f64, n_max: u32) -> Self {
        Self {
            eta,
            yields: (0..=n_max).map(|n| honest_yield(n, eta, y0)).collect(),
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn y0(&self) -> f64 {
        self.yields[0]
    }

    pub fn n_max(&self) -> u32 {
        (self.yields.len() - 1) as u32
    }

    /// `Yₙ` for `n ≤ n_max`.
    pub fn get(&self, n: u32) -> f64 {
        self.yields[n as usize]
    }
}

/// In-window yields chosen by Eve; entry `k` holds photon number `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EveStrategy {
    pub z_mu: Vec<f64>,
    pub z_nu: Vec<f64>,
    pub n_max: u32,
}

impl EveStrategy {
    pub fn new(z_mu: Vec<f64>, z_nu: Vec<f64>) -> Result<Self> {
        if z_mu.len() != z_nu.len() || z_mu.is_empty() {
            return Err(Error::Precondition(
                "strategy needs equally long, nonempty yield arrays".into(),
            ));
        }
        if let Some(v) = z_mu.iter().chain(&z_nu).find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::out_of_range("Z", *v, "[0, 1]"));
        }
        let n_max = z_mu.len() as u32;
        Ok(Self { z_mu, z_nu, n_max })
    }

    /// Every in-window yield set to `value`.
    pub fn uniform(n_max: u32, value: f64) -> Result<Self> {
        Self::new(vec![value; n_max as usize], vec![value; n_max as usize])
    }

    fn z(&self, n: u32) -> (f64, f64) {
        let k = n as usize - 1;
        (self.z_mu[k], self.z_nu[k])
    }
}

/// Per-photon-number yields seen by Bob under the attack, `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct EveYields {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

pub fn eve_yields(
    strategy: &EveStrategy,
    guess: &GuessMatrix,
    honest: &HonestYields,
) -> Result<EveYields> {
    if strategy.n_max != honest.n_max() {
        return Err(Error::Precondition(format!(
            "strategy covers {} photon numbers but honest yields cover {}",
            strategy.n_max,
            honest.n_max()
        )));
    }
    let per_state = |sent: IntensityLabel| -> Vec<f64> {
        let (ps, pd) = guess.row(sent);
        let out = guess.outside(sent);
        let mut y = Vec::with_capacity(strategy.n_max as usize + 1);
        y.push(honest.y0());
        for n in 1..=strategy.n_max {
            let (zm, zn) = strategy.z(n);
            let forwarded = if n >= 2 { out * honest.get(n) } else { 0.0 };
            y.push(ps * zm + pd * zn + forwarded);
        }
        y
    };
    Ok(EveYields {
        mu: per_state(IntensityLabel::Signal),
        nu: per_state(IntensityLabel::Decoy),
    })
}

/// Gain and error gain of one sent state under the attack.
fn eve_gain_and_errors(
    sent: IntensityLabel,
    omega: f64,
    strategy: &EveStrategy,
    guess: &GuessMatrix,
    honest: &HonestYields,
    yields: &[f64],
) -> (f64, f64) {
    let vacuum = honest.y0() * (-omega).exp();
    let mut gain = vacuum;
    let mut errors = 0.5 * vacuum;
    let (ps, pd) = guess.row(sent);
    for n in 1..=strategy.n_max {
        let p = poisson_pn(omega, n);
        gain += yields[n as usize] * p;
        let (zm, zn) = strategy.z(n);
        // a wrong guess turns Eve's click into a coin flip
        let wrong = match sent {
            IntensityLabel::Decoy => ps * zm,
            _ => pd * zn,
        };
        errors += 0.5 * wrong * p;
    }
    // forwarded multiphoton tail beyond the cutoff, with Yₙ taken as one
    gain += guess.outside(sent) * poisson_tail(omega, strategy.n_max);
    (gain.min(1.0), errors)
}

/// Bob's signal and decoy statistics under the attack.
pub fn eve_statistics(
    strategy: &EveStrategy,
    guess: &GuessMatrix,
    mu: f64,
    nu: f64,
    honest: &HonestYields,
) -> Result<ObservedStatistics> {
    let yields = eve_yields(strategy, guess, honest)?;
    let mut stats = ObservedStatistics::new();
    for (label, omega, y) in [
        (IntensityLabel::Signal, mu, &yields.mu),
        (IntensityLabel::Decoy, nu, &yields.nu),
    ] {
        let (gain, errors) = eve_gain_and_errors(label, omega, strategy, guess, honest, y);
        let rate = if gain > 0.0 {
            (errors / gain).min(1.0)
        } else {
            0.0
        };
        stats.insert(label, Observation::new(omega, gain, rate)?);
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategySolution {
    Feasible {
        strategy: EveStrategy,
        y1_mu_eve: f64,
        achieved: ObservedStatistics,
    },
    Infeasible,
}

/// Minimizes `Y₁^{μEve} = p_ss Z₁^μ + p_ds Z₁^ν` subject to matching the
/// target gains and not exceeding the target error gains.
///
/// A returned strategy has been re-checked against the targets by
/// [`eve_statistics`]; a solver answer that fails the check is an error.
pub fn solve_strategy(
    guess: &GuessMatrix,
    targets: &ObservedStatistics,
    honest: &HonestYields,
    mu: f64,
    nu: f64,
) -> Result<StrategySolution> {
    let n_max = honest.n_max();
    let n = n_max as usize;
    let mut objective = vec![0.0; 2 * n];
    objective[0] = guess.p_ss;
    objective[n] = guess.p_ds;
    let mut lp = LinearProgram::new(objective).with_uniform_upper(1.0);

    // with every Z at zero only the vacuum and forwarded terms remain
    let idle = EveStrategy::uniform(n_max, 0.0)?;
    let idle_yields = eve_yields(&idle, guess, honest)?;

    let sent_states = [
        (IntensityLabel::Signal, mu, &idle_yields.mu),
        (IntensityLabel::Decoy, nu, &idle_yields.nu),
    ];
    for (label, omega, y) in sent_states {
        let target = targets.get(label)?;
        let (base_gain, base_errors) = eve_gain_and_errors(label, omega, &idle, guess, honest, y);
        let (ps, pd) = guess.row(label);
        let mut gain_row = vec![0.0; 2 * n];
        let mut error_row = vec![0.0; 2 * n];
        for k in 1..=n_max {
            let p = poisson_pn(omega, k);
            let i = k as usize - 1;
            gain_row[i] = ps * p;
            gain_row[n + i] = pd * p;
            match label {
                IntensityLabel::Decoy => error_row[i] = 0.5 * ps * p,
                _ => error_row[n + i] = 0.5 * pd * p,
            }
        }
        lp.add_constraint(gain_row, Relation::Eq, target.gain - base_gain);
        lp.add_constraint(error_row, Relation::Le, target.error_gain() - base_errors);
    }

    let solution = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Ok(StrategySolution::Infeasible),
        LpOutcome::Unbounded => {
            return Err(Error::Solver("bounded program reported unbounded".into()))
        }
    };
    let strategy = EveStrategy::new(solution.x[..n].to_vec(), solution.x[n..].to_vec())?;
    let y1_mu_eve = guess.p_ss * strategy.z_mu[0] + guess.p_ds * strategy.z_nu[0];
    if (y1_mu_eve - solution.objective).abs() > MATCH_TOLERANCE {
        return Err(Error::Solver(format!(
            "objective {} disagrees with recomputed {}",
            solution.objective, y1_mu_eve
        )));
    }
    let achieved = eve_statistics(&strategy, guess, mu, nu, honest)?;
    verify_disguise(&achieved, targets)?;
    Ok(StrategySolution::Feasible {
        strategy,
        y1_mu_eve,
        achieved,
    })
}

/// Checks that achieved gains match and error gains do not exceed targets.
pub fn verify_disguise(achieved: &ObservedStatistics, targets: &ObservedStatistics) -> Result<()> {
    for label in [IntensityLabel::Signal, IntensityLabel::Decoy] {
        let a = achieved.get(label)?;
        let t = targets.get(label)?;
        if (a.gain - t.gain).abs() > MATCH_TOLERANCE {
            return Err(Error::Solver(format!(
                "{} gain {} misses target {}",
                label.as_str(),
                a.gain,
                t.gain
            )));
        }
        if a.error_gain() > t.error_gain() + MATCH_TOLERANCE {
            return Err(Error::Solver(format!(
                "{} error gain {} exceeds target {}",
                label.as_str(),
                a.error_gain(),
                t.error_gain()
            )));
        }
    }
    Ok(())
}

/// Per-bin log-likelihood ratio `ln(f_s / f_d)`; `None` where both vanish.
pub fn log_likelihood_ratios(
    f_signal: &SideChannelDistribution,
    f_decoy: &SideChannelDistribution,
) -> Result<Vec<Option<f64>>> {
    if !f_signal.same_grid(f_decoy) {
        return Err(Error::GridMismatch);
    }
    Ok(f_signal
        .probabilities()
        .iter()
        .zip(f_decoy.probabilities())
        .map(|(&s, &d)| match (s > 0.0, d > 0.0) {
            (false, false) => None,
            (true, false) => Some(f64::INFINITY),
            (false, true) => Some(f64::NEG_INFINITY),
            (true, true) => Some((s / d).ln()),
        })
        .collect())
}

/// Threshold windows `W_s = {ℓ ≥ θ_s}`, `W_d = {ℓ ≤ θ_d}` for every pair
/// `θ_s > θ_d` of observed ratios.
///
/// `stride` keeps every `stride`-th distinct ratio as a threshold, giving a
/// coarser sub-family; `1` is the full family.
pub fn candidate_windows(
    f_signal: &SideChannelDistribution,
    f_decoy: &SideChannelDistribution,
    stride: usize,
) -> Result<Vec<AttackWindows>> {
    if stride == 0 {
        return Err(Error::Precondition(
            "threshold stride must be positive".into(),
        ));
    }
    let llr = log_likelihood_ratios(f_signal, f_decoy)?;
    let mut levels: Vec<f64> = llr.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let levels: Vec<f64> = levels.into_iter().step_by(stride).collect();

    let mut out = Vec::new();
    for (i, &theta_s) in levels.iter().enumerate() {
        for &theta_d in &levels[..i] {
            let mut w_s = Vec::new();
            let mut w_d = Vec::new();
            for (bin, l) in llr.iter().enumerate() {
                match l {
                    Some(l) if *l >= theta_s => w_s.push(bin),
                    Some(l) if *l <= theta_d => w_d.push(bin),
                    _ => {}
                }
            }
            out.push(AttackWindows { w_s, w_d });
        }
    }
    Ok(out)
}

/// Best feasible attack over a window family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackOutcome {
    pub y1_mu_eve: f64,
    /// `Y₁^{μEve} μ e^{−μ}`.
    pub r_upper: f64,
    pub windows: AttackWindows,
    pub guess: GuessMatrix,
    pub strategy: EveStrategy,
    pub achieved_stats: ObservedStatistics,
}

/// Sweeps the full likelihood-ratio window family; `None` if no candidate
/// admits a disguising strategy.
pub fn sweep_windows(
    f_signal: &SideChannelDistribution,
    f_decoy: &SideChannelDistribution,
    targets: &ObservedStatistics,
    honest: &HonestYields,
    mu: f64,
    nu: f64,
) -> Result<Option<AttackOutcome>> {
    let family = candidate_windows(f_signal, f_decoy, 1)?;
    sweep_family(f_signal, f_decoy, &family, targets, honest, mu, nu)
}

/// Like [`sweep_windows`] over an explicit window family. Ties keep the
/// earliest candidate.
pub fn sweep_family(
    f_signal: &SideChannelDistribution,
    f_decoy: &SideChannelDistribution,
    family: &[AttackWindows],
    targets: &ObservedStatistics,
    honest: &HonestYields,
    mu: f64,
    nu: f64,
) -> Result<Option<AttackOutcome>> {
    let solved: Vec<Option<AttackOutcome>> = family
        .par_iter()
        .map(|windows| -> Result<Option<AttackOutcome>> {
            let guess = guess_matrix(f_signal, f_decoy, windows)?;
            Ok(match solve_strategy(&guess, targets, honest, mu, nu)? {
                StrategySolution::Infeasible => None,
                StrategySolution::Feasible {
                    strategy,
                    y1_mu_eve,
                    achieved,
                } => Some(AttackOutcome {
                    y1_mu_eve,
                    r_upper: y1_mu_eve * mu * (-mu).exp(),
                    windows: windows.clone(),
                    guess,
                    strategy,
                    achieved_stats: achieved,
                }),
            })
        })
        .collect::<Result<_>>()?;
    Ok(solved
        .into_iter()
        .flatten()
        .fold(None, |best, o| match best {
            Some(b) if b.y1_mu_eve <= o.y1_mu_eve => Some(b),
            _ => Some(o),
        }))
}

/// One distance of a breach scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreachPoint {
    pub length_km: f64,
    /// Rate Alice and Bob believe in: standard decoy analysis.
    pub r_lower: f64,
    /// Rate actually secure under the best attack; `None` when infeasible.
    pub r_upper: Option<f64>,
    pub breached: bool,
    pub outcome: Option<AttackOutcome>,
}

/// Attack versus standard decoy analysis at each distance.
pub fn breach_scan(
    params: &DetectorParams,
    f_signal: &SideChannelDistribution,
    f_decoy: &SideChannelDistribution,
    mu: f64,
    nu: f64,
    lengths_km: &[f64],
) -> Result<Vec<BreachPoint>> {
    params.validate()?;
    if !(mu > nu && nu > 0.0) {
        return Err(Error::Precondition(format!(
            "attack needs mu > nu > 0 (got mu={mu}, nu={nu})"
        )));
    }
    if !f_signal.same_grid(f_decoy) {
        return Err(Error::GridMismatch);
    }
    let family = candidate_windows(f_signal, f_decoy, 1)?;
    let n_max = photon_number_cutoff(mu, PHOTON_TAIL);
    lengths_km
        .par_iter()
        .map(|&length_km| {
            let targets = weak_vacuum_statistics(params, length_km, mu, nu)?;
            let b = bounds_weak_vacuum(&targets, mu, nu, 0.0, params.e0)?;
            let r_lower = secure_rate(&targets, mu, b.y1_lower, b.e1_upper, params)?;
            let honest = HonestYields::new(transmittance(params, length_km), params.y0, n_max);
            let outcome = sweep_family(f_signal, f_decoy, &family, &targets, &honest, mu, nu)?;
            let r_upper = outcome.as_ref().map(|o| params.q * o.r_upper);
            Ok(BreachPoint {
                length_km,
                r_lower,
                r_upper,
                breached: r_upper.is_some_and(|u| u < r_lower),
                outcome,
            })
        })
        .collect()
}

/// Distance of the first breached point, if any.
pub fn first_breach(points: &[BreachPoint]) -> Option<f64> {
    points.iter().find(|p| p.breached).map(|p| p.length_km)
}
