//! Honest fibre and detector model.
//!
//! These are the statistics Alice and Bob observe without an eavesdropper.
//! They also act as the targets an attacker has to reproduce.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distinguishability::{IntensityLabel, IntensityLevel};
use crate::error::{Error, Result};

/// Receiver and channel constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Dark-count probability per pulse.
    pub y0: f64,
    /// Transmittance inside Bob, detector efficiency included.
    pub eta_bob: f64,
    /// The part of `eta_bob` Bob has calibrated himself.
    #[serde(default)]
    pub eta_bob_cal: Option<f64>,
    /// Probability that a detected photon hits the wrong detector.
    pub e_detector: f64,
    /// Error probability of a dark count.
    #[serde(default = "default_e0")]
    pub e0: f64,
    /// Error-correction inefficiency `f(E)`.
    pub f_ec: f64,
    /// Fibre loss in dB/km.
    pub alpha_db_per_km: f64,
    /// Sifting factor.
    #[serde(default = "default_q")]
    pub q: f64,
}

fn default_e0() -> f64 {
    0.5
}

fn default_q() -> f64 {
    1.0
}

impl DetectorParams {
    /// The Gobby–Yuan–Shields parameter set with 0.21 dB/km fibre and a
    /// fully calibrated receiver.
    pub fn gys() -> Self {
        Self {
            y0: 1.7e-6,
            eta_bob: 0.045,
            eta_bob_cal: Some(0.045),
            e_detector: 0.033,
            e0: 0.5,
            f_ec: 1.22,
            alpha_db_per_km: 0.21,
            q: 1.0,
        }
    }

    /// Looks up a named preset.
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gys" => Ok(Self::gys()),
            other => Err(Error::Config(format!("unknown detector preset `{other}`"))),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["gys"]
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name, value, expected| {
            if ok {
                Ok(())
            } else {
                Err(Error::out_of_range(name, value, expected))
            }
        };
        check(self.y0 >= 0.0 && self.y0 <= 1.0, "y0", self.y0, "[0, 1]")?;
        check(
            self.eta_bob > 0.0 && self.eta_bob <= 1.0,
            "eta_bob",
            self.eta_bob,
            "(0, 1]",
        )?;
        let cal = self.eta_bob_cal();
        check(
            cal > 0.0 && cal <= self.eta_bob,
            "eta_bob_cal",
            cal,
            "(0, eta_bob]",
        )?;
        check(
            (0.0..=0.5).contains(&self.e_detector),
            "e_detector",
            self.e_detector,
            "[0, 0.5]",
        )?;
        check((0.0..=1.0).contains(&self.e0), "e0", self.e0, "[0, 1]")?;
        check(self.f_ec >= 1.0, "f_ec", self.f_ec, ">= 1")?;
        check(
            self.alpha_db_per_km >= 0.0 && self.alpha_db_per_km.is_finite(),
            "alpha_db_per_km",
            self.alpha_db_per_km,
            ">= 0",
        )?;
        check(self.q > 0.0 && self.q <= 1.0, "q", self.q, "(0, 1]")?;
        Ok(())
    }

    /// Calibrated receiver transmittance; defaults to the full `eta_bob`.
    pub fn eta_bob_cal(&self) -> f64 {
        self.eta_bob_cal.unwrap_or(self.eta_bob)
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self::gys()
    }
}

/// Gain and error rate of one intensity setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Mean photon number of the setting.
    pub intensity: f64,
    pub gain: f64,
    pub error_rate: f64,
}

impl Observation {
    pub fn new(intensity: f64, gain: f64, error_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gain) {
            return Err(Error::out_of_range("gain", gain, "[0, 1]"));
        }
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(Error::out_of_range("error_rate", error_rate, "[0, 1]"));
        }
        Ok(Self {
            intensity,
            gain,
            error_rate,
        })
    }

    /// `E·Q`, the probability of an erroneous detection.
    pub fn error_gain(&self) -> f64 {
        self.gain * self.error_rate
    }
}

/// Per-intensity observed statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservedStatistics {
    entries: BTreeMap<IntensityLabel, Observation>,
}

impl ObservedStatistics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: IntensityLabel, obs: Observation) {
        self.entries.insert(label, obs);
    }

    pub fn with(mut self, label: IntensityLabel, obs: Observation) -> Self {
        self.insert(label, obs);
        self
    }

    pub fn get(&self, label: IntensityLabel) -> Result<Observation> {
        self.entries
            .get(&label)
            .copied()
            .ok_or(Error::MissingIntensity(label.as_str()))
    }

    pub fn signal(&self) -> Result<Observation> {
        self.get(IntensityLabel::Signal)
    }

    pub fn decoy(&self) -> Result<Observation> {
        self.get(IntensityLabel::Decoy)
    }

    pub fn vacuum(&self) -> Result<Observation> {
        self.get(IntensityLabel::Vacuum)
    }

    pub fn iter(&self) -> impl Iterator<Item = (IntensityLabel, Observation)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }
}

/// Overall transmittance `η_Bob · 10^{−αL/10}`.
pub fn transmittance(params: &DetectorParams, length_km: f64) -> f64 {
    params.eta_bob * 10f64.powf(-params.alpha_db_per_km * length_km / 10.0)
}

/// Honest gain `Y₀ + 1 − e^{−ηω}`, capped at one.
pub fn expected_gain(omega: f64, eta: f64, y0: f64) -> f64 {
    (y0 - (-eta * omega).exp_m1()).min(1.0)
}

/// Probability of an erroneous detection, `e₀Y₀ + e_det(1 − e^{−ηω})`.
pub fn expected_error_gain(omega: f64, eta: f64, params: &DetectorParams) -> f64 {
    params.e0 * params.y0 - params.e_detector * (-eta * omega).exp_m1()
}

/// Honest quantum bit error rate of an intensity-`omega` pulse.
pub fn expected_qber(omega: f64, eta: f64, params: &DetectorParams) -> Result<f64> {
    let gain = expected_gain(omega, eta, params.y0);
    if !(gain > 0.0) {
        return Err(Error::ZeroGain);
    }
    Ok(expected_error_gain(omega, eta, params) / gain)
}

/// Honest single-intensity observation at a given transmittance.
pub fn expected_observation(omega: f64, eta: f64, params: &DetectorParams) -> Result<Observation> {
    let gain = expected_gain(omega, eta, params.y0);
    let error_rate = expected_qber(omega, eta, params)?;
    Observation::new(omega, gain, error_rate)
}

/// Honest statistics for every listed setting at fibre length `length_km`.
pub fn simulate_statistics(
    params: &DetectorParams,
    length_km: f64,
    intensities: &[IntensityLevel],
) -> Result<ObservedStatistics> {
    params.validate()?;
    if !(length_km >= 0.0) {
        return Err(Error::out_of_range("length_km", length_km, ">= 0"));
    }
    let eta = transmittance(params, length_km);
    let mut stats = ObservedStatistics::new();
    for level in intensities {
        let obs = expected_observation(level.mean_photon_number, eta, params)?;
        stats.insert(level.label, obs);
    }
    Ok(stats)
}

/// Honest weak+vacuum statistics for signal `mu` and decoy `nu`.
pub fn weak_vacuum_statistics(
    params: &DetectorParams,
    length_km: f64,
    mu: f64,
    nu: f64,
) -> Result<ObservedStatistics> {
    simulate_statistics(
        params,
        length_km,
        &[
            IntensityLevel::signal(mu)?,
            IntensityLevel::decoy(nu)?,
            IntensityLevel::vacuum(),
        ],
    )
}

/// Honest n-photon yield `Y₀ + 1 − (1 − η)ⁿ`, capped at one.
pub fn honest_yield(n: u32, eta: f64, y0: f64) -> f64 {
    if n == 0 {
        return y0;
    }
    (y0 + 1.0 - (1.0 - eta).powi(n as i32)).min(1.0)
}
