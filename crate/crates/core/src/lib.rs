//! Decoy-state QKD with distinguishable signal and decoy settings.
//!
//! The crate covers four pieces of analysis:
//!
//! * [`distinguishability`]: turning measured pulse waveforms into
//!   side-channel distributions and measuring their trace distance.
//! * [`channel`]: the honest fibre/detector model that produces the observed
//!   gains and error rates.
//! * [`bounds`] and [`key_rate`]: single-photon yield and error bounds for a
//!   perfect source, a distinguishable source, and a receiver with calibrated
//!   transmittance, plus the resulting secure key rate curves.
//! * [`attack`]: a windowed photon-number-splitting attack that exploits the
//!   side channel, solved as a small linear program with [`simplex`].
//!
//! [`config`] and [`report`] hold the JSON run configuration and the CSV /
//! gnuplot writers used by the command-line front end.

// `!(x > 0.0)` is the deliberate NaN-rejecting form throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod distinguishability;
mod error;
pub mod key_rate;
pub mod report;
pub mod simplex;

pub use error::{Error, Result};

pub use attack::{
    breach_scan, eve_statistics, eve_yields, guess_matrix, solve_strategy, sweep_windows,
    AttackOutcome, AttackWindows, BreachPoint, EveStrategy, GuessMatrix, HonestYields,
    StrategySolution,
};
pub use bounds::{BoundResult, Intensities, KTerms};
pub use channel::{DetectorParams, Observation, ObservedStatistics};
pub use distinguishability::{
    normalize, poisson_pn, product_joint, trace_distance, Axis, IntensityLabel, IntensityLevel,
    MismatchSpec, SideChannelDistribution, WaveformTrace,
};
pub use key_rate::{IntensityGrid, RateCurve, RatePoint, Regime};
