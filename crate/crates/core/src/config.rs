//! JSON run configuration shared by the command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::DetectorParams;
use crate::distinguishability::{
    ingest_waveform, normalize_pair, product_joint, trace_distance, SideChannelDistribution,
};
use crate::error::{Error, Result};
use crate::key_rate::{distance_grid, IntensityGrid, Regime};

/// A preset name or a full parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DetectorChoice {
    Preset(String),
    Explicit(DetectorParams),
}

impl Default for DetectorChoice {
    fn default() -> Self {
        DetectorChoice::Preset("gys".into())
    }
}

impl DetectorChoice {
    pub fn resolve(&self) -> Result<DetectorParams> {
        let params = match self {
            DetectorChoice::Preset(name) => DetectorParams::preset(name)?,
            DetectorChoice::Explicit(p) => *p,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Waveform files for one side-channel axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformPair {
    pub signal: PathBuf,
    pub decoy: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchConfig {
    /// Explicit signal/decoy trace distances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_mu_nu: Option<Vec<f64>>,
    /// One pair per axis; two pairs are combined as independent observables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveforms: Option<Vec<WaveformPair>>,
    /// Uniform bin width; native sample spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for DistanceGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 160.0,
            step: 1.0,
        }
    }
}

impl DistanceGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        distance_grid(self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub mu: f64,
    pub nu: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self { mu: 0.6, nu: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub detector: DetectorChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regimes: Option<Vec<Regime>>,
    #[serde(default)]
    pub mismatch: MismatchConfig,
    #[serde(default)]
    pub intensity_grid: IntensityGrid,
    #[serde(default)]
    pub distance_grid: DistanceGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub attack: AttackConfig,
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        cfg.rebase(base_dir);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(pairs) = self.mismatch.waveforms.as_mut() {
            for pair in pairs {
                fix(&mut pair.signal);
                fix(&mut pair.decoy);
            }
        }
        if let Some(out) = self.output_dir.as_mut() {
            fix(out);
        }
    }

    /// Regimes to run, in canonical order without repeats.
    pub fn regimes(&self) -> Result<Vec<Regime>> {
        let mut list = match (&self.regime, &self.regimes) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `regime` or `regimes`, not both".into(),
                ))
            }
            (Some(r), None) => vec![*r],
            (None, Some(rs)) if rs.is_empty() => {
                return Err(Error::Config("`regimes` is empty".into()))
            }
            (None, Some(rs)) => rs.clone(),
            (None, None) => Regime::ALL.to_vec(),
        };
        list.sort();
        list.dedup();
        Ok(list)
    }

    pub fn validate_mismatch(&self) -> Result<()> {
        let m = &self.mismatch;
        match (&m.d_mu_nu, &m.waveforms) {
            (Some(_), Some(_)) | (None, None) => Err(Error::Config(
                "mismatch needs exactly one of `d_mu_nu` or `waveforms`".into(),
            )),
            (Some(ds), None) => {
                if ds.is_empty() {
                    return Err(Error::Config("`d_mu_nu` is empty".into()));
                }
                if let Some(d) = ds.iter().find(|d| !(0.0..=1.0).contains(*d)) {
                    return Err(Error::out_of_range("d_mu_nu", *d, "[0, 1]"));
                }
                Ok(())
            }
            (None, Some(pairs)) => {
                if !(1..=2).contains(&pairs.len()) {
                    return Err(Error::Config(
                        "`waveforms` takes one pair, or two for a joint observable".into(),
                    ));
                }
                if let Some(w) = m.bin_width.filter(|w| !(*w > 0.0)) {
                    return Err(Error::out_of_range("bin_width", w, "> 0"));
                }
                Ok(())
            }
        }
    }

    /// Checks everything the simulation needs.
    pub fn validate(&self) -> Result<()> {
        self.detector.resolve()?;
        self.regimes()?;
        self.validate_mismatch()?;
        self.intensity_grid.validate()?;
        self.distance_grid.points()?;
        Ok(())
    }

    /// Signal and decoy distributions from the configured waveforms.
    pub fn distributions(
        &self,
    ) -> Result<Option<(SideChannelDistribution, SideChannelDistribution)>> {
        let Some(pairs) = &self.mismatch.waveforms else {
            return Ok(None);
        };
        load_distributions(pairs, self.mismatch.bin_width).map(Some)
    }

    /// Trace distances to simulate: the explicit list, or the single value
    /// measured from the waveforms.
    pub fn mismatch_values(&self) -> Result<Vec<f64>> {
        self.validate_mismatch()?;
        if let Some(ds) = &self.mismatch.d_mu_nu {
            return Ok(ds.clone());
        }
        let (s, d) = self.distributions()?.expect("validated waveforms");
        Ok(vec![trace_distance(&s, &d)?])
    }
}

/// Loads one or two waveform pairs into signal/decoy distributions; two
/// pairs are joined as independent axes.
pub fn load_distributions(
    pairs: &[WaveformPair],
    bin_width: Option<f64>,
) -> Result<(SideChannelDistribution, SideChannelDistribution)> {
    let mut per_axis = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let s = ingest_waveform(&pair.signal)?;
        let d = ingest_waveform(&pair.decoy)?;
        per_axis.push(normalize_pair(&s, &d, bin_width)?);
    }
    match per_axis.len() {
        1 => Ok(per_axis.pop().expect("one pair")),
        2 => {
            let (s2, d2) = per_axis.pop().expect("two pairs");
            let (s1, d1) = per_axis.pop().expect("two pairs");
            Ok((product_joint(&s1, &s2)?, product_joint(&d1, &d2)?))
        }
        n => Err(Error::Config(format!(
            "expected one or two waveform pairs, got {n}"
        ))),
    }
}
