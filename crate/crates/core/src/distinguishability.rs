//! Side-channel distributions and their distinguishability.
//!
//! Measured pulse shapes arrive as [`WaveformTrace`]s, get binned and
//! normalized into a [`SideChannelDistribution`], and are compared with the
//! trace distance. For distributions that are diagonal in the observable
//! basis the trace distance is half the L1 distance between the histograms.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a distribution's total mass from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A raw, unnormalized intensity envelope sampled along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformTrace {
    axis_label: String,
    units: Option<String>,
    samples: Vec<(f64, f64)>,
}

/// Optional sidecar next to a waveform CSV (`pulse.csv` -> `pulse.json`).
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
pub struct WaveformMeta {
    #[serde(default)]
    pub axis_label: Option<String>,
    #[serde(default)]
    pub units: Option<String>,
}

impl WaveformTrace {
    /// Builds a trace from `(coordinate, amplitude)` pairs.
    ///
    /// Coordinates must be finite and strictly increasing, and there must be
    /// at least two samples.
    pub fn new(axis_label: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidTrace(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, &(x, y)) in samples.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidTrace(format!(
                    "non-finite value in row {}",
                    i + 1
                )));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidTrace(format!(
                "coordinates must be strictly increasing (row {} has {} after {})",
                i + 2,
                samples[i + 1].0,
                samples[i].0
            )));
        }
        Ok(Self {
            axis_label: axis_label.into(),
            units: None,
            samples,
        })
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = Some(units.into());
        self
    }

    pub fn axis_label(&self) -> &str {
        &self.axis_label
    }

    pub fn units(&self) -> Option<&str> {
        self.units.as_deref()
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    /// Coordinate range covered by the samples.
    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Parses the `coordinate,amplitude` CSV format.
    pub fn from_csv_reader<R: Read>(axis_label: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["coordinate", "amplitude"] {
            return Err(Error::Parse(format!(
                "expected header `coordinate,amplitude`, found `{}`",
                names.join(",")
            )));
        }
        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "row {}: expected 2 fields, found {}",
                    i + 1,
                    record.len()
                )));
            }
            let parse = |field: &str| {
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{field}`: {e}", i + 1)))
            };
            samples.push((parse(&record[0])?, parse(&record[1])?));
        }
        Self::new(axis_label, samples)
    }
}

/// Reads a waveform CSV, picking up the axis label and units from a JSON
/// sidecar with the same stem when one exists.
pub fn ingest_waveform(path: impl AsRef<Path>) -> Result<WaveformTrace> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let meta = read_sidecar(path)?;
    let label = meta
        .axis_label
        .clone()
        .unwrap_or_else(|| "coordinate".to_string());
    let trace = WaveformTrace::from_csv_reader(label, file)?;
    Ok(match meta.units {
        Some(units) => trace.with_units(units),
        None => trace,
    })
}

fn read_sidecar(path: &Path) -> Result<WaveformMeta> {
    let sidecar = path.with_extension("json");
    if !sidecar.is_file() {
        return Ok(WaveformMeta::default());
    }
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One dimension of a binned distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    edges: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidDistribution(
                "an axis needs at least two bin edges".into(),
            ));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "bin edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            edges,
        })
    }

    /// Unit-width bins `[0,1), [1,2), ...`; handy for abstract histograms.
    pub fn unit_bins(name: impl Into<String>, bins: usize) -> Result<Self> {
        Self::new(name, (0..=bins).map(|i| i as f64).collect())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }
}

/// Bin edges at the trace's own sample coordinates.
pub fn native_edges(trace: &WaveformTrace) -> Vec<f64> {
    trace.coordinates().collect()
}

/// Evenly spaced edges of (at most) `width` covering `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, width: f64) -> Result<Vec<f64>> {
    if !(width > 0.0) || !(hi > lo) {
        return Err(Error::Precondition(format!(
            "uniform bins need hi > lo and width > 0 (lo={lo}, hi={hi}, width={width})"
        )));
    }
    let n = ((hi - lo) / width - 1e-9).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    let mut edges: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    edges.push(hi);
    Ok(edges)
}

/// A bin grid both traces can be normalized onto.
///
/// Traces sampled on the same coordinates share their native grid. Otherwise
/// the grid spans both ranges with the finer of the two median spacings.
pub fn common_edges(a: &WaveformTrace, b: &WaveformTrace) -> Result<Vec<f64>> {
    if a.len() == b.len() && a.coordinates().zip(b.coordinates()).all(|(x, y)| x == y) {
        return Ok(native_edges(a));
    }
    let (a_lo, a_hi) = a.span();
    let (b_lo, b_hi) = b.span();
    let width = median_spacing(a).min(median_spacing(b));
    uniform_edges(a_lo.min(b_lo), a_hi.max(b_hi), width)
}

fn median_spacing(trace: &WaveformTrace) -> f64 {
    let mut gaps: Vec<f64> = trace.samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Normalized probability distribution over a (possibly multi-axis) bin grid.
///
/// Probabilities are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideChannelDistribution {
    axes: Vec<Axis>,
    probabilities: Vec<f64>,
}

impl SideChannelDistribution {
    pub fn new(axes: Vec<Axis>, probabilities: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDistribution("no axes".into()));
        }
        let cells: usize = axes.iter().map(Axis::bins).product();
        if cells != probabilities.len() {
            return Err(Error::InvalidDistribution(format!(
                "grid has {cells} cells but {} probabilities were given",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            axes,
            probabilities,
        })
    }

    /// One-axis distribution on unit-width bins.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        let axis = Axis::unit_bins("bin", probabilities.len())?;
        Self::new(vec![axis], probabilities)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.axes.len() == other.axes.len()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(a, b)| a.edges == b.edges)
    }

    /// Sums out every axis except `axis`.
    pub fn marginal(&self, axis: usize) -> Result<Self> {
        if axis >= self.axes.len() {
            return Err(Error::Precondition(format!(
                "axis {axis} out of range for a {}-axis distribution",
                self.axes.len()
            )));
        }
        let shape: Vec<usize> = self.axes.iter().map(Axis::bins).collect();
        let inner: usize = shape[axis + 1..].iter().product();
        let n = shape[axis];
        let mut out = vec![0.0; n];
        for (flat, p) in self.probabilities.iter().enumerate() {
            out[(flat / inner) % n] += p;
        }
        Self::new(vec![self.axes[axis].clone()], out)
    }

    /// Writes `bin_low,bin_high,probability` rows (one column pair per axis
    /// for joint distributions).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        if self.axes.len() == 1 {
            wtr.write_record(["bin_low", "bin_high", "probability"])?;
        } else {
            let mut header = Vec::new();
            for a in &self.axes {
                header.push(format!("{}_low", a.name));
                header.push(format!("{}_high", a.name));
            }
            header.push("probability".to_string());
            wtr.write_record(&header)?;
        }
        let shape: Vec<usize> = self.axes.iter().map(Axis::bins).collect();
        for (flat, p) in self.probabilities.iter().enumerate() {
            let mut rem = flat;
            let mut idx = vec![0; shape.len()];
            for d in (0..shape.len()).rev() {
                idx[d] = rem % shape[d];
                rem /= shape[d];
            }
            let mut row = Vec::with_capacity(2 * shape.len() + 1);
            for (d, &i) in idx.iter().enumerate() {
                let (lo, hi) = self.axes[d].bin(i);
                row.push(lo.to_string());
                row.push(hi.to_string());
            }
            row.push(p.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Bins a waveform into a normalized distribution.
///
/// Negative amplitudes are clamped to zero, the samples are joined
/// piecewise-linearly, and each bin receives the exact (trapezoidal) area of
/// the interpolant inside it. The edges must cover the sampled range.
pub fn normalize(trace: &WaveformTrace, edges: &[f64]) -> Result<SideChannelDistribution> {
    let axis = Axis::new(trace.axis_label.clone(), edges.to_vec())?;
    let (lo, hi) = trace.span();
    if edges[0] > lo || edges[edges.len() - 1] < hi {
        return Err(Error::Precondition(format!(
            "bins [{}, {}] do not cover the trace range [{lo}, {hi}]",
            edges[0],
            edges[edges.len() - 1]
        )));
    }

    let mut areas = vec![0.0; axis.bins()];
    for seg in trace.samples.windows(2) {
        let (x0, y0) = (seg[0].0, seg[0].1.max(0.0));
        let (x1, y1) = (seg[1].0, seg[1].1.max(0.0));
        if y0 == 0.0 && y1 == 0.0 {
            continue;
        }
        let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        // first bin whose upper edge lies above x0
        let mut b = edges.partition_point(|&e| e <= x0).saturating_sub(1);
        while b < areas.len() && edges[b] < x1 {
            let a = edges[b].max(x0);
            let c = edges[b + 1].min(x1);
            if c > a {
                areas[b] += 0.5 * (at(a) + at(c)) * (c - a);
            }
            b += 1;
        }
    }

    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroArea);
    }
    areas.iter_mut().for_each(|a| *a /= total);
    SideChannelDistribution::new(vec![axis], areas)
}

/// Normalizes a signal/decoy pair onto one shared grid.
///
/// Without `bin_width` the grid comes from [`common_edges`]; with it, uniform
/// bins of at most that width span both traces.
pub fn normalize_pair(
    signal: &WaveformTrace,
    decoy: &WaveformTrace,
    bin_width: Option<f64>,
) -> Result<(SideChannelDistribution, SideChannelDistribution)> {
    let edges = match bin_width {
        None => common_edges(signal, decoy)?,
        Some(width) => {
            let (s_lo, s_hi) = signal.span();
            let (d_lo, d_hi) = decoy.span();
            uniform_edges(s_lo.min(d_lo), s_hi.max(d_hi), width)?
        }
    };
    Ok((normalize(signal, &edges)?, normalize(decoy, &edges)?))
}

/// Trace distance `½ Σ |f − g|` between two distributions on the same grid.
pub fn trace_distance(f: &SideChannelDistribution, g: &SideChannelDistribution) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let l1: f64 = f
        .probabilities
        .iter()
        .zip(&g.probabilities)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

/// Joint distribution of two independent one-axis observables.
pub fn product_joint(
    first: &SideChannelDistribution,
    second: &SideChannelDistribution,
) -> Result<SideChannelDistribution> {
    if first.dims() != 1 || second.dims() != 1 {
        return Err(Error::Precondition(
            "product_joint takes two one-axis distributions".into(),
        ));
    }
    let probabilities = first
        .probabilities
        .iter()
        .flat_map(|a| second.probabilities.iter().map(move |b| a * b))
        .collect();
    SideChannelDistribution::new(
        vec![first.axes[0].clone(), second.axes[0].clone()],
        probabilities,
    )
}

/// Poisson photon-number probability `e^{−ω} ωⁿ / n!`.
pub fn poisson_pn(omega: f64, n: u32) -> f64 {
    debug_assert!(omega >= 0.0, "mean photon number must be nonnegative");
    if omega == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut p = (-omega).exp();
    for k in 1..=n {
        p *= omega / k as f64;
    }
    p
}

/// Probability mass of photon numbers strictly above `n`.
///
/// Summed term by term so tiny tails do not drown in `1 − cdf` cancellation.
pub fn poisson_tail(omega: f64, n: u32) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let mut term = poisson_pn(omega, n);
    let mut tail = 0.0;
    let mut k = n;
    loop {
        k += 1;
        term *= omega / k as f64;
        tail += term;
        if term <= tail * 1e-17 || term == 0.0 || k > n + 400 {
            break;
        }
    }
    tail
}

/// Smallest `n` whose Poisson tail mass beyond `n` is below `tolerance`.
pub fn photon_number_cutoff(omega: f64, tolerance: f64) -> u32 {
    let mut n = 1;
    while poisson_tail(omega, n) >= tolerance {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityLabel {
    Signal,
    Decoy,
    Vacuum,
}

impl IntensityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            IntensityLabel::Signal => "signal",
            IntensityLabel::Decoy => "decoy",
            IntensityLabel::Vacuum => "vacuum",
        }
    }
}

impl fmt::Display for IntensityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An intensity setting and its mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityLevel {
    pub label: IntensityLabel,
    pub mean_photon_number: f64,
}

impl IntensityLevel {
    pub fn new(label: IntensityLabel, mean_photon_number: f64) -> Result<Self> {
        if !(mean_photon_number >= 0.0) || !mean_photon_number.is_finite() {
            return Err(Error::out_of_range(
                "mean_photon_number",
                mean_photon_number,
                "finite and >= 0",
            ));
        }
        Ok(Self {
            label,
            mean_photon_number,
        })
    }

    pub fn signal(mu: f64) -> Result<Self> {
        Self::new(IntensityLabel::Signal, mu)
    }

    pub fn decoy(nu: f64) -> Result<Self> {
        Self::new(IntensityLabel::Decoy, nu)
    }

    /// The vacuum setting of the weak+vacuum protocol.
    pub fn vacuum() -> Self {
        Self {
            label: IntensityLabel::Vacuum,
            mean_photon_number: 0.0,
        }
    }

    /// A non-ideal "vacuum" setting with residual intensity `nu1`.
    pub fn weak_vacuum(nu1: f64) -> Result<Self> {
        Self::new(IntensityLabel::Vacuum, nu1)
    }
}

/// Trace distances between the signal setting and the other two settings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MismatchSpec {
    pub d_mu_nu: f64,
    #[serde(default)]
    pub d_mu_nu1: f64,
}

impl MismatchSpec {
    pub fn new(d_mu_nu: f64, d_mu_nu1: f64) -> Result<Self> {
        for (name, v) in [("d_mu_nu", d_mu_nu), ("d_mu_nu1", d_mu_nu1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::out_of_range(name, v, "[0, 1]"));
            }
        }
        Ok(Self { d_mu_nu, d_mu_nu1 })
    }

    /// Mismatch between signal and decoy only (vacuum indistinguishable).
    pub fn signal_decoy(d_mu_nu: f64) -> Result<Self> {
        Self::new(d_mu_nu, 0.0)
    }

    pub fn perfect() -> Self {
        Self::default()
    }

    pub fn is_perfect(&self) -> bool {
        self.d_mu_nu == 0.0 && self.d_mu_nu1 == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(p: &[f64]) -> SideChannelDistribution {
        SideChannelDistribution::from_probabilities(p.to_vec()).unwrap()
    }

    #[test]
    fn minimal_trace_is_accepted() {
        let t =
            WaveformTrace::from_csv_reader("t", "coordinate,amplitude\n0,1.0\n1,1.0\n".as_bytes())
                .unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn duplicated_coordinate_is_rejected() {
        let err =
            WaveformTrace::from_csv_reader("t", "coordinate,amplitude\n0,1\n1,2\n1,3\n".as_bytes())
                .unwrap_err();
        assert!(matches!(err, Error::InvalidTrace(_)), "{err}");
    }

    #[test]
    fn single_sample_and_bad_rows_are_rejected() {
        assert!(matches!(
            WaveformTrace::from_csv_reader("t", "coordinate,amplitude\n0,1\n".as_bytes()),
            Err(Error::InvalidTrace(_))
        ));
        assert!(matches!(
            WaveformTrace::from_csv_reader("t", "coordinate,amplitude\n0,x\n1,1\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            WaveformTrace::from_csv_reader("t", "time,value\n0,1\n1,1\n".as_bytes()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn constant_amplitude_spreads_uniformly() {
        let t = WaveformTrace::new("t", (0..=8).map(|i| (i as f64 * 0.5, 3.0)).collect()).unwrap();
        let d = normalize(&t, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        for p in d.probabilities() {
            assert_abs_diff_eq!(*p, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn support_inside_one_bin() {
        let t = WaveformTrace::new(
            "t",
            vec![(0.0, 0.0), (1.0, 0.0), (1.5, 2.0), (2.0, 0.0), (3.0, 0.0)],
        )
        .unwrap();
        let d = normalize(&t, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.probabilities(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn symmetric_triangle_splits_evenly() {
        let t = WaveformTrace::new("t", vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        let d = normalize(&t, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn negative_amplitudes_are_clamped() {
        let t = WaveformTrace::new("t", vec![(0.0, -5.0), (1.0, -5.0), (2.0, 1.0), (3.0, 1.0)])
            .unwrap();
        let d = normalize(&t, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.probabilities()[0], 0.0);
        assert!(d.probabilities().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn zero_area_cannot_be_normalized() {
        let t = WaveformTrace::new("t", vec![(0.0, -1.0), (1.0, 0.0), (2.0, -0.5)]).unwrap();
        assert!(matches!(normalize(&t, &[0.0, 2.0]), Err(Error::ZeroArea)));
    }

    #[test]
    fn bins_must_cover_trace() {
        let t = WaveformTrace::new("t", vec![(0.0, 1.0), (2.0, 1.0)]).unwrap();
        assert!(matches!(
            normalize(&t, &[0.5, 1.0, 2.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let f = dist(&[0.6, 0.4]);
        let g = dist(&[0.4, 0.6]);
        assert_eq!(trace_distance(&f, &f).unwrap(), 0.0);
        assert_abs_diff_eq!(trace_distance(&f, &g).unwrap(), 0.2, epsilon = 1e-15);
        let a = dist(&[0.5, 0.5, 0.0, 0.0]);
        let b = dist(&[0.0, 0.0, 0.25, 0.75]);
        assert_eq!(trace_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn trace_distance_rejects_other_grids() {
        let f = dist(&[0.5, 0.5]);
        let g = dist(&[0.2, 0.3, 0.5]);
        assert!(matches!(trace_distance(&f, &g), Err(Error::GridMismatch)));
        let shifted = SideChannelDistribution::new(
            vec![Axis::new("bin", vec![0.0, 1.0, 2.5]).unwrap()],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(matches!(
            trace_distance(&f, &shifted),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn product_of_point_masses_and_uniforms() {
        let j = product_joint(&dist(&[1.0]), &dist(&[1.0])).unwrap();
        assert_eq!(j.probabilities(), &[1.0]);
        assert_eq!(j.dims(), 2);
        let j = product_joint(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5])).unwrap();
        assert_eq!(j.probabilities(), &[0.25; 4]);
    }

    #[test]
    fn product_rejects_joint_inputs() {
        let j = product_joint(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5])).unwrap();
        assert!(matches!(
            product_joint(&j, &dist(&[1.0])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn poisson_values() {
        assert_eq!(poisson_pn(0.0, 0), 1.0);
        assert_eq!(poisson_pn(0.0, 3), 0.0);
        // e^{-0.6} = 0.548811636094026...
        assert_abs_diff_eq!(poisson_pn(0.6, 0), 0.548_811_636_094_026, epsilon = 1e-15);
        assert_abs_diff_eq!(
            poisson_pn(0.6, 2),
            0.548_811_636_094_026 * 0.18,
            epsilon = 1e-15
        );
    }

    #[test]
    fn photon_cutoff_for_signal_intensity() {
        let n = photon_number_cutoff(0.6, 1e-12);
        assert!(poisson_tail(0.6, n) < 1e-12);
        assert!(poisson_tail(0.6, n - 1) >= 1e-12);
        assert!(photon_number_cutoff(1.0, 1e-12) <= 20);
    }

    #[test]
    fn mismatch_range_is_enforced() {
        assert!(MismatchSpec::new(1.2, 0.0).is_err());
        assert!(MismatchSpec::new(0.1, -0.1).is_err());
        assert!(MismatchSpec::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn distribution_csv_has_expected_header() {
        let mut out = Vec::new();
        dist(&[0.25, 0.75]).write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "bin_low,bin_high,probability\n0,1,0.25\n1,2,0.75\n");
    }

    #[test]
    fn uniform_edges_cover_range() {
        let e = uniform_edges(0.0, 1.0, 0.3).unwrap();
        assert_eq!(e.len(), 5);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 1.0);
        let e = uniform_edges(0.0, 1.0, 0.25).unwrap();
        assert_eq!(e.len(), 5);
    }
}
