//! Monte Carlo coincidence counting.
//!
//! Events `(x, detector)` are drawn straight from the joint density; no event
//! is ever assigned a region first. Each drawn event then survives with the
//! detector's efficiency. Trials are split into fixed-size chunks, chunk `k`
//! uses stream `k` of a ChaCha8 generator keyed by the master seed, and the
//! per-chunk histograms are added, so the result does not depend on how many
//! threads ran them.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::geometry::{linspace, ExperimentGeometry};
use crate::optics::Detector;
use crate::ti::{bandwidth_samples, pattern_values, DetectorChannel, TiError};

pub const CHUNK_TRIALS: u64 = 65_536;
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9), stream k for trials [k·65536, (k+1)·65536)";
/// Expected count below which adjacent bins are merged before the χ² test.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Ti(#[from] TiError),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("bins must be at least 2 (got {0})")]
    Bins(usize),
    #[error("x range must satisfy x_min < x_max (got [{0}, {1}])")]
    Range(f64, f64),
    #[error("efficiency of {0} must lie in [0, 1] (got {1})")]
    Efficiency(Detector, f64),
    #[error("density weights must be finite and non-negative")]
    BadWeight,
    #[error("expected {expected} density weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("density is zero everywhere")]
    ZeroDensity,
    #[error("histogram holds no counts to compare")]
    ZeroTrials,
    #[error("fewer than 2 bins remain after merging low-expectation bins ({0})")]
    TooFewGroups(usize),
    #[error("pattern has {pattern} bins but the histogram has {histogram}")]
    BinMismatch { pattern: usize, histogram: usize },
    #[error("fringe fit is singular")]
    SingularFit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub trials: u64,
    pub x_min: f64,
    pub x_max: f64,
    pub bins: usize,
    pub seed: u64,
    /// Event-thinning probability per detector.
    pub efficiency: [f64; 4],
    /// Overlap magnitude `η` per detector in the sampled density.
    pub visibility: [f64; 4],
    pub phi: f64,
    pub delta_lambda: f64,
    pub geometry: ExperimentGeometry,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            x_min: -3e-3,
            x_max: 3e-3,
            bins: 200,
            seed: 1,
            efficiency: [1.0; 4],
            visibility: [1.0; 4],
            phi: 0.0,
            delta_lambda: 0.0,
            geometry: ExperimentGeometry::default(),
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.trials == 0 {
            return Err(McError::NoTrials);
        }
        if self.bins < 2 {
            return Err(McError::Bins(self.bins));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(McError::Range(self.x_min, self.x_max));
        }
        for d in Detector::ALL {
            let e = self.efficiency[d.index()];
            if !(0.0..=1.0).contains(&e) {
                return Err(McError::Efficiency(d, e));
            }
            DetectorChannel::new(d, self.visibility[d.index()], self.phi)?;
        }
        bandwidth_samples(self.geometry.wavelength(), self.delta_lambda)?;
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.bins as f64
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        bin_centers(self.x_min, self.x_max, self.bins)
    }

    pub fn channel(&self, d: Detector) -> Result<DetectorChannel, McError> {
        Ok(DetectorChannel::new(d, self.visibility[d.index()], self.phi)?)
    }
}

pub fn bin_centers(x_min: f64, x_max: f64, bins: usize) -> Vec<f64> {
    let w = (x_max - x_min) / bins as f64;
    (0..bins).map(|j| x_min + w * (j as f64 + 0.5)).collect()
}

/// Probability mass over `(wavelength, bin, detector)` cells, flattened in
/// that order, with its running sum for inverse-CDF draws.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    x_min: f64,
    x_max: f64,
    bins: usize,
    cells: Vec<f64>,
    cumulative: Vec<f64>,
}

impl JointDensity {
    /// From raw weights laid out as `[layer][bin][detector]`; any number of
    /// layers.
    pub fn from_weights(x_min: f64, x_max: f64, bins: usize, cells: Vec<f64>) -> Result<Self, McError> {
        if bins < 2 {
            return Err(McError::Bins(bins));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(McError::Range(x_min, x_max));
        }
        if cells.is_empty() || !cells.len().is_multiple_of(4 * bins) {
            return Err(McError::WeightCount {
                expected: 4 * bins,
                got: cells.len(),
            });
        }
        if cells.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(McError::BadWeight);
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = cells
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if acc <= 0.0 {
            return Err(McError::ZeroDensity);
        }
        Ok(Self {
            x_min,
            x_max,
            bins,
            cells,
            cumulative,
        })
    }

    /// Transaction densities at the bin centers times the bin width, one
    /// layer per bandwidth wavelength. Every layer enters with its own mass,
    /// so a wavelength is drawn in proportion to its share of the window.
    pub fn build(cfg: &McConfig) -> Result<Self, McError> {
        cfg.validate()?;
        let centers = cfg.bin_centers();
        let lambdas: Vec<f64> = if cfg.delta_lambda == 0.0 {
            vec![cfg.geometry.wavelength()]
        } else {
            bandwidth_samples(cfg.geometry.wavelength(), cfg.delta_lambda)?.to_vec()
        };
        let w = cfg.bin_width();
        let mut cells = vec![0.0; lambdas.len() * cfg.bins * 4];
        for (l, &lambda) in lambdas.iter().enumerate() {
            let g = cfg.geometry.with_wavelength(lambda).map_err(TiError::from)?;
            for d in Detector::ALL {
                let values = pattern_values(&cfg.channel(d)?, &g, &centers)?;
                for (j, v) in values.into_iter().enumerate() {
                    cells[(l * cfg.bins + j) * 4 + d.index()] = v * w;
                }
            }
        }
        Self::from_weights(cfg.x_min, cfg.x_max, cfg.bins, cells)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Mass per bin for one detector, summed over layers.
    pub fn detector_mass(&self, d: Detector) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (i, w) in self.cells.iter().enumerate() {
            if i % 4 == d.index() {
                out[(i / 4) % self.bins] += w;
            }
        }
        out
    }

    fn bin_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.bins as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub x: f64,
    pub bin: usize,
    pub detector: Detector,
    pub accepted: bool,
}

/// One draw from `density`, thinned by `efficiency`.
pub fn sample_event<R: Rng + ?Sized>(rng: &mut R, density: &JointDensity, efficiency: &[f64; 4]) -> Event {
    let u = rng.random::<f64>() * density.total();
    // First cell whose running sum exceeds u; zero-mass cells never qualify.
    let mut idx = density.cumulative.partition_point(|&c| c <= u);
    if idx >= density.cells.len() {
        idx = density.cells.iter().rposition(|&w| w > 0.0).unwrap();
    }
    let bin = (idx / 4) % density.bins;
    let detector = Detector::from_index(idx % 4).unwrap();
    let x = density.x_min + density.bin_width() * (bin as f64 + rng.random::<f64>());
    let accepted = rng.random::<f64>() < efficiency[detector.index()];
    Event {
        x,
        bin,
        detector,
        accepted,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceHistogram {
    pub counts: [Vec<u64>; 4],
    pub trials: u64,
    pub accepted: u64,
    /// Events outside `[x_min, x_max)`. Draws are confined to the bin grid,
    /// so these stay zero for histograms built by [`run`].
    pub underflow: u64,
    pub overflow: u64,
    pub seed: u64,
}

impl CoincidenceHistogram {
    pub fn empty(bins: usize, seed: u64) -> Self {
        Self {
            counts: std::array::from_fn(|_| vec![0; bins]),
            trials: 0,
            accepted: 0,
            underflow: 0,
            overflow: 0,
            seed,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts[0].len()
    }

    pub fn detector(&self, d: Detector) -> &[u64] {
        &self.counts[d.index()]
    }

    pub fn rejected(&self) -> u64 {
        self.trials - self.accepted
    }

    /// Counts summed over D1..D4.
    pub fn marginal(&self) -> Vec<u64> {
        (0..self.bins())
            .map(|j| self.counts.iter().map(|c| c[j]).sum())
            .collect()
    }

    fn record(&mut self, e: &Event) {
        self.trials += 1;
        if e.accepted {
            self.accepted += 1;
            self.counts[e.detector.index()][e.bin] += 1;
        }
    }

    /// Adds another histogram over the same grid.
    pub fn merge(mut self, other: &Self) -> Self {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self.trials += other.trials;
        self.accepted += other.accepted;
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self
    }

    /// `x_center_m,d1,d2,d3,d4` rows.
    pub fn to_csv(&self, x_min: f64, x_max: f64) -> String {
        let mut out = String::from("x_center_m,d1,d2,d3,d4\n");
        for (j, x) in bin_centers(x_min, x_max, self.bins()).iter().enumerate() {
            let _ = writeln!(
                out,
                "{x:.16e},{},{},{},{}",
                self.counts[0][j], self.counts[1][j], self.counts[2][j], self.counts[3][j]
            );
        }
        out
    }
}

/// `trials` draws from `density`.
pub fn run_with_density(density: &JointDensity, trials: u64, seed: u64, efficiency: &[f64; 4]) -> CoincidenceHistogram {
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n = CHUNK_TRIALS.min(trials - k * CHUNK_TRIALS);
            let mut h = CoincidenceHistogram::empty(density.bins, seed);
            for _ in 0..n {
                h.record(&sample_event(&mut rng, density, efficiency));
            }
            h
        })
        .reduce(|| CoincidenceHistogram::empty(density.bins, seed), |a, b| a.merge(&b))
}

pub fn run(cfg: &McConfig) -> Result<CoincidenceHistogram, McError> {
    let density = JointDensity::build(cfg)?;
    Ok(run_with_density(&density, cfg.trials, cfg.seed, &cfg.efficiency))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareReport {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Largest `|O − E|/√E` over the merged groups.
    pub max_sigma_deviation: f64,
}

/// Pearson χ² of `observed` against `expected_shape` scaled to the observed
/// total. Adjacent bins are merged left to right until each group expects at
/// least [`MIN_EXPECTED`] counts; a short tail joins the last group.
pub fn compare_counts(observed: &[u64], expected_shape: &[f64]) -> Result<ChiSquareReport, McError> {
    if observed.len() != expected_shape.len() {
        return Err(McError::BinMismatch {
            pattern: expected_shape.len(),
            histogram: observed.len(),
        });
    }
    if expected_shape.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(McError::BadWeight);
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(McError::ZeroTrials);
    }
    let norm: f64 = expected_shape.iter().sum();
    if norm <= 0.0 {
        return Err(McError::ZeroDensity);
    }
    let scale = n as f64 / norm;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&c, &w) in observed.iter().zip(expected_shape) {
        o += c as f64;
        e += w * scale;
        if e >= MIN_EXPECTED {
            groups.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => groups.push((o, e)),
        }
    }
    if groups.len() < 2 {
        return Err(McError::TooFewGroups(groups.len()));
    }
    let chi2: f64 = groups.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let max_sigma_deviation = groups.iter().map(|(o, e)| (o - e).abs() / e.sqrt()).fold(0.0, f64::max);
    let dof = groups.len() - 1;
    let p_value = ChiSquared::new(dof as f64).expect("dof ≥ 1").sf(chi2);
    Ok(ChiSquareReport {
        chi2,
        dof,
        p_value,
        max_sigma_deviation,
    })
}

/// χ² of one detector's histogram against an analytic pattern sampled at the
/// bin centers.
pub fn compare(hist: &CoincidenceHistogram, detector: Detector, analytic: &[f64]) -> Result<ChiSquareReport, McError> {
    if hist.trials == 0 {
        return Err(McError::ZeroTrials);
    }
    compare_counts(hist.detector(detector), analytic)
}

/// Weighted least-squares fit `n_j ≈ α_j² (c + A cos θ_j + B sin θ_j)` with
/// `θ_j = k_x d` at the bin centers and weights `1/max(n_j, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub offset: f64,
    pub cos_amplitude: f64,
    pub sin_amplitude: f64,
    pub cos_sigma: f64,
    pub sin_sigma: f64,
    /// `√(A² + B²)/c`.
    pub visibility: f64,
    pub visibility_sigma: f64,
}

pub fn fit_fringe(counts: &[u64], centers: &[f64], g: &ExperimentGeometry) -> Result<FringeFit, McError> {
    if counts.len() != centers.len() {
        return Err(McError::BinMismatch {
            pattern: centers.len(),
            histogram: counts.len(),
        });
    }
    let mut xtwx = Matrix3::zeros();
    let mut xtwy = Vector3::zeros();
    for (&n, &x) in counts.iter().zip(centers) {
        let a2 = g.slit_envelope(x).powi(2);
        let th = g.two_path_phase(x);
        let row = Vector3::new(a2, a2 * th.cos(), a2 * th.sin());
        let w = 1.0 / (n.max(1) as f64);
        xtwx += row * row.transpose() * w;
        xtwy += row * (n as f64 * w);
    }
    let cov = xtwx.try_inverse().ok_or(McError::SingularFit)?;
    let beta = cov * xtwy;
    let (c, a, b) = (beta[0], beta[1], beta[2]);
    let r = a.hypot(b);
    let visibility = r / c;
    let grad = if r > 0.0 {
        Vector3::new(-r / (c * c), a / (c * r), b / (c * r))
    } else {
        Vector3::new(0.0, 1.0 / c, 0.0)
    };
    let var = (grad.transpose() * cov * grad)[(0, 0)];
    Ok(FringeFit {
        offset: c,
        cos_amplitude: a,
        sin_amplitude: b,
        cos_sigma: cov[(1, 1)].sqrt(),
        sin_sigma: cov[(2, 2)].sqrt(),
        visibility,
        visibility_sigma: var.max(0.0).sqrt(),
    })
}

/// Bin centers over `[x_min, x_max]` as used by [`run`]; the same grid as
/// [`linspace`] offset by half a bin.
pub fn grid(cfg: &McConfig) -> Vec<f64> {
    let w = cfg.bin_width();
    linspace(cfg.x_min + w / 2.0, cfg.x_max - w / 2.0, cfg.bins)
}
