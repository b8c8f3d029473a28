//! Kernel-weighted prediction of the next segment.
//!
//! Every past segment `Ξ_m` with a successor is compared with the latest
//! segment `Ξ_n` through the multiscale distance of their pyramids. The
//! successors `Ξ_{m+1}` are then averaged with weights `K(D_m / h)`:
//!
//! ```text
//! Ξ_{n+1|n} = Σ_m K(D_m/h) Ξ_{m+1} / (1/n + Σ_m K(D_m/h)),   m = 1..n-1
//! ```
//!
//! The `1/n` term keeps the denominator away from zero. Under the
//! interpolating basis the scaling coefficients are the sample values, so the
//! reconstructed curve at the sampling points is the coefficient vector
//! itself.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::normalized_weights;
use crate::similarity::Similarity;
use crate::wavelet::{self, dyadic_level, forward_dwt_values, Filter, Segment, WaveletPyramid};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Number of points in the automatic bandwidth grid.
pub const DEFAULT_GRID_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Laplace,
}

impl KernelFamily {
    /// Density at `u`; both families are symmetric and nonincreasing in `|u|`.
    pub fn density(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => (-0.5 * u * u).exp() * FRAC_1_SQRT_2PI,
            KernelFamily::Laplace => 0.5 * (-u.abs()).exp(),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "laplace" => Ok(KernelFamily::Laplace),
            other => Err(Error::Config(format!(
                "unknown kernel '{other}' (expected gaussian or laplace)"
            ))),
        }
    }
}

/// Kernel family together with a positive bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::Config(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        Ok(KernelSpec { family, bandwidth })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel value at a nonnegative argument.
    pub fn eval(&self, u: f64) -> f64 {
        self.family.density(u)
    }

    /// `K(distance / h)`.
    pub fn weight(&self, distance: f64) -> f64 {
        self.eval(distance / self.bandwidth)
    }
}

/// `K(u)` for the given spec.
pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

/// How kernel values are turned into averaging weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `K_m / (1/n + Σ K)`; the weights sum to less than one, so the
    /// prediction is shrunk towards zero when few past segments are similar.
    Regularized,
    /// The resampling weights, which sum to exactly one.
    #[default]
    Normalized,
}

/// Everything the predictor needs apart from the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub filter: Filter,
    pub j0: usize,
    pub similarity: Similarity,
    pub kernel: KernelFamily,
    pub scheme: WeightScheme,
}

/// Output of a one-step-ahead prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionResult {
    /// Predicted finest-level scaling coefficients (length `2^J`).
    pub xi_pred: Vec<f64>,
    /// Reconstructed curve at the original sampling points.
    pub curve: Vec<f64>,
    /// `K(D_m / h)` for `m = 1..n-1`.
    pub kernel_values: Vec<f64>,
    /// Resampling weights `w_{n,m}`; they sum to one.
    pub weights: Vec<f64>,
    pub h_used: f64,
    /// `Σ_m K(D_m / h)`.
    pub effective_sample: f64,
}

/// Padded history with its pyramids computed once.
#[derive(Debug, Clone)]
pub struct PreparedHistory {
    original_len: usize,
    coeffs: Vec<Vec<f64>>,
    pyramids: Vec<WaveletPyramid>,
}

impl PreparedHistory {
    /// Pads each segment to a power of two and decomposes it.
    pub fn from_segments(segments: &[Segment], cfg: &PredictorConfig) -> Result<Self> {
        let p = check_equal_lengths(segments.iter().map(Segment::len))?;
        let coeffs = segments
            .iter()
            .map(|s| wavelet::pad_to_pow2(s).map(Segment::into_values))
            .collect::<Result<Vec<_>>>()?;
        Self::build(p, coeffs, cfg)
    }

    /// Uses dyadic-length coefficient vectors as they are.
    pub fn from_coefficients(history: &[Vec<f64>], cfg: &PredictorConfig) -> Result<Self> {
        let len = check_equal_lengths(history.iter().map(Vec::len))?;
        if dyadic_level(len).is_none() {
            return Err(Error::NotPowerOfTwo { len });
        }
        Self::build(len, history.to_vec(), cfg)
    }

    fn build(original_len: usize, coeffs: Vec<Vec<f64>>, cfg: &PredictorConfig) -> Result<Self> {
        let pyramids = coeffs
            .iter()
            .map(|c| forward_dwt_values(c, cfg.j0, cfg.filter))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedHistory {
            original_len,
            coeffs,
            pyramids,
        })
    }

    /// Number of segments `n`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Samples per segment before padding.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Scaling coefficients of segment `i` (0-based).
    pub fn coefficients(&self, i: usize) -> &[f64] {
        &self.coeffs[i]
    }

    pub fn pyramid(&self, i: usize) -> &WaveletPyramid {
        &self.pyramids[i]
    }

    /// Successors `Z_2..Z_n` truncated to the original `P` samples.
    pub fn successor_curves(&self) -> Vec<Vec<f64>> {
        self.coeffs[1..]
            .iter()
            .map(|c| c[..self.original_len].to_vec())
            .collect()
    }

    /// The first `len` segments.
    pub fn prefix(&self, len: usize) -> PreparedHistory {
        PreparedHistory {
            original_len: self.original_len,
            coeffs: self.coeffs[..len].to_vec(),
            pyramids: self.pyramids[..len].to_vec(),
        }
    }

    /// Distances from the last pyramid to each earlier one, `m = 1..n-1`.
    pub fn query_distances(&self, similarity: &Similarity) -> Result<Vec<f64>> {
        let n = self.len();
        if n < 2 {
            return Err(Error::InsufficientHistory { needed: 2, got: n });
        }
        let query = &self.pyramids[n - 1];
        self.pyramids[..n - 1]
            .iter()
            .map(|p| similarity.distance(query, p))
            .collect()
    }

    /// Lower-triangular distance table: `rows[i][m] = D(C(Ξ_i), C(Ξ_m))`, `m < i`.
    pub fn distance_table(&self, similarity: &Similarity) -> Result<Vec<Vec<f64>>> {
        (0..self.len())
            .map(|i| {
                (0..i)
                    .map(|m| similarity.distance(&self.pyramids[i], &self.pyramids[m]))
                    .collect()
            })
            .collect()
    }
}

fn check_equal_lengths(mut lens: impl Iterator<Item = usize>) -> Result<usize> {
    let first = lens.next().ok_or(Error::InsufficientHistory { needed: 2, got: 0 })?;
    for len in lens {
        if len != first {
            return Err(Error::Shape {
                expected: first,
                got: len,
            });
        }
    }
    Ok(first)
}

/// Kernel-weighted average of the successors `coeffs[1..=k.len()]`.
fn kernel_average(
    kernel_values: &[f64],
    successors: &[Vec<f64>],
    scheme: WeightScheme,
) -> Vec<f64> {
    let n = kernel_values.len() + 1;
    let mut out = vec![0.0; successors[0].len()];
    match scheme {
        WeightScheme::Regularized => {
            let denom = 1.0 / n as f64 + kernel_values.iter().sum::<f64>();
            for (k, next) in kernel_values.iter().zip(successors) {
                for (o, v) in out.iter_mut().zip(next) {
                    *o += k * v;
                }
            }
            out.iter_mut().for_each(|o| *o /= denom);
        }
        WeightScheme::Normalized => {
            for (w, next) in normalized_weights(kernel_values).iter().zip(successors) {
                for (o, v) in out.iter_mut().zip(next) {
                    *o += w * v;
                }
            }
        }
    }
    out
}

/// Predicts segment `n+1` from a prepared history of `n >= 2` segments.
pub fn predict_prepared(
    history: &PreparedHistory,
    kernel: &KernelSpec,
    cfg: &PredictorConfig,
) -> Result<PredictionResult> {
    let distances = history.query_distances(&cfg.similarity)?;
    let kernel_values: Vec<f64> = distances.iter().map(|&d| kernel.weight(d)).collect();
    let xi_pred = kernel_average(&kernel_values, &history.coeffs[1..], cfg.scheme);
    let curve = xi_pred[..history.original_len].to_vec();
    Ok(PredictionResult {
        curve,
        weights: normalized_weights(&kernel_values),
        effective_sample: kernel_values.iter().sum(),
        kernel_values,
        xi_pred,
        h_used: kernel.bandwidth(),
    })
}

/// Predicts `Ξ_{n+1|n}` from finest-level scaling coefficients of dyadic length.
pub fn predict_coefficients(
    history: &[Vec<f64>],
    kernel: &KernelSpec,
    cfg: &PredictorConfig,
) -> Result<PredictionResult> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: history.len(),
        });
    }
    let prepared = PreparedHistory::from_coefficients(history, cfg)?;
    predict_prepared(&prepared, kernel, cfg)
}

/// Full pipeline on raw segments: pad, decompose, predict, truncate to `P`.
pub fn predict_one_ahead(
    segments: &[Segment],
    kernel: &KernelSpec,
    cfg: &PredictorConfig,
) -> Result<PredictionResult> {
    if segments.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: segments.len(),
        });
    }
    let prepared = PreparedHistory::from_segments(segments, cfg)?;
    predict_prepared(&prepared, kernel, cfg)
}

/// One row of the cross-validation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub h: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    /// Grid value with the smallest score (smallest `h` on ties).
    pub bandwidth: f64,
    pub table: Vec<CvPoint>,
}

/// Fixed bandwidth or cross-validated selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    Fixed(f64),
    /// Cross-validation over `grid`, or over [`default_grid`] when absent.
    Cv { grid: Option<Vec<f64>> },
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Cv { grid: None }
    }
}

impl Bandwidth {
    /// Resolves to a concrete bandwidth, returning the CV table when one was run.
    pub fn resolve(
        &self,
        history: &PreparedHistory,
        cfg: &PredictorConfig,
    ) -> Result<(f64, Option<CvOutcome>)> {
        match self {
            Bandwidth::Fixed(h) => {
                KernelSpec::new(cfg.kernel, *h)?;
                Ok((*h, None))
            }
            Bandwidth::Cv { grid } => {
                let grid = match grid {
                    Some(g) => g.clone(),
                    None => default_grid(history, &cfg.similarity)?,
                };
                let outcome = cv_select(history, &grid, cfg)?;
                Ok((outcome.bandwidth, Some(outcome)))
            }
        }
    }
}

/// Time-series cross-validation score for every bandwidth in `grid`.
///
/// Segment `i+1` is predicted from segments `1..=i` only, for `i = 2..n-1`,
/// and the loss is the mean squared error over the original `P` samples.
/// The scores are averaged over those `n-2` predictions.
pub fn cv_scores(history: &PreparedHistory, grid: &[f64], cfg: &PredictorConfig) -> Result<Vec<CvPoint>> {
    let n = history.len();
    if n < 3 {
        return Err(Error::InsufficientHistory { needed: 3, got: n });
    }
    check_grid(grid)?;
    let table = history.distance_table(&cfg.similarity)?;
    let p = history.original_len;

    grid.iter()
        .map(|&h| {
            let kernel = KernelSpec::new(cfg.kernel, h)?;
            let mut total = 0.0;
            // 0-based: query segment q = 1..n-2 predicts q+1 from 0..=q.
            for q in 1..n - 1 {
                let kernel_values: Vec<f64> = table[q].iter().map(|&d| kernel.weight(d)).collect();
                let pred = kernel_average(&kernel_values, &history.coeffs[1..=q], cfg.scheme);
                let truth = &history.coeffs[q + 1];
                let mse = pred[..p]
                    .iter()
                    .zip(&truth[..p])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / p as f64;
                total += mse;
            }
            Ok(CvPoint {
                h,
                score: total / (n - 2) as f64,
            })
        })
        .collect()
}

/// Picks the bandwidth minimizing the cross-validation score over `grid`.
pub fn cv_bandwidth(segments: &[Segment], grid: &[f64], cfg: &PredictorConfig) -> Result<CvOutcome> {
    check_grid(grid)?;
    if segments.len() < 3 {
        return Err(Error::InsufficientHistory {
            needed: 3,
            got: segments.len(),
        });
    }
    let history = PreparedHistory::from_segments(segments, cfg)?;
    cv_select(&history, grid, cfg)
}

/// Cross-validation on an already prepared history.
pub fn cv_select(history: &PreparedHistory, grid: &[f64], cfg: &PredictorConfig) -> Result<CvOutcome> {
    let table = cv_scores(history, grid, cfg)?;
    let mut best = table[0];
    for point in &table[1..] {
        if point.score < best.score {
            best = *point;
        }
    }
    Ok(CvOutcome {
        bandwidth: best.h,
        table,
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("bandwidth grid is empty".into()));
    }
    if grid.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Config("bandwidth grid values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("bandwidth grid must be strictly ascending".into()));
    }
    Ok(())
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(Error::Config(format!("invalid grid {lo}:{hi}:{count}")));
    }
    if count == 1 || lo == hi {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    Ok(grid)
}

/// Log-spaced grid spanning the 1% to 99% quantiles of all pairwise
/// distances between history pyramids.
///
/// When every distance is zero the single bandwidth `1.0` is returned; a zero
/// lower quantile is replaced by the smallest positive distance.
pub fn default_grid(history: &PreparedHistory, similarity: &Similarity) -> Result<Vec<f64>> {
    let mut all: Vec<f64> = history
        .distance_table(similarity)?
        .into_iter()
        .flatten()
        .collect();
    if all.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: history.len(),
        });
    }
    all.sort_by(f64::total_cmp);
    let hi = order_stat(&all, 0.99);
    if hi <= 0.0 {
        return Ok(vec![1.0]);
    }
    let mut lo = order_stat(&all, 0.01);
    if lo <= 0.0 {
        lo = all.iter().copied().find(|&d| d > 0.0).unwrap_or(hi);
    }
    log_grid(lo, hi, DEFAULT_GRID_POINTS)
}

/// Inverse empirical CDF of sorted values.
fn order_stat(sorted: &[f64], p: f64) -> f64 {
    let k = ((p * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(sorted.len()) - 1]
}
