//! Resampling-based pointwise prediction intervals.
//!
//! A pseudo-realization of the next segment is a past successor `Z_{m+1}`
//! drawn with probability `w_{n,m}`, the normalized similarity weight of
//! `Z_m` to the latest segment. Residuals of the pseudo-blocks around the
//! point prediction give per-time quantiles, and the interval is
//! `[center + q_α, center + q_{1-α}]` at each sampling point.
//!
//! Quantiles use the inverse empirical CDF (type 1): the lower `p`-quantile
//! is the smallest value whose cumulative weight reaches `p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{KernelSpec, PredictionResult, PreparedHistory};
use crate::similarity::Similarity;

const WEIGHT_SUM_TOL: f64 = 1e-12;
// Absorbs rounding in cumulative sums when comparing against a probability.
const CDF_EPS: f64 = 1e-12;

/// Resampling weights from the kernel values `K(D_m/h)`, `m = 1..n-1`.
///
/// `w_m = (K_m + 1/(n(n-1))) / (1/n + Σ K)`, which sums to one exactly and
/// falls back to the uniform `1/(n-1)` when every kernel value underflows.
pub fn normalized_weights(kernel_values: &[f64]) -> Vec<f64> {
    let candidates = kernel_values.len();
    if candidates == 0 {
        return Vec::new();
    }
    let n = (candidates + 1) as f64;
    let floor = 1.0 / (n * (n - 1.0));
    let denom = 1.0 / n + kernel_values.iter().sum::<f64>();
    kernel_values.iter().map(|k| (k + floor) / denom).collect()
}

/// Resampling weights of the last segment in `history` against all earlier ones.
pub fn resample_weights(
    history: &PreparedHistory,
    kernel: &KernelSpec,
    similarity: &Similarity,
) -> Result<Vec<f64>> {
    let distances = history.query_distances(similarity)?;
    let k: Vec<f64> = distances.iter().map(|&d| kernel.weight(d)).collect();
    Ok(normalized_weights(&k))
}

/// Settings for drawing pseudo-blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplingPlan {
    resamples: usize,
    alpha: f64,
    seed: u64,
    weights: Vec<f64>,
}

impl ResamplingPlan {
    pub fn new(resamples: usize, alpha: f64, seed: u64, weights: Vec<f64>) -> Result<Self> {
        if resamples == 0 {
            return Err(Error::Config("resample count must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Config(format!("alpha must lie in (0, 0.5), got {alpha}")));
        }
        if weights.is_empty() {
            return Err(Error::InsufficientHistory { needed: 2, got: 1 });
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Config("resampling weights must lie in [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Config(format!("resampling weights sum to {total}, not 1")));
        }
        Ok(ResamplingPlan {
            resamples,
            alpha,
            seed,
            weights,
        })
    }

    pub fn resamples(&self) -> usize {
        self.resamples
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fewer draws than `1/α` cannot resolve the tail quantiles.
    pub fn is_under_resolved(&self) -> bool {
        (self.resamples as f64) < (1.0 / self.alpha).ceil()
    }

    /// Candidate index `m` (0-based) of draw `b`. Each draw has its own
    /// ChaCha stream keyed by `(seed, b)`, so draws can be generated in any
    /// order with identical results.
    pub fn draw_index(&self, b: usize) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(b as u64);
        let u: f64 = rng.gen();
        pick(&self.weights, u)
    }

    /// Indices of all `B` draws.
    pub fn draw_indices(&self) -> Vec<usize> {
        (0..self.resamples).map(|b| self.draw_index(b)).collect()
    }
}

/// First index whose cumulative weight exceeds `u`, skipping zero weights.
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Draws `B` pseudo-blocks from the successors `Z_2..Z_n`.
pub fn draw_pseudo_blocks(plan: &ResamplingPlan, successors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if successors.len() != plan.weights.len() {
        return Err(Error::Shape {
            expected: plan.weights.len(),
            got: successors.len(),
        });
    }
    Ok(plan
        .draw_indices()
        .into_iter()
        .map(|m| successors[m].clone())
        .collect())
}

/// How the per-time quantiles are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMode {
    /// `B` seeded pseudo-block draws.
    #[default]
    MonteCarlo,
    /// Exact weighted quantiles of the successor atoms (the `B → ∞` limit).
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    /// Number of draws, zero in exact mode.
    pub resamples_used: usize,
    pub mode: QuantileMode,
    pub under_resolved: bool,
}

/// Type-1 quantile of an ascending sample.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64) - CDF_EPS * n as f64).ceil().clamp(1.0, n as f64) as usize;
    sorted[k - 1]
}

/// Type-1 quantile of a discrete distribution with the given atoms and weights.
pub fn weighted_quantile(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if acc >= p - CDF_EPS {
            return values[i];
        }
    }
    values[*order.last().expect("at least one positive weight")]
}

/// Pointwise interval for the next segment around `center`.
///
/// `history` and `center` must come from the same prediction; the interval
/// covers the first `center.curve.len()` sampling points.
pub fn prediction_interval(
    history: &PreparedHistory,
    center: &PredictionResult,
    plan: &ResamplingPlan,
    mode: QuantileMode,
) -> Result<PredictionInterval> {
    let successors = history.successor_curves();
    if successors.len() != plan.weights.len() {
        return Err(Error::Shape {
            expected: successors.len(),
            got: plan.weights.len(),
        });
    }
    let p = center.curve.len();
    if successors.iter().any(|s| s.len() != p) {
        return Err(Error::Shape {
            expected: p,
            got: successors[0].len(),
        });
    }
    let under_resolved = plan.is_under_resolved();
    if under_resolved && mode == QuantileMode::MonteCarlo {
        log::warn!(
            "B={} draws is below 1/alpha={:.0}; tail quantiles are poorly resolved",
            plan.resamples,
            (1.0 / plan.alpha).ceil()
        );
    }

    let alpha = plan.alpha;
    let mut lower = Vec::with_capacity(p);
    let mut upper = Vec::with_capacity(p);
    match mode {
        QuantileMode::MonteCarlo => {
            let draws = plan.draw_indices();
            let mut residuals = vec![0.0; draws.len()];
            for t in 0..p {
                let c = center.curve[t];
                for (r, &m) in residuals.iter_mut().zip(&draws) {
                    *r = successors[m][t] - c;
                }
                residuals.sort_by(f64::total_cmp);
                lower.push(empirical_quantile(&residuals, alpha) + c);
                upper.push(empirical_quantile(&residuals, 1.0 - alpha) + c);
            }
        }
        QuantileMode::Exact => {
            let mut atoms = vec![0.0; successors.len()];
            for t in 0..p {
                for (a, s) in atoms.iter_mut().zip(&successors) {
                    *a = s[t];
                }
                lower.push(weighted_quantile(&atoms, &plan.weights, alpha));
                upper.push(weighted_quantile(&atoms, &plan.weights, 1.0 - alpha));
            }
        }
    }

    Ok(PredictionInterval {
        lower,
        upper,
        alpha,
        resamples_used: if mode == QuantileMode::MonteCarlo { plan.resamples } else { 0 },
        mode,
        under_resolved,
    })
}
