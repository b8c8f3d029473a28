//! Scoring, rolling-origin evaluation, a seasonal baseline and synthetic
//! test processes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{predict_prepared, Bandwidth, KernelSpec, PredictorConfig, PreparedHistory};
use crate::wavelet::Segment;

/// Relative mean-absolute error of one predicted segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmae: f64,
    pub per_point_abs_rel_err: Vec<f64>,
    /// 1-based index of the evaluated segment.
    pub n0: usize,
    pub method_id: String,
}

impl EvalReport {
    pub fn labeled(mut self, n0: usize, method_id: impl Into<String>) -> Self {
        self.n0 = n0;
        self.method_id = method_id.into();
        self
    }
}

/// `(1/P) Σ |pred_i - truth_i| / |truth_i|`. A zero truth value is an error.
pub fn rmae(pred: &[f64], truth: &[f64]) -> Result<EvalReport> {
    rmae_with_floor(pred, truth, None)
}

/// Like [`rmae`], but with `floor` the denominator becomes `max(|truth_i|, floor)`.
pub fn rmae_with_floor(pred: &[f64], truth: &[f64], floor: Option<f64>) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty segment".into()));
    }
    let per_point = pred
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (p, t))| {
            let denom = match floor {
                Some(eps) => t.abs().max(eps),
                None => t.abs(),
            };
            if denom == 0.0 {
                Err(Error::ZeroTruth { index: i })
            } else {
                Ok((p - t).abs() / denom)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalReport {
        rmae: per_point.iter().sum::<f64>() / per_point.len() as f64,
        per_point_abs_rel_err: per_point,
        n0: 0,
        method_id: String::new(),
    })
}

/// A one-step-ahead segment forecaster.
pub trait Forecaster {
    fn id(&self) -> String;

    /// Forecast of the segment following `history`.
    fn forecast(&self, history: &[Segment]) -> Result<Vec<f64>>;
}

/// Repeats the last observed segment.
pub fn naive_seasonal(segments: &[Segment]) -> Result<Segment> {
    segments
        .last()
        .cloned()
        .ok_or(Error::InsufficientHistory { needed: 1, got: 0 })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NaiveSeasonal;

impl Forecaster for NaiveSeasonal {
    fn id(&self) -> String {
        "naive-seasonal".into()
    }

    fn forecast(&self, history: &[Segment]) -> Result<Vec<f64>> {
        naive_seasonal(history).map(Segment::into_values)
    }
}

/// The wavelet-kernel predictor with a fixed or cross-validated bandwidth.
#[derive(Debug, Clone, Default)]
pub struct WaveletKernel {
    pub config: PredictorConfig,
    pub bandwidth: Bandwidth,
}

impl Forecaster for WaveletKernel {
    fn id(&self) -> String {
        "w-k".into()
    }

    fn forecast(&self, history: &[Segment]) -> Result<Vec<f64>> {
        let prepared = PreparedHistory::from_segments(history, &self.config)?;
        let (h, _) = self.bandwidth.resolve(&prepared, &self.config)?;
        let kernel = KernelSpec::new(self.config.kernel, h)?;
        Ok(predict_prepared(&prepared, &kernel, &self.config)?.curve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingOptions {
    /// Segments in the first training prefix.
    pub min_history: usize,
    /// Passed to [`rmae_with_floor`].
    pub rmae_floor: Option<f64>,
}

impl Default for RollingOptions {
    fn default() -> Self {
        RollingOptions {
            min_history: 2,
            rmae_floor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingSummary {
    pub reports: Vec<EvalReport>,
    pub mean_rmae: f64,
    pub median_rmae: f64,
}

/// Fits on every prefix of at least `min_history` segments and scores the
/// forecast of the following segment.
pub fn rolling_eval(
    series: &[f64],
    period: usize,
    method: &dyn Forecaster,
    options: RollingOptions,
) -> Result<RollingSummary> {
    if period < 2 {
        return Err(Error::Config(format!("segment length must be at least 2, got {period}")));
    }
    if series.len() < 3 * period {
        return Err(Error::Config(format!(
            "rolling evaluation needs at least {} values, got {}",
            3 * period,
            series.len()
        )));
    }
    if series.len() % period != 0 {
        return Err(Error::Config(format!(
            "series length {} is not a multiple of {period}",
            series.len()
        )));
    }
    let segments = series
        .chunks(period)
        .enumerate()
        .map(|(i, c)| Segment::new(c.to_vec()).map(|s| s.with_index(i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let start = options.min_history.max(1);
    if start >= segments.len() {
        return Err(Error::Config(format!(
            "min_history {start} leaves nothing to evaluate in {} segments",
            segments.len()
        )));
    }

    let id = method.id();
    let reports = (start..segments.len())
        .map(|cut| {
            let pred = method.forecast(&segments[..cut])?;
            rmae_with_floor(&pred, segments[cut].values(), options.rmae_floor)
                .map(|r| r.labeled(cut + 1, id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values: Vec<f64> = reports.iter().map(|r| r.rmae).collect();
    let mean_rmae = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median_rmae = if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    };
    Ok(RollingSummary {
        reports,
        mean_rmae,
        median_rmae,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Fixed seasonal profile plus stationary AR(1) noise.
    SeasonalAr,
    /// `Z_{i+1} = g(Z_i) + noise` with a smooth contraction `g`.
    MarkovFunctional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub segments: usize,
    pub period: usize,
    /// Marginal noise standard deviation.
    pub noise: f64,
    pub seed: u64,
    /// AR coefficient (seasonal-ar) or contraction factor (markov-functional), in `[0, 1)`.
    pub dependence: f64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, segments: usize, period: usize, noise: f64, seed: u64) -> Self {
        SyntheticSpec {
            kind,
            segments,
            period,
            noise,
            seed,
            dependence: 0.5,
        }
    }

    pub fn with_dependence(mut self, dependence: f64) -> Self {
        self.dependence = dependence;
        self
    }
}

/// Seasonal profile shared by the generators, bounded away from zero.
pub fn seasonal_profile(period: usize) -> Vec<f64> {
    (0..period)
        .map(|t| {
            let x = std::f64::consts::TAU * t as f64 / period as f64;
            10.0 + 3.0 * x.sin() + 1.5 * (2.0 * x).cos()
        })
        .collect()
}

/// `g(z) = s + c · smooth(tanh(z - s))` with circular `(1/4, 1/2, 1/4)`
/// smoothing; a contraction with factor `c` in the sup norm.
pub fn markov_conditional_mean(z: &[f64], contraction: f64) -> Vec<f64> {
    let p = z.len();
    let base = seasonal_profile(p);
    let dev: Vec<f64> = z.iter().zip(&base).map(|(v, b)| (v - b).tanh()).collect();
    (0..p)
        .map(|t| {
            let smooth = 0.25 * dev[(t + p - 1) % p] + 0.5 * dev[t] + 0.25 * dev[(t + 1) % p];
            base[t] + contraction * smooth
        })
        .collect()
}

const MARKOV_BURN_IN: usize = 100;

/// Generates `segments · period` values of a stationary synthetic process.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Vec<f64>> {
    if spec.segments == 0 || spec.period < 2 {
        return Err(Error::Config("synthetic series needs segments >= 1 and period >= 2".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Config(format!("noise must be nonnegative, got {}", spec.noise)));
    }
    if !(0.0..1.0).contains(&spec.dependence) {
        return Err(Error::Config(format!("dependence must lie in [0, 1), got {}", spec.dependence)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let p = spec.period;
    let base = seasonal_profile(p);

    let out = match spec.kind {
        SyntheticKind::SeasonalAr => {
            let phi = spec.dependence;
            let innovation = spec.noise * (1.0 - phi * phi).sqrt();
            let mut e = spec.noise * normal();
            (0..spec.segments * p)
                .map(|i| {
                    if i > 0 {
                        e = phi * e + innovation * normal();
                    }
                    base[i % p] + e
                })
                .collect()
        }
        SyntheticKind::MarkovFunctional => {
            let mut z = base.clone();
            let mut out = Vec::with_capacity(spec.segments * p);
            for i in 0..MARKOV_BURN_IN + spec.segments {
                let mean = markov_conditional_mean(&z, spec.dependence);
                z = mean.into_iter().map(|m| m + spec.noise * normal()).collect();
                if i >= MARKOV_BURN_IN {
                    out.extend_from_slice(&z);
                }
            }
            out
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmae_examples() {
        let truth = [2.0, 4.0, 5.0];
        assert_eq!(rmae(&truth, &truth).unwrap().rmae, 0.0);
        let pred: Vec<f64> = truth.iter().map(|v| v * 1.1).collect();
        assert!((rmae(&pred, &truth).unwrap().rmae - 0.1).abs() < 1e-12);
        assert!(matches!(rmae(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::ZeroTruth { index: 1 })));
        let floored = rmae_with_floor(&[1.0, 1.0], &[1.0, 0.0], Some(0.5)).unwrap();
        assert_eq!(floored.per_point_abs_rel_err, vec![0.0, 2.0]);
        assert!(rmae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmae_scale_invariant() {
        let truth = [3.0, -1.5, 0.7, 12.0];
        let pred = [2.5, -1.0, 1.0, 11.0];
        let base = rmae(&pred, &truth).unwrap().rmae;
        for c in [-3.0, 0.01, 250.0] {
            let sp: Vec<f64> = pred.iter().map(|v| v * c).collect();
            let st: Vec<f64> = truth.iter().map(|v| v * c).collect();
            assert!((rmae(&sp, &st).unwrap().rmae - base).abs() < 1e-12);
        }
    }

    #[test]
    fn naive_baseline() {
        let s = vec![Segment::new(vec![1.0, 2.0]).unwrap()];
        assert_eq!(naive_seasonal(&s).unwrap().values(), &[1.0, 2.0]);
        assert!(naive_seasonal(&[]).is_err());
    }

    #[test]
    fn rolling_on_periodic_series() {
        let profile = seasonal_profile(12);
        let series: Vec<f64> = profile.iter().cycle().take(12 * 8).copied().collect();
        let naive = rolling_eval(&series, 12, &NaiveSeasonal, RollingOptions::default()).unwrap();
        assert_eq!(naive.reports.len(), 6);
        assert!(naive.reports.iter().all(|r| r.rmae == 0.0));
        assert_eq!(naive.reports[0].n0, 3);

        let wk = WaveletKernel::default();
        let out = rolling_eval(&series, 12, &wk, RollingOptions { min_history: 3, ..Default::default() }).unwrap();
        assert!(out.reports.iter().all(|r| r.rmae < 1e-8));
        assert!(out.median_rmae < 1e-8);
    }

    #[test]
    fn rolling_constant_series() {
        let series = vec![4.0; 40];
        let out = rolling_eval(&series, 4, &NaiveSeasonal, RollingOptions::default()).unwrap();
        assert_eq!(out.mean_rmae, 0.0);
    }

    #[test]
    fn rolling_rejects_short_or_ragged_series() {
        assert!(matches!(
            rolling_eval(&[1.0; 8], 4, &NaiveSeasonal, RollingOptions::default()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            rolling_eval(&[1.0; 13], 4, &NaiveSeasonal, RollingOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn noiseless_seasonal_is_periodic() {
        let spec = SyntheticSpec::new(SyntheticKind::SeasonalAr, 5, 8, 0.0, 1);
        let x = gen_synthetic(&spec).unwrap();
        for i in 8..x.len() {
            assert_eq!(x[i], x[i - 8]);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in [SyntheticKind::SeasonalAr, SyntheticKind::MarkovFunctional] {
            let spec = SyntheticSpec::new(kind, 20, 16, 0.4, 99);
            assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
            let other = SyntheticSpec { seed: 100, ..spec };
            assert_ne!(gen_synthetic(&spec).unwrap(), gen_synthetic(&other).unwrap());
        }
    }

    #[test]
    fn generator_validation() {
        let bad = SyntheticSpec::new(SyntheticKind::SeasonalAr, 0, 8, 0.1, 1);
        assert!(gen_synthetic(&bad).is_err());
        let bad = SyntheticSpec::new(SyntheticKind::SeasonalAr, 2, 8, -0.1, 1);
        assert!(gen_synthetic(&bad).is_err());
        let bad = SyntheticSpec::new(SyntheticKind::MarkovFunctional, 2, 8, 0.1, 1).with_dependence(1.0);
        assert!(gen_synthetic(&bad).is_err());
    }

    #[test]
    fn markov_map_is_contractive() {
        let p = 16;
        let base = seasonal_profile(p);
        let a: Vec<f64> = base.iter().enumerate().map(|(i, b)| b + (i as f64 * 0.9).sin()).collect();
        let b: Vec<f64> = base.iter().enumerate().map(|(i, b)| b - (i as f64 * 0.4).cos() * 2.0).collect();
        let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        let ga = markov_conditional_mean(&a, 0.5);
        let gb = markov_conditional_mean(&b, 0.5);
        assert!(sup(&ga, &gb) <= 0.5 * sup(&a, &b) + 1e-12);
    }

    /// Segment means of the Markov process behave like an AR(1) with
    /// coefficient at most the contraction factor.
    #[test]
    fn markov_mean_autocorrelation_decays() {
        let (segments, p) = (4000, 8);
        let spec = SyntheticSpec::new(SyntheticKind::MarkovFunctional, segments, p, 0.5, 5).with_dependence(0.5);
        let x = gen_synthetic(&spec).unwrap();
        let means: Vec<f64> = x.chunks(p).map(|c| c.iter().sum::<f64>() / p as f64).collect();
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>();
        // ~3 standard errors of a sample autocorrelation at this length.
        let slack = 3.0 / (segments as f64).sqrt();
        for k in 1..=4 {
            let cov: f64 = means.windows(k + 1).map(|w| (w[0] - mu) * (w[k] - mu)).sum();
            let rho = cov / var;
            assert!(rho.abs() <= 0.6f64.powi(k as i32) + slack, "lag {k}: {rho}");
        }
    }

    /// First and second moments do not depend on where the sample starts.
    #[test]
    fn generators_are_stationary() {
        for kind in [SyntheticKind::SeasonalAr, SyntheticKind::MarkovFunctional] {
            let (segments, p) = (3000, 8);
            let x = gen_synthetic(&SyntheticSpec::new(kind, segments, p, 0.5, 21)).unwrap();
            let rows: Vec<&[f64]> = x.chunks(p).collect();
            // Relative s.e. of each half-sample variance is about 4%.
            let half = segments / 2;
            for t in 0..p {
                let stats = |r: &[&[f64]]| {
                    let m = r.iter().map(|s| s[t]).sum::<f64>() / r.len() as f64;
                    let v = r.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / r.len() as f64;
                    (m, v)
                };
                let (m1, v1) = stats(&rows[..half]);
                let (m2, v2) = stats(&rows[half..]);
                assert!((m1 - m2).abs() < 0.1, "{kind:?} mean at t={t}: {m1} vs {m2}");
                assert!((v1 - v2).abs() < 0.2 * v1.max(v2), "{kind:?} var at t={t}: {v1} vs {v2}");
            }
        }
    }
}
