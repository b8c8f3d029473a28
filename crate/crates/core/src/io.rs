//! Series files, run configuration and the batch runner behind the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{naive_seasonal, rmae, rolling_eval, RollingOptions, RollingSummary, WaveletKernel};
use crate::intervals::{prediction_interval, PredictionInterval, QuantileMode, ResamplingPlan};
use crate::predictor::{
    predict_prepared, Bandwidth, CvOutcome, KernelFamily, KernelSpec, PredictionResult, PredictorConfig,
    PreparedHistory, WeightScheme,
};
use crate::similarity::{ScaleRange, Similarity};
use crate::wavelet::{Filter, Segment};

pub const PREDICTION_FILE: &str = "prediction.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.csv";
pub const CV_FILE: &str = "cv.csv";
pub const ROLLING_FILE: &str = "rolling.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a one-column CSV series.
pub fn load_series(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_series(&text, path)
}

/// Parses one number per line. A non-numeric first row is taken as a
/// header; blank lines are ignored.
pub fn parse_series(text: &str, path: &Path) -> Result<Vec<f64>> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut values = Vec::new();
    let mut seen_row = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let field = raw.trim().trim_start_matches('\u{feff}');
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => return Err(parse_err(line, format!("non-finite value {v}"))),
            Err(_) if !seen_row => {}
            Err(_) => return Err(parse_err(line, format!("cannot parse '{field}' as a number"))),
        }
        seen_row = true;
    }
    if values.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no numeric values".into()));
    }
    Ok(values)
}

/// Formats a value with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one value per line, no header.
pub fn write_series(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&format_value(*v));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Cuts a series into segments of length `period`. A trailing partial
/// segment is an error unless `drop_remainder` is set; the number of
/// dropped values is returned.
pub fn segment_series(series: &[f64], period: usize, drop_remainder: bool) -> Result<(Vec<Segment>, usize)> {
    if period < 2 {
        return Err(Error::Config(format!("segment length must be at least 2, got {period}")));
    }
    let remainder = series.len() % period;
    if remainder != 0 && !drop_remainder {
        return Err(Error::Config(format!(
            "series length {} is not a multiple of {period} ({remainder} trailing values); pass --drop-remainder to discard them",
            series.len()
        )));
    }
    let segments = series
        .chunks_exact(period)
        .enumerate()
        .map(|(i, c)| Segment::new(c.to_vec()).map(|s| s.with_index(i + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok((segments, remainder))
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub segment_length: usize,
    #[serde(default)]
    pub filter: Filter,
    #[serde(default)]
    pub j0: usize,
    #[serde(default)]
    pub scales: Option<ScaleRange>,
    #[serde(default)]
    pub include_coarse: bool,
    #[serde(default)]
    pub kernel: KernelFamily,
    #[serde(default)]
    pub scheme: WeightScheme,
    #[serde(default)]
    pub bandwidth: Bandwidth,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Exact weighted quantiles instead of Monte Carlo draws.
    #[serde(default)]
    pub exact_quantiles: bool,
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub drop_remainder: bool,
    /// Hold out the last segment as truth.
    #[serde(default)]
    pub holdout: bool,
    /// External comparator forecast to score against the held-out segment.
    #[serde(default)]
    pub forecast: Option<PathBuf>,
    /// Also run a rolling-origin evaluation (eval only).
    #[serde(default)]
    pub rolling: bool,
}

fn default_alpha() -> f64 {
    0.025
}

fn default_resamples() -> usize {
    500
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn new(segment_length: usize, input: PathBuf, output: PathBuf) -> Self {
        RunConfig {
            segment_length,
            filter: Filter::default(),
            j0: 0,
            scales: None,
            include_coarse: false,
            kernel: KernelFamily::default(),
            scheme: WeightScheme::default(),
            bandwidth: Bandwidth::default(),
            alpha: default_alpha(),
            resamples: default_resamples(),
            seed: default_seed(),
            exact_quantiles: false,
            input,
            output,
            drop_remainder: false,
            holdout: false,
            forecast: None,
            rolling: false,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_length < 2 {
            return Err(Error::Config(format!(
                "segment length must be at least 2, got {}",
                self.segment_length
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!("alpha must lie in (0, 0.5), got {}", self.alpha)));
        }
        if self.resamples == 0 {
            return Err(Error::Config("resample count must be at least 1".into()));
        }
        match &self.bandwidth {
            Bandwidth::Fixed(h) => {
                KernelSpec::new(self.kernel, *h)?;
            }
            Bandwidth::Cv { grid: Some(g) } if g.is_empty() => {
                return Err(Error::Config("bandwidth grid is empty".into()));
            }
            Bandwidth::Cv { .. } => {}
        }
        if let Some(r) = self.scales {
            ScaleRange::new(r.lo, r.hi)?;
            if r.lo < self.j0 {
                return Err(Error::Config(format!("scale range starts below j0={}", self.j0)));
            }
        }
        Ok(())
    }

    pub fn predictor(&self) -> PredictorConfig {
        PredictorConfig {
            filter: self.filter,
            j0: self.j0,
            similarity: Similarity {
                scales: self.scales,
                include_coarse: self.include_coarse,
            },
            kernel: self.kernel,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Predict,
    Cv,
    Interval,
    Eval,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvRow {
    pub h: f64,
    pub score: f64,
    pub selected: bool,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: Command,
    pub n_segments: usize,
    pub training_segments: usize,
    pub remainder_dropped: usize,
    pub h_used: f64,
    pub cv_table: Option<Vec<CvRow>>,
    pub effective_sample: Option<f64>,
    pub rmae: Option<f64>,
    pub naive_rmae: Option<f64>,
    pub external_rmae: Option<f64>,
    pub rolling_mean_rmae: Option<f64>,
    pub rolling_median_rmae: Option<f64>,
    pub interval_under_resolved: Option<bool>,
    pub seed: u64,
    pub config: RunConfig,
}

/// In-memory result of a run, also written to `config.output`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub prediction: Option<PredictionResult>,
    pub interval: Option<PredictionInterval>,
    pub truth: Option<Vec<f64>>,
    pub written: Vec<PathBuf>,
}

/// Executes one CLI command end to end and writes its output files.
pub fn run(command: Command, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    if command == Command::Cv && matches!(config.bandwidth, Bandwidth::Fixed(_)) {
        return Err(Error::Config("the cv command needs a cross-validated bandwidth, not --h <value>".into()));
    }
    let series = load_series(&config.input)?;
    let (segments, remainder) = segment_series(&series, config.segment_length, config.drop_remainder)?;
    if remainder > 0 {
        log::warn!("dropped {remainder} trailing values that do not fill a segment");
    }

    let holdout = config.holdout || command == Command::Eval;
    let (train, truth) = if holdout {
        match segments.split_last() {
            Some((last, rest)) => (rest, Some(last.values().to_vec())),
            None => (&segments[..], None),
        }
    } else {
        (&segments[..], None)
    };
    if train.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: train.len(),
        });
    }

    let pcfg = config.predictor();
    let history = PreparedHistory::from_segments(train, &pcfg)?;
    let (h, cv) = config.bandwidth.resolve(&history, &pcfg)?;
    let kernel = KernelSpec::new(config.kernel, h)?;

    let mut summary = RunSummary {
        command,
        n_segments: segments.len(),
        training_segments: train.len(),
        remainder_dropped: remainder,
        h_used: h,
        cv_table: cv.as_ref().map(cv_rows),
        effective_sample: None,
        rmae: None,
        naive_rmae: None,
        external_rmae: None,
        rolling_mean_rmae: None,
        rolling_median_rmae: None,
        interval_under_resolved: None,
        seed: config.seed,
        config: config.clone(),
    };

    fs::create_dir_all(&config.output).map_err(io_err(&config.output))?;
    let mut written = Vec::new();

    if command == Command::Cv {
        let path = config.output.join(CV_FILE);
        write_cv_table(&path, cv.as_ref().expect("cv bandwidth resolved with a table"))?;
        written.push(path);
        written.push(write_summary(&config.output, &summary)?);
        return Ok(RunOutcome {
            summary,
            prediction: None,
            interval: None,
            truth,
            written,
        });
    }

    let prediction = predict_prepared(&history, &kernel, &pcfg)?;
    summary.effective_sample = Some(prediction.effective_sample);

    let interval = if command == Command::Interval {
        let plan = ResamplingPlan::new(config.resamples, config.alpha, config.seed, prediction.weights.clone())?;
        let mode = if config.exact_quantiles {
            QuantileMode::Exact
        } else {
            QuantileMode::MonteCarlo
        };
        let iv = prediction_interval(&history, &prediction, &plan, mode)?;
        summary.interval_under_resolved = Some(iv.under_resolved);
        Some(iv)
    } else {
        None
    };

    if let Some(t) = &truth {
        summary.rmae = Some(rmae(&prediction.curve, t)?.rmae);
        if command == Command::Eval {
            let naive = naive_seasonal(train)?;
            summary.naive_rmae = Some(rmae(naive.values(), t)?.rmae);
            if let Some(path) = &config.forecast {
                let external = load_series(path)?;
                summary.external_rmae = Some(rmae(&external, t)?.rmae);
            }
        }
    }

    if command == Command::Eval && config.rolling {
        let method = WaveletKernel {
            config: pcfg,
            bandwidth: config.bandwidth.clone(),
        };
        let min_history = if matches!(config.bandwidth, Bandwidth::Cv { .. }) { 3 } else { 2 };
        let values: Vec<f64> = segments.iter().flat_map(|s| s.values().iter().copied()).collect();
        let rolling = rolling_eval(
            &values,
            config.segment_length,
            &method,
            RollingOptions {
                min_history,
                rmae_floor: None,
            },
        )?;
        summary.rolling_mean_rmae = Some(rolling.mean_rmae);
        summary.rolling_median_rmae = Some(rolling.median_rmae);
        let path = config.output.join(ROLLING_FILE);
        write_rolling(&path, &rolling)?;
        written.push(path);
    }

    let pred_path = config.output.join(PREDICTION_FILE);
    write_prediction(&pred_path, &prediction, interval.as_ref())?;
    written.push(pred_path);
    let plot_path = config.output.join(PLOT_FILE);
    write_plot(&plot_path, &prediction, interval.as_ref(), truth.as_deref())?;
    written.push(plot_path);
    if let Some(cv) = &cv {
        let path = config.output.join(CV_FILE);
        write_cv_table(&path, cv)?;
        written.push(path);
    }
    written.push(write_summary(&config.output, &summary)?);

    Ok(RunOutcome {
        summary,
        prediction: Some(prediction),
        interval,
        truth,
        written,
    })
}

fn cv_rows(cv: &CvOutcome) -> Vec<CvRow> {
    cv.table
        .iter()
        .map(|p| CvRow {
            h: p.h,
            score: p.score,
            selected: p.h == cv.bandwidth,
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_summary(dir: &Path, summary: &RunSummary) -> Result<PathBuf> {
    let path = dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}

fn write_prediction(path: &Path, pred: &PredictionResult, iv: Option<&PredictionInterval>) -> Result<()> {
    let mut out = String::from(if iv.is_some() {
        "t_index,predicted,lower,upper\n"
    } else {
        "t_index,predicted\n"
    });
    for (t, v) in pred.curve.iter().enumerate() {
        let _ = write!(out, "{t},{}", format_value(*v));
        if let Some(iv) = iv {
            let _ = write!(out, ",{},{}", format_value(iv.lower[t]), format_value(iv.upper[t]));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

fn write_plot(
    path: &Path,
    pred: &PredictionResult,
    iv: Option<&PredictionInterval>,
    truth: Option<&[f64]>,
) -> Result<()> {
    let opt = |v: Option<f64>| v.map(format_value).unwrap_or_default();
    let mut out = String::from("t_index,truth,predicted,lower,upper\n");
    for (t, v) in pred.curve.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            opt(truth.map(|x| x[t])),
            format_value(*v),
            opt(iv.map(|i| i.lower[t])),
            opt(iv.map(|i| i.upper[t]))
        );
    }
    write_text(path, &out)
}

fn write_cv_table(path: &Path, cv: &CvOutcome) -> Result<()> {
    let mut out = String::from("h,cv,selected\n");
    for row in cv_rows(cv) {
        let _ = writeln!(out, "{},{},{}", format_value(row.h), format_value(row.score), row.selected as u8);
    }
    write_text(path, &out)
}

fn write_rolling(path: &Path, rolling: &RollingSummary) -> Result<()> {
    let mut out = String::from("n0,method,rmae\n");
    for r in &rolling.reports {
        let _ = writeln!(out, "{},{},{}", r.n0, r.method_id, format_value(r.rmae));
    }
    write_text(path, &out)
}
