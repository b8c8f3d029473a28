use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wavekernel::io::{run, Command, RunConfig};
use wavekernel::predictor::{log_grid, Bandwidth};
use wavekernel::{Error, Filter, KernelFamily, ScaleRange, WeightScheme};

#[derive(Parser)]
#[command(name = "wavekernel", version, about = "Wavelet-kernel one-step-ahead prediction of segmented time series")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Predict the segment following the series.
    Predict(RunArgs),
    /// Cross-validate the bandwidth and write the CV table.
    Cv(RunArgs),
    /// Predict with resampling-based pointwise intervals.
    Interval(RunArgs),
    /// Hold out the last segment and score the prediction.
    Eval(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV, one value per row.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Samples per segment.
    #[arg(long = "p")]
    p: Option<usize>,
    /// dd2, dd6 or sym6-interp.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    j0: Option<usize>,
    /// gaussian or laplace.
    #[arg(long)]
    kernel: Option<String>,
    /// Fixed bandwidth, or "cv" for cross-validation on the automatic grid.
    #[arg(long)]
    h: Option<String>,
    /// Cross-validation grid lo:hi:count (log-spaced).
    #[arg(long = "cv-grid")]
    cv_grid: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of resampled pseudo-blocks.
    #[arg(long = "b")]
    b: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Detail scales entering the distance, lo:hi.
    #[arg(long)]
    scales: Option<String>,
    /// Add the coarse scaling coefficients to the distance.
    #[arg(long)]
    include_coarse: bool,
    /// normalized or regularized weights.
    #[arg(long)]
    scheme: Option<String>,
    /// Exact weighted quantiles instead of Monte Carlo draws.
    #[arg(long)]
    exact: bool,
    /// Drop trailing values that do not fill a segment.
    #[arg(long)]
    drop_remainder: bool,
    /// Treat the last segment as truth.
    #[arg(long)]
    holdout: bool,
    /// External forecast CSV to score (eval).
    #[arg(long)]
    forecast: Option<PathBuf>,
    /// Also run a rolling-origin evaluation (eval).
    #[arg(long)]
    rolling: bool,
}

fn parse_pair(s: &str, what: &str) -> Result<Vec<String>, Error> {
    let parts: Vec<String> = s.split(':').map(str::to_owned).collect();
    if parts.iter().any(String::is_empty) {
        return Err(Error::Config(format!("malformed {what} '{s}'")));
    }
    Ok(parts)
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, Error> {
    s.parse()
        .map_err(|_| Error::Config(format!("cannot parse {what} value '{s}'")))
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => {
                let p = self
                    .p
                    .ok_or_else(|| Error::Config("--p is required without --config".into()))?;
                let input = self
                    .input
                    .clone()
                    .ok_or_else(|| Error::Config("--input is required without --config".into()))?;
                let out = self.out.clone().unwrap_or_else(|| PathBuf::from("wavekernel-out"));
                RunConfig::new(p, input, out)
            }
        };
        if let Some(p) = self.p {
            cfg.segment_length = p;
        }
        if let Some(i) = self.input {
            cfg.input = i;
        }
        if let Some(o) = self.out {
            cfg.output = o;
        }
        if let Some(f) = &self.filter {
            cfg.filter = f.parse::<Filter>()?;
        }
        if let Some(j0) = self.j0 {
            cfg.j0 = j0;
        }
        if let Some(k) = &self.kernel {
            cfg.kernel = k.parse::<KernelFamily>()?;
        }
        match (&self.h, &self.cv_grid) {
            (Some(h), Some(_)) if h != "cv" => {
                return Err(Error::Config("--h <value> and --cv-grid are mutually exclusive".into()));
            }
            (_, Some(grid)) => {
                let parts = parse_pair(grid, "--cv-grid")?;
                if parts.len() != 3 {
                    return Err(Error::Config(format!("--cv-grid expects lo:hi:count, got '{grid}'")));
                }
                let g = log_grid(num(&parts[0], "grid")?, num(&parts[1], "grid")?, num(&parts[2], "grid")?)?;
                cfg.bandwidth = Bandwidth::Cv { grid: Some(g) };
            }
            (Some(h), None) if h == "cv" => cfg.bandwidth = Bandwidth::Cv { grid: None },
            (Some(h), None) => cfg.bandwidth = Bandwidth::Fixed(num(h, "--h")?),
            (None, None) => {}
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(b) = self.b {
            cfg.resamples = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = &self.scales {
            let parts = parse_pair(s, "--scales")?;
            if parts.len() != 2 {
                return Err(Error::Config(format!("--scales expects lo:hi, got '{s}'")));
            }
            cfg.scales = Some(ScaleRange::new(num(&parts[0], "scale")?, num(&parts[1], "scale")?)?);
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = match s.as_str() {
                "normalized" => WeightScheme::Normalized,
                "regularized" => WeightScheme::Regularized,
                other => return Err(Error::Config(format!("unknown scheme '{other}'"))),
            };
        }
        cfg.include_coarse |= self.include_coarse;
        cfg.exact_quantiles |= self.exact;
        cfg.drop_remainder |= self.drop_remainder;
        cfg.holdout |= self.holdout;
        cfg.rolling |= self.rolling;
        if self.forecast.is_some() {
            cfg.forecast = self.forecast;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Predict(a) => (Command::Predict, a),
        Sub::Cv(a) => (Command::Cv, a),
        Sub::Interval(a) => (Command::Interval, a),
        Sub::Eval(a) => (Command::Eval, a),
    };
    let config = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run with --help for usage");
            return ExitCode::from(2);
        }
    };
    match run(command, &config) {
        Ok(outcome) => {
            let s = &outcome.summary;
            println!("h_used = {}", s.h_used);
            if let Some(r) = s.rmae {
                println!("rmae = {r}");
            }
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
