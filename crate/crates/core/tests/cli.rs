use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wavekernel::evaluation::{gen_synthetic, seasonal_profile, SyntheticKind, SyntheticSpec};
use wavekernel::io::write_series;

fn wavekernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn predictions(dir: &Path) -> Vec<f64> {
    fs::read_to_string(dir.join("prediction.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn periodic_series_predicts_last_segment() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("periodic.csv");
    let profile = seasonal_profile(12);
    let series: Vec<f64> = profile.iter().cycle().take(12 * 8).copied().collect();
    write_series(&input, &series).unwrap();
    let out = tmp.path().join("out");

    let res = wavekernel(&["predict", "--input", path(&input), "--p", "12", "--out", path(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let pred = predictions(&out);
    assert_eq!(pred.len(), 12);
    for (a, b) in pred.iter().zip(&profile) {
        assert!((a - b).abs() <= 1e-8);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("series.csv");
    let series = gen_synthetic(&SyntheticSpec::new(SyntheticKind::SeasonalAr, 30, 8, 1.0, 3)).unwrap();
    write_series(&input, &series).unwrap();
    let out = tmp.path().join("out");
    let args = ["interval", "--input", path(&input), "--p", "8", "--out", path(&out), "--b", "300", "--seed", "5"];

    assert!(wavekernel(&args).status.success());
    let first: Vec<Vec<u8>> = ["prediction.csv", "summary.json", "plot.csv", "cv.csv"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    assert!(wavekernel(&args).status.success());
    for (i, f) in ["prediction.csv", "summary.json", "plot.csv", "cv.csv"].iter().enumerate() {
        assert_eq!(first[i], fs::read(out.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn replay_from_summary_config() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("series.csv");
    let series = gen_synthetic(&SyntheticSpec::new(SyntheticKind::MarkovFunctional, 25, 16, 0.5, 9)).unwrap();
    write_series(&input, &series).unwrap();
    let out = tmp.path().join("a");
    let res = wavekernel(&[
        "interval", "--input", path(&input), "--p", "16", "--out", path(&out), "--filter", "dd6", "--kernel",
        "laplace", "--h", "0.7", "--seed", "11",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let config_path = tmp.path().join("config.json");
    fs::write(&config_path, serde_json::to_string(&summary["config"]).unwrap()).unwrap();
    let replay = tmp.path().join("b");
    let res = wavekernel(&["interval", "--config", path(&config_path), "--out", path(&replay)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        fs::read(out.join("prediction.csv")).unwrap(),
        fs::read(replay.join("prediction.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("series.csv");
    write_series(&input, &seasonal_profile(8).repeat(5)).unwrap();
    let input = path(&input);

    for args in [
        vec!["predict", "--input", input, "--p", "8", "--filter", "haar"],
        vec!["predict", "--input", input, "--p", "8", "--h", "0.5", "--cv-grid", "0.1:1:5"],
        vec!["predict", "--input", input, "--p", "8", "--h", "-1"],
        vec!["interval", "--input", input, "--p", "8", "--alpha", "0.7"],
        vec!["cv", "--input", input, "--p", "8", "--h", "0.3"],
        vec!["predict", "--input", input],
        vec!["predict", "--bogus-flag"],
    ] {
        let res = wavekernel(&args);
        assert_eq!(res.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
    }

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"segment_length": 8, "input": "x.csv", "output": "o", "unknown": 1}"#).unwrap();
    assert_eq!(wavekernel(&["predict", "--config", path(&bad)]).status.code(), Some(2));
}

#[test]
fn remainder_requires_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("series.csv");
    let mut series = seasonal_profile(8).repeat(5);
    series.extend([1.0, 2.0, 3.0]);
    write_series(&input, &series).unwrap();
    let out = tmp.path().join("out");
    let base = ["predict", "--input", path(&input), "--p", "8", "--out", path(&out)];

    let res = wavekernel(&base);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("3"));

    let mut args = base.to_vec();
    args.push("--drop-remainder");
    assert!(wavekernel(&args).status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["remainder_dropped"], 3);
    assert_eq!(summary["n_segments"], 5);
}

#[test]
fn cv_table_marks_selected_bandwidth() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("series.csv");
    let series = gen_synthetic(&SyntheticSpec::new(SyntheticKind::SeasonalAr, 20, 8, 1.0, 4)).unwrap();
    write_series(&input, &series).unwrap();
    let out = tmp.path().join("out");
    let res = wavekernel(&["cv", "--input", path(&input), "--p", "8", "--out", path(&out), "--cv-grid", "0.1:10:7"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let text = fs::read_to_string(out.join("cv.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,cv,selected"));
    let rows: Vec<(f64, f64, bool)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2] == "1")
        })
        .collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows.iter().filter(|r| r.2).count(), 1);
    let best = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let selected = rows.iter().find(|r| r.2).unwrap();
    assert_eq!(selected.1, best);
    // Ties resolve to the smallest bandwidth.
    assert_eq!(selected.0, rows.iter().find(|r| r.1 == best).unwrap().0);
}

#[test]
fn eval_reports_both_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("series.csv");
    let series = gen_synthetic(&SyntheticSpec::new(SyntheticKind::SeasonalAr, 12, 8, 0.3, 8)).unwrap();
    write_series(&input, &series).unwrap();
    let out = tmp.path().join("out");
    let res = wavekernel(&["eval", "--input", path(&input), "--p", "8", "--out", path(&out), "--rolling"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["training_segments"], 11);
    assert!(summary["rmae"].as_f64().unwrap() > 0.0);
    assert!(summary["naive_rmae"].as_f64().unwrap() > 0.0);
    assert!(summary["rolling_mean_rmae"].as_f64().is_some());
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    assert!(plot.starts_with("t_index,truth,predicted,lower,upper\n"));
    assert!(out.join("rolling.csv").exists());
}
