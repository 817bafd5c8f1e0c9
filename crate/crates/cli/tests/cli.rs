//! End-to-end checks of the `prevalence` binary: flag handling, file
//! round-trips, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use prevalence::dist::{ClassConditionalModel, DistributionParams};
use prevalence::io::{format_float, read_params};
use prevalence::sim::{generate_test_set, generate_train_set};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prevalence"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn unit_model() -> ClassConditionalModel<f64> {
    ClassConditionalModel::new(
        DistributionParams::normal(1.0, 1.0).unwrap(),
        DistributionParams::normal(0.0, 1.0).unwrap(),
    )
}

fn write_train_csv(path: &Path, n: usize, alpha: f64, seed: u64) {
    let train = generate_train_set(&unit_model(), alpha, n, seed).unwrap();
    let mut text = String::from("score,label\n");
    for (score, label) in train.scores().iter().zip(train.labels()) {
        text.push_str(&format!("{},{label}\n", format_float(*score)));
    }
    fs::write(path, text).unwrap();
}

fn write_test_csv(path: &Path, n: usize, alpha: f64, seed: u64) {
    let test = generate_test_set(&unit_model(), alpha, n, seed).unwrap();
    let mut text = String::from("score\n");
    for score in test.scores() {
        text.push_str(&format_float(*score));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn value_of(records: &str, key: &str) -> Vec<String> {
    records
        .lines()
        .filter_map(|line| line.strip_prefix(&format!("{key} = ")))
        .map(String::from)
        .collect()
}

#[test]
fn fit_round_trips_through_the_params_file() {
    let dir = tempfile::tempdir().unwrap();
    write_train_csv(&dir.path().join("train.csv"), 400, 0.5, 31);

    let output = run(&["fit", "--train", "train.csv", "--family", "normal", "--out", "."], dir.path());
    let text = stdout(&output);
    assert_eq!(value_of(&text, "class"), ["positive", "negative"]);
    assert_eq!(value_of(&text, "log_likelihood").len(), 2);

    // The stdout record and the written file parse back to the same model.
    let from_file = read_params(&dir.path().join("params.txt")).unwrap();
    let stdout_path = dir.path().join("stdout.txt");
    fs::write(&stdout_path, &text).unwrap();
    let from_stdout = read_params(&stdout_path).unwrap();
    assert_eq!(from_file, from_stdout);
    assert!((from_file.positive.location() - 1.0).abs() < 0.2);
    assert!((from_file.negative.location() - 0.0).abs() < 0.2);
}

#[test]
fn estimate_runs_from_training_scores_or_fitted_params_identically() {
    let dir = tempfile::tempdir().unwrap();
    write_train_csv(&dir.path().join("train.csv"), 500, 0.5, 7);
    write_test_csv(&dir.path().join("batch.csv"), 300, 0.7, 8);

    stdout(&run(&["fit", "--train", "train.csv", "--family", "normal", "--out", "."], dir.path()));
    let from_train = stdout(&run(
        &["estimate", "--train", "train.csv", "--test", "batch.csv", "--method", "cs", "--p-delta", "traditional"],
        dir.path(),
    ));
    let from_params = stdout(&run(
        &["estimate", "--params", "params.txt", "--test", "batch.csv", "--method", "cs", "--p-delta", "traditional"],
        dir.path(),
    ));
    assert_eq!(from_train, from_params);
    assert_eq!(value_of(&from_train, "p_delta"), [format_float(0.25)]);
    assert_eq!(value_of(&from_train, "window_lower").len(), 1);
    assert_eq!(value_of(&from_train, "variance").len(), 1);
    let estimate: f64 = value_of(&from_train, "estimate_clipped")[0].parse().unwrap();
    assert!((estimate - 0.7).abs() < 0.15, "estimate {estimate}");
}

#[test]
fn estimate_writes_tables_and_scores_against_truths() {
    let dir = tempfile::tempdir().unwrap();
    write_train_csv(&dir.path().join("train.csv"), 500, 0.5, 7);
    write_test_csv(&dir.path().join("a.csv"), 200, 0.3, 9);
    write_test_csv(&dir.path().join("b.csv"), 200, 0.6, 10);
    fs::write(dir.path().join("truths.csv"), "test_set_id,alpha\na,0.3\nb,0.6\n").unwrap();

    let output = run(
        &[
            "estimate", "--train", "train.csv", "--test", "a.csv,b.csv", "--method", "cc,ms",
            "--p-delta", "traditional", "--truths", "truths.csv", "--out", "tables",
        ],
        dir.path(),
    );
    let text = stdout(&output);
    assert_eq!(value_of(&text, "test_set_id"), ["a", "a", "b", "b"]);
    assert_eq!(value_of(&text, "rmse").len(), 2);

    let estimates = fs::read_to_string(dir.path().join("tables/estimates.csv")).unwrap();
    assert_eq!(estimates.lines().count(), 5);
    assert!(estimates.starts_with("test_set_id,method,estimate_raw,estimate_clipped\n"));
    let metrics = fs::read_to_string(dir.path().join("tables/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
}

#[test]
fn config_file_fills_unset_flags_and_loses_to_explicit_ones() {
    let dir = tempfile::tempdir().unwrap();
    write_train_csv(&dir.path().join("train.csv"), 300, 0.5, 3);
    write_test_csv(&dir.path().join("t.csv"), 150, 0.4, 4);
    fs::write(
        dir.path().join("defaults.conf"),
        "train = train.csv\ntest = t.csv\nmethod = cc\nthreshold = 0.25\n",
    )
    .unwrap();

    let from_config = stdout(&run(&["estimate", "--config", "defaults.conf"], dir.path()));
    assert_eq!(value_of(&from_config, "method"), ["cc"]);

    let overridden = stdout(&run(
        &["estimate", "--config", "defaults.conf", "--method", "ac", "--threshold", "0.5"],
        dir.path(),
    ));
    assert_eq!(value_of(&overridden, "method"), ["ac"]);
    assert_ne!(from_config, overridden);
}

#[test]
fn optimal_pdelta_prints_the_solution_and_samples_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let params = "class = positive\nfamily = normal\nlocation = 1.0\nscale = 1.0\nshape = 0.0\n\n\
                  class = negative\nfamily = normal\nlocation = 0.0\nscale = 1.0\nshape = 0.0\n";
    fs::write(dir.path().join("params.txt"), params).unwrap();

    let output = run(
        &["optimal-pdelta", "--params", "params.txt", "--n-test", "1000", "--curve", "--out", "."],
        dir.path(),
    );
    let text = stdout(&output);
    let p_star: f64 = value_of(&text, "p_delta_star")[0].parse().unwrap();
    assert!((p_star - 0.162181).abs() < 5e-4, "cutoff {p_star}");
    let lower: f64 = value_of(&text, "window_lower")[0].parse().unwrap();
    let upper: f64 = value_of(&text, "window_upper")[0].parse().unwrap();
    assert!(lower < 0.5 && 0.5 < upper);

    let curve = fs::read_to_string(dir.path().join("pdelta_curve.csv")).unwrap();
    assert!(curve.starts_with("p_delta,variance\n"));
    assert_eq!(curve.lines().count(), 102);
}

#[test]
fn failures_use_the_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_test_csv(&dir.path().join("t.csv"), 50, 0.5, 5);
    let params = "class = positive\nfamily = normal\nlocation = 1.0\nscale = 1.0\nshape = 0.0\n\n\
                  class = negative\nfamily = normal\nlocation = 0.0\nscale = 1.0\nshape = 0.0\n";
    fs::write(dir.path().join("params.txt"), params).unwrap();
    let degenerate = params.replace("location = 1.0", "location = 0.0");
    fs::write(dir.path().join("flat.txt"), degenerate).unwrap();

    let code = |args: &[&str]| run(args, dir.path()).status.code();
    // 2: malformed or missing input.
    assert_eq!(code(&["estimate", "--train", "absent.csv", "--test", "t.csv", "--method", "cc"]), Some(2));
    assert_eq!(code(&["estimate", "--params", "params.txt", "--test", "t.csv", "--method", "dys"]), Some(2));
    fs::write(dir.path().join("nolabel.csv"), "score\n0.5\n").unwrap();
    assert_eq!(code(&["fit", "--train", "nolabel.csv"]), Some(2));
    // 3: the optimizer cannot window a gapless model.
    assert_eq!(code(&["optimal-pdelta", "--params", "flat.txt", "--n-test", "100"]), Some(3));
    // 4: no admissible threshold region for the requested cutoff.
    assert_eq!(
        code(&["estimate", "--params", "params.txt", "--test", "t.csv", "--method", "cs", "--p-delta", "0.9"]),
        Some(4)
    );
}
