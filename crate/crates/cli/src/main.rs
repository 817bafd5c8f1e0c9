//! Command-line front end: fit score distributions, estimate prevalence,
//! run the simulation studies, and search the optimal sweep cutoff.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prevalence::baselines::DYS_BINS;
use prevalence::dist::{log_likelihood, Family};
use prevalence::io::{
    format_float, read_config, read_params, read_train_csv, read_truths_csv, write_curve_csv,
    write_estimates_csv, write_metrics_csv, write_params, write_results_csv, write_summary_csv,
};
use prevalence::quantify::Method;
use prevalence::sim::{
    evaluate_score_files, evaluate_with_model, fit_model, run_condition_with_assets,
    study_conditions, study_suite, ConditionResult, EstimateRow, EvaluationSuite, MetricsRow,
    PdeltaChoice, Scale, StudyAssets, ThresholdChoice,
};
use prevalence::theory::{optimal_pdelta_with_profile, pdelta_variance_curve, VarianceProfile};
use prevalence::Error;

#[derive(Parser)]
#[command(
    name = "prevalence",
    version,
    about = "Binary quantification: fit score models, estimate class prevalence, run studies"
)]
struct Cli {
    /// Plain-text defaults file of `key = value` lines mirroring the long
    /// flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a distribution family to each class of a labeled score file.
    Fit(FitArgs),
    /// Estimate the positive prevalence of test score files.
    Estimate(EstimateArgs),
    /// Run one of the three simulation studies and write its result tables.
    Simulate(SimulateArgs),
    /// Find the variance-minimizing sweep cutoff for a fitted model.
    #[command(name = "optimal-pdelta")]
    OptimalPdelta(PdeltaArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Training CSV with `score` and `label` (+1/-1) columns.
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,
    /// Distribution family: normal or skew-normal.
    #[arg(long, value_name = "FAMILY")]
    family: Option<String>,
    /// Directory receiving params.txt in addition to the stdout record.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Training CSV with `score` and `label` columns.
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,
    /// Fitted parameter file; replaces the training fit.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Test score CSVs (repeatable or comma-separated).
    #[arg(long, value_name = "FILE", value_delimiter = ',')]
    test: Vec<PathBuf>,
    /// Quantifiers to run: cc, ac, ms, cs, sld, dys (repeatable or
    /// comma-separated).
    #[arg(long, value_name = "METHOD", value_delimiter = ',')]
    method: Vec<String>,
    /// Family fitted to the training scores when no parameter file is given.
    #[arg(long, value_name = "FAMILY")]
    family: Option<String>,
    /// Sweep cutoff: optimal, traditional, or a number in [0, 1).
    #[arg(long, value_name = "CUTOFF")]
    p_delta: Option<String>,
    /// Decision threshold for cc and ac.
    #[arg(long, value_name = "SCORE")]
    threshold: Option<f64>,
    /// Assumed positive prevalence for the posterior transform and the
    /// optimal-cutoff objective.
    #[arg(long, value_name = "ALPHA")]
    prior: Option<f64>,
    /// True prevalence CSV (`test_set_id`, `alpha`) enabling error metrics.
    #[arg(long, value_name = "FILE")]
    truths: Option<PathBuf>,
    /// Directory receiving estimates.csv (and metrics.csv with --truths).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study number: 1, 2 or 3.
    #[arg(long, value_name = "N")]
    study: Option<u8>,
    /// Replications per condition: paper (10000) or desk (2000).
    #[arg(long, value_name = "SCALE")]
    scale: Option<String>,
    /// Master seed; the whole study is a pure function of it.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Directory receiving the results and summary CSVs.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Abort with exit code 5 when a condition fails outright instead of
    /// skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct PdeltaArgs {
    /// Fitted parameter file from `fit`.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Intended test set size for the variance objective.
    #[arg(long, value_name = "N")]
    n_test: Option<usize>,
    /// Plug-in prevalence for the variance objective.
    #[arg(long, value_name = "ALPHA")]
    prior: Option<f64>,
    /// Also write the sampled variance curve to pdelta_curve.csv.
    #[arg(long)]
    curve: bool,
    /// Directory receiving the curve CSV.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// A command failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn numerical(err: Error) -> Self {
        Failure { code: 3, message: err.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::InvalidInput(_)
            | Error::EmptyInput(_)
            | Error::NonFinite(_)
            | Error::ClassMissing(_)
            | Error::HistogramMismatch(_)
            | Error::Io(_)
            | Error::Parse { .. } => 2,
            Error::FitDidNotConverge { .. }
            | Error::QuadratureDidNotConverge { .. }
            | Error::BracketingFailed(_)
            | Error::OptimizationFailed { .. }
            | Error::ZeroDensity { .. } => 3,
            Error::NoAdmissibleThresholds { .. }
            | Error::WindowUndefined { .. }
            | Error::GapNotUnimodal { .. }
            | Error::DegenerateDenominator { .. } => 4,
        };
        Failure { code, message: err.to_string() }
    }
}

/// Config-file defaults consulted for flags the command line leaves unset.
struct Defaults(HashMap<String, String>);

impl Defaults {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    fn paths(&self, key: &str) -> Option<Vec<PathBuf>> {
        self.raw(key).map(|raw| {
            raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect()
        })
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(|raw| {
            raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
        })
    }

    fn parse<T, E: std::fmt::Display>(
        &self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, E>,
    ) -> Result<Option<T>, Failure> {
        self.raw(key)
            .map(|raw| parse(raw).map_err(|e| Failure::input(format!("config key '{key}': {e}"))))
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, Failure> {
        Ok(self
            .parse(key, |raw| match raw {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(format!("expected true or false, got {other:?}")),
            })?
            .unwrap_or(false))
    }
}

fn parse_pdelta(raw: &str) -> Result<PdeltaChoice, String> {
    match raw {
        "optimal" => Ok(PdeltaChoice::Optimal),
        "traditional" => Ok(PdeltaChoice::Traditional),
        other => other
            .parse::<f64>()
            .map(PdeltaChoice::Fixed)
            .map_err(|_| format!("expected optimal, traditional or a number, got {other:?}")),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run() -> Result<(), Failure> {
    let cli = Cli::parse();
    let defaults = Defaults(match &cli.config {
        Some(path) => read_config(path)?,
        None => HashMap::new(),
    });
    match cli.command {
        Command::Fit(args) => cmd_fit(args, &defaults),
        Command::Estimate(args) => cmd_estimate(args, &defaults),
        Command::Simulate(args) => cmd_simulate(args, &defaults),
        Command::OptimalPdelta(args) => cmd_optimal_pdelta(args, &defaults),
    }
}

fn resolve_family(flag: Option<String>, cfg: &Defaults) -> Result<Family, Failure> {
    match flag {
        Some(raw) => Ok(Family::parse(&raw)?),
        None => Ok(cfg.parse("family", Family::parse)?.unwrap_or(Family::Normal)),
    }
}

fn cmd_fit(args: FitArgs, cfg: &Defaults) -> Result<(), Failure> {
    let train_path = args
        .train
        .or_else(|| cfg.path("train"))
        .ok_or_else(|| Failure::input("fit needs --train <FILE>"))?;
    let family = resolve_family(args.family, cfg)?;
    let out = args.out.or_else(|| cfg.path("out"));

    let train = read_train_csv(&train_path)?;
    let model = fit_model(&train, family)?;
    let log_likelihoods = (
        log_likelihood(&model.positive, train.positives().sorted_scores())?,
        log_likelihood(&model.negative, train.negatives().sorted_scores())?,
    );

    // Stdout carries exactly the parameter records, so the output can be
    // piped straight into a file that `estimate --params` reads back.
    print!("{}", prevalence::io::render_params(&model, Some(log_likelihoods)));
    if let Some(dir) = out {
        let path = dir.join("params.txt");
        write_params(&path, &model, Some(log_likelihoods))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_estimate(args: EstimateArgs, cfg: &Defaults) -> Result<(), Failure> {
    let train = args.train.or_else(|| cfg.path("train"));
    let params = args.params.or_else(|| cfg.path("params"));
    let tests = if args.test.is_empty() {
        cfg.paths("test").unwrap_or_default()
    } else {
        args.test
    };
    let method_names = if args.method.is_empty() {
        cfg.list("method").unwrap_or_else(|| vec!["cs".to_string()])
    } else {
        args.method
    };
    let methods = method_names
        .iter()
        .map(|name| Method::parse(name))
        .collect::<Result<Vec<_>, _>>()?;
    let family = resolve_family(args.family, cfg)?;
    let p_delta = match args.p_delta {
        Some(raw) => parse_pdelta(&raw).map_err(Failure::input)?,
        None => cfg.parse("p-delta", parse_pdelta)?.unwrap_or(PdeltaChoice::Optimal),
    };
    let threshold = match args.threshold {
        Some(t) => t,
        None => cfg.parse("threshold", str::parse::<f64>)?.unwrap_or(0.5),
    };
    let prior = match args.prior {
        Some(p) => p,
        None => cfg.parse("prior", str::parse::<f64>)?.unwrap_or(0.5),
    };
    let truths = args
        .truths
        .or_else(|| cfg.path("truths"))
        .map(|path| read_truths_csv(&path))
        .transpose()?;
    let out = args.out.or_else(|| cfg.path("out"));

    let model = params.map(|path| read_params(&path)).transpose()?;
    let suite = EvaluationSuite {
        methods,
        family,
        model: model.clone(),
        p_delta,
        threshold: ThresholdChoice::Fixed(threshold),
        prior,
        bins: DYS_BINS,
    };

    let evaluation = match (&train, &model) {
        (Some(train_path), _) => {
            evaluate_score_files(train_path, &tests, &suite, truths.as_deref())?
        }
        (None, Some(model)) => evaluate_with_model(model, &tests, &suite, truths.as_deref())?,
        (None, None) => return Err(Failure::input("estimate needs --train or --params")),
    };

    print!("{}", render_estimate_records(&evaluation.estimates));
    if let Some(metrics) = &evaluation.metrics {
        print!("{}", render_metrics_records(metrics));
    }
    if let Some(dir) = out {
        let estimates_path = dir.join("estimates.csv");
        write_estimates_csv(&estimates_path, &evaluation.estimates)?;
        eprintln!("wrote {}", estimates_path.display());
        if let Some(metrics) = &evaluation.metrics {
            let metrics_path = dir.join("metrics.csv");
            write_metrics_csv(&metrics_path, metrics)?;
            eprintln!("wrote {}", metrics_path.display());
        }
    }
    Ok(())
}

fn render_estimate_records(rows: &[EstimateRow]) -> String {
    let mut out = String::new();
    for row in rows {
        let _ = writeln!(out, "test_set_id = {}", row.test_set_id);
        let _ = writeln!(out, "method = {}", row.method);
        let _ = writeln!(out, "estimate_raw = {}", format_float(row.raw));
        let _ = writeln!(out, "estimate_clipped = {}", format_float(row.clipped));
        if let Some(p) = row.p_delta {
            let _ = writeln!(out, "p_delta = {}", format_float(p));
        }
        if let Some((lower, upper)) = row.window {
            let _ = writeln!(out, "window_lower = {}", format_float(lower));
            let _ = writeln!(out, "window_upper = {}", format_float(upper));
        }
        if let Some(k) = row.thresholds {
            let _ = writeln!(out, "thresholds_used = {k}");
        }
        if let Some(v) = row.variance {
            let _ = writeln!(out, "variance = {}", format_float(v));
        }
        out.push('\n');
    }
    out
}

fn render_metrics_records(rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    for row in rows {
        let _ = writeln!(out, "method = {}", row.method);
        let _ = writeln!(out, "mae = {}", format_float(row.mae));
        let _ = writeln!(out, "rmse = {}", format_float(row.rmse));
        let _ = writeln!(out, "rae = {}", format_float(row.rae));
        out.push('\n');
    }
    out
}

fn cmd_simulate(args: SimulateArgs, cfg: &Defaults) -> Result<(), Failure> {
    let study = match args.study {
        Some(s) => s,
        None => cfg
            .parse("study", str::parse::<u8>)?
            .ok_or_else(|| Failure::input("simulate needs --study {1|2|3}"))?,
    };
    let scale = match args.scale {
        Some(raw) => Scale::parse(&raw)?,
        None => cfg.parse("scale", Scale::parse)?.unwrap_or(Scale::Desk),
    };
    let seed = match args.seed {
        Some(s) => s,
        None => cfg.parse("seed", str::parse::<u64>)?.unwrap_or(0),
    };
    let out = args.out.or_else(|| cfg.path("out")).unwrap_or_else(|| PathBuf::from("."));
    let strict = args.strict || cfg.flag("strict")?;

    let suite = study_suite(study)?;
    let conditions = study_conditions(study, scale, seed)?;
    let total = conditions.len();
    let mut assets = StudyAssets::default();
    let mut results = Vec::with_capacity(total);
    for condition in &conditions {
        eprintln!(
            "study {study}: condition {}/{total} (n_test={}, alpha={})",
            condition.ordinal + 1,
            condition.n_test,
            condition.alpha_test,
        );
        match run_condition_with_assets(condition, &suite, &mut assets) {
            Ok(result) => results.push(result),
            Err(err) if strict => {
                return Err(Failure {
                    code: 5,
                    message: format!("condition {} failed: {err}", condition.ordinal),
                })
            }
            Err(err) => eprintln!("warning: skipping condition {}: {err}", condition.ordinal),
        }
    }

    for path in write_study_tables(&out, study, &results)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Writes the per-study results and summary CSVs; study 3 gets one pair of
/// files per skew level.
fn write_study_tables(
    out: &Path,
    study: u8,
    results: &[ConditionResult],
) -> Result<Vec<PathBuf>, Failure> {
    let mut written = Vec::new();
    let mut emit = |stem: String, subset: &[ConditionResult], reference: &str| -> Result<(), Failure> {
        let results_path = out.join(format!("{stem}_results.csv"));
        write_results_csv(&results_path, subset)?;
        written.push(results_path);
        let summary_path = out.join(format!("{stem}_summary.csv"));
        write_summary_csv(&summary_path, subset, reference)?;
        written.push(summary_path);
        Ok(())
    };
    if study == 3 {
        for skew in [1u32, 2, 4] {
            let subset: Vec<ConditionResult> = results
                .iter()
                .filter(|r| r.condition.skew == f64::from(skew))
                .cloned()
                .collect();
            emit(format!("study3_skew{skew}"), &subset, "O-CS-skew")?;
        }
    } else {
        emit(format!("study{study}"), results, "O-CS")?;
    }
    Ok(written)
}

fn cmd_optimal_pdelta(args: PdeltaArgs, cfg: &Defaults) -> Result<(), Failure> {
    let params_path = args
        .params
        .or_else(|| cfg.path("params"))
        .ok_or_else(|| Failure::input("optimal-pdelta needs --params <FILE>"))?;
    let n_test = match args.n_test {
        Some(n) => n,
        None => cfg
            .parse("n-test", str::parse::<usize>)?
            .ok_or_else(|| Failure::input("optimal-pdelta needs --n-test <N>"))?,
    };
    let prior = match args.prior {
        Some(p) => p,
        None => cfg.parse("prior", str::parse::<f64>)?.unwrap_or(0.5),
    };
    let curve = args.curve || cfg.flag("curve")?;
    let out = args.out.or_else(|| cfg.path("out")).unwrap_or_else(|| PathBuf::from("."));

    let model = read_params(&params_path)?;
    // Everything past input parsing is the optimizer's job, so any failure
    // here (including a gap too flat to window) reports as numerical.
    let profile = VarianceProfile::new(&model).map_err(Failure::numerical)?;
    let solution =
        optimal_pdelta_with_profile(&profile, n_test, prior).map_err(Failure::numerical)?;
    let window = profile.window_for(solution.p_delta_star).map_err(Failure::numerical)?;

    println!("p_delta_star = {}", format_float(solution.p_delta_star));
    println!("variance_at_star = {}", format_float(solution.variance_at_star));
    println!("window_lower = {}", format_float(window.lower()));
    println!("window_upper = {}", format_float(window.upper()));

    if curve {
        let points = match solution.variance_curve {
            Some(points) => points,
            None => pdelta_variance_curve(&model, n_test, prior, 101).map_err(Failure::numerical)?,
        };
        let path = out.join("pdelta_curve.csv");
        write_curve_csv(&path, &points)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
