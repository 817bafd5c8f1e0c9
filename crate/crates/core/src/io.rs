//! File formats: score CSVs, fitted-parameter records, result tables, and
//! plain-text run configuration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{LabeledScores, ScoreSet};
use crate::dist::{ClassConditionalModel, DistributionParams, Family};
use crate::error::{Error, Result};
use crate::sim::{ConditionResult, EstimateRow, MetricsRow};

/// Serializes a float with 17 significant digits, enough to round-trip f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

fn split_row(line: &str) -> Vec<&str> {
    line.trim_end_matches('\r').split(',').map(str::trim).collect()
}

/// Reads a labeled training CSV with header columns `score` and `label`
/// (labels +1/-1).
pub fn read_train_csv(path: &Path) -> Result<LabeledScores<f64>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected a header row"))?;
    let cols = split_row(header);
    let score_col = cols
        .iter()
        .position(|&c| c == "score")
        .ok_or_else(|| parse_err(path, 1, "missing 'score' column"))?;
    let label_col = cols
        .iter()
        .position(|&c| c == "label")
        .ok_or_else(|| parse_err(path, 1, "missing 'label' column"))?;

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let row = split_row(line);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line_no = idx + 1;
        if row.len() != cols.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} fields, found {}", cols.len(), row.len()),
            ));
        }
        let score: f64 = row[score_col]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad score {:?}", row[score_col])))?;
        let label = match row[label_col] {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(parse_err(path, line_no, format!("bad label {other:?}"))),
        };
        scores.push(score);
        labels.push(label);
    }
    LabeledScores::new(scores, labels)
}

/// Reads an unlabeled test CSV with a header containing a `score` column.
pub fn read_test_csv(path: &Path) -> Result<ScoreSet<f64>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected a header row"))?;
    let cols = split_row(header);
    let score_col = cols
        .iter()
        .position(|&c| c == "score")
        .ok_or_else(|| parse_err(path, 1, "missing 'score' column"))?;

    let mut scores = Vec::new();
    for (idx, line) in lines {
        let row = split_row(line);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line_no = idx + 1;
        if row.len() != cols.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} fields, found {}", cols.len(), row.len()),
            ));
        }
        let score: f64 = row[score_col]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad score {:?}", row[score_col])))?;
        scores.push(score);
    }
    ScoreSet::new(scores)
}

/// Reads true prevalences keyed by test set id: columns `test_set_id` and
/// `alpha`.
pub fn read_truths_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected a header row"))?;
    let cols = split_row(header);
    let id_col = cols
        .iter()
        .position(|&c| c == "test_set_id")
        .ok_or_else(|| parse_err(path, 1, "missing 'test_set_id' column"))?;
    let alpha_col = cols
        .iter()
        .position(|&c| c == "alpha")
        .ok_or_else(|| parse_err(path, 1, "missing 'alpha' column"))?;

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let row = split_row(line);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line_no = idx + 1;
        let alpha: f64 = row
            .get(alpha_col)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| parse_err(path, line_no, "bad alpha value"))?;
        let id = row
            .get(id_col)
            .ok_or_else(|| parse_err(path, line_no, "missing test_set_id field"))?;
        rows.push((id.to_string(), alpha));
    }
    Ok(rows)
}

/// Renders the two fitted class distributions as blank-line-separated
/// key-value records, with optional per-class log-likelihoods.
pub fn render_params(
    model: &ClassConditionalModel<f64>,
    log_likelihoods: Option<(f64, f64)>,
) -> String {
    let mut out = String::new();
    for (name, params, ll) in [
        ("positive", &model.positive, log_likelihoods.map(|l| l.0)),
        ("negative", &model.negative, log_likelihoods.map(|l| l.1)),
    ] {
        let _ = writeln!(out, "class = {name}");
        let _ = writeln!(out, "family = {}", params.family());
        let _ = writeln!(out, "location = {}", format_float(params.location()));
        let _ = writeln!(out, "scale = {}", format_float(params.scale()));
        let _ = writeln!(out, "shape = {}", format_float(params.shape()));
        if let Some(ll) = ll {
            let _ = writeln!(out, "log_likelihood = {}", format_float(ll));
        }
        out.push('\n');
    }
    out
}

/// Writes [`render_params`] output to a file.
pub fn write_params(
    path: &Path,
    model: &ClassConditionalModel<f64>,
    log_likelihoods: Option<(f64, f64)>,
) -> Result<()> {
    write_file(path, &render_params(model, log_likelihoods))
}

/// Reads a parameter file written by [`write_params`].
pub fn read_params(path: &Path) -> Result<ClassConditionalModel<f64>> {
    let text = read_file(path)?;
    let mut classes: HashMap<String, DistributionParams<f64>> = HashMap::new();
    let mut record: HashMap<String, String> = HashMap::new();
    let mut record_line = 0usize;

    let mut flush = |record: &mut HashMap<String, String>, line: usize| -> Result<()> {
        if record.is_empty() {
            return Ok(());
        }
        let take = |key: &str| -> Result<String> {
            record
                .get(key)
                .cloned()
                .ok_or_else(|| parse_err(path, line, format!("record is missing '{key}'")))
        };
        let class = take("class")?;
        let family = Family::parse(&take("family")?)?;
        let number = |key: &str| -> Result<f64> {
            take(key)?
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad number for '{key}'")))
        };
        let params =
            DistributionParams::new(family, number("location")?, number("scale")?, number("shape")?)?;
        if classes.insert(class.clone(), params).is_some() {
            return Err(parse_err(path, line, format!("duplicate class {class:?}")));
        }
        record.clear();
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            flush(&mut record, record_line)?;
            continue;
        }
        if record.is_empty() {
            record_line = idx + 1;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, idx + 1, "expected 'key = value'"))?;
        record.insert(key.trim().to_string(), value.trim().to_string());
    }
    flush(&mut record, record_line)?;

    let positive = classes
        .remove("positive")
        .ok_or_else(|| parse_err(path, 1, "no 'positive' class record"))?;
    let negative = classes
        .remove("negative")
        .ok_or_else(|| parse_err(path, 1, "no 'negative' class record"))?;
    Ok(ClassConditionalModel::new(positive, negative))
}

/// Parses a plain-text configuration file of `key = value` lines; `#`
/// starts a comment.
pub fn read_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = read_file(path)?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, idx + 1, "expected 'key = value'"))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

const RESULT_COLUMNS: &str = "study,ordinal,skew,n_train,alpha_train,n_test,alpha_test,\
sigma_plus,sigma_minus,mu_plus,mu_minus,replications,method,bias,variance,mse,rmse,failures";

fn condition_fields(result: &ConditionResult) -> String {
    let c = &result.condition;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        c.study,
        c.ordinal,
        format_float(c.skew),
        c.n_train.map(|n| n.to_string()).unwrap_or_default(),
        c.alpha_train.map(format_float).unwrap_or_default(),
        c.n_test,
        format_float(c.alpha_test),
        format_float(c.sigma_plus),
        format_float(c.sigma_minus),
        format_float(c.mu_plus),
        format_float(c.mu_minus),
    )
}

/// Writes one row per condition and quantifier with the aggregated error
/// measures.
pub fn write_results_csv(path: &Path, results: &[ConditionResult]) -> Result<()> {
    let mut out = String::from(RESULT_COLUMNS);
    out.push('\n');
    for result in results {
        let prefix = condition_fields(result);
        for s in &result.summaries {
            let _ = writeln!(
                out,
                "{prefix},{},{},{},{},{},{},{}",
                result.condition.replications,
                s.method.label(),
                format_float(s.bias),
                format_float(s.variance),
                format_float(s.mse),
                format_float(s.rmse),
                s.failures,
            );
        }
    }
    write_file(path, &out)
}

/// Writes the per-condition RMSE comparison: each quantifier's RMSE and its
/// difference to the reference quantifier's RMSE in the same condition.
pub fn write_summary_csv(path: &Path, results: &[ConditionResult], reference: &str) -> Result<()> {
    let mut out = String::from(
        "study,ordinal,skew,n_train,alpha_train,n_test,alpha_test,sigma_plus,sigma_minus,\
mu_plus,mu_minus,method,rmse,rmse_diff_vs_reference",
    );
    out.push('\n');
    for result in results {
        let prefix = condition_fields(result);
        let base = result
            .summaries
            .iter()
            .find(|s| s.method.label() == reference)
            .map(|s| s.rmse)
            .ok_or_else(|| {
                Error::InvalidInput(format!("reference method {reference:?} missing from results"))
            })?;
        for s in &result.summaries {
            let _ = writeln!(
                out,
                "{prefix},{},{},{}",
                s.method.label(),
                format_float(s.rmse),
                format_float(s.rmse - base),
            );
        }
    }
    write_file(path, &out)
}

/// Renders per-test-set estimates from a score-file evaluation as CSV.
pub fn render_estimates_csv(rows: &[EstimateRow]) -> String {
    let mut out = String::from("test_set_id,method,estimate_raw,estimate_clipped\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.test_set_id,
            r.method,
            format_float(r.raw),
            format_float(r.clipped),
        );
    }
    out
}

/// Writes [`render_estimates_csv`] output to a file.
pub fn write_estimates_csv(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    write_file(path, &render_estimates_csv(rows))
}

/// Renders aggregated error metrics per method as CSV.
pub fn render_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("method,mae,rmse,rae\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.method,
            format_float(r.mae),
            format_float(r.rmse),
            format_float(r.rae),
        );
    }
    out
}

/// Writes [`render_metrics_csv`] output to a file.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_file(path, &render_metrics_csv(rows))
}

/// Writes a sampled cutoff-to-variance curve.
pub fn write_curve_csv(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let mut out = String::from("p_delta,variance\n");
    for &(p, v) in curve {
        let _ = writeln!(out, "{},{}", format_float(p), format_float(v));
    }
    write_file(path, &out)
}
