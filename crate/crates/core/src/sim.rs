//! Seeded data generation, the three factorial simulation studies, and
//! prevalence estimation on score files.
//!
//! Everything here is deliberately `f64`: reproducibility of the study
//! outputs is a byte-level contract, so the simulation layer pins one
//! scalar type and one (sequential) execution order.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::baselines::{
    dys, nb_posterior, nb_posteriors, sld, Histogram, ProbabilitySet, DYS_BINS, DYS_TOLERANCE,
    SLD_MAX_ITERATIONS, SLD_TOLERANCE,
};
use crate::data::{LabeledScores, ScoreSet};
use crate::dist::{
    fit_normal_mle, fit_skew_normal_mle, ClassConditionalModel, DistributionParams, Family,
};
use crate::error::{Error, Result};
use crate::io;
use crate::quantify::{
    ac_estimate, adjusted_count, cc_estimate, classify_count, continuous_sweep,
    continuous_sweep_in_window, median_sweep, median_sweep_with_rates, threshold_max,
    threshold_t50, Method, PrevalenceEstimate, SweepIntegrals, ThresholdWindow,
};
use crate::theory::{cs_variance, optimal_pdelta_with_profile, VarianceProfile};

/// The cutoff the sweep literature fixes by convention.
pub const TRADITIONAL_PDELTA: f64 = 0.25;

/// Replication budget of a study run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Full budget: 10,000 replications per condition.
    Paper,
    /// Reduced budget for desk runs: 2,000 replications per condition.
    Desk,
}

impl Scale {
    pub fn replications(self) -> usize {
        match self {
            Scale::Paper => 10_000,
            Scale::Desk => 2_000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(Error::InvalidInput(format!(
                "unknown scale {other:?}, expected \"paper\" or \"desk\""
            ))),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A quantifier variant as reported in the study result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMethod {
    /// Continuous sweep with the variance-optimal cutoff.
    OptimalCs,
    /// Continuous sweep with the conventional cutoff of 0.25.
    TraditionalCs,
    /// Median sweep with the variance-optimal cutoff.
    OptimalMs,
    /// Median sweep with the conventional cutoff.
    TraditionalMs,
    Sld,
    Dys,
    /// Optimal-cutoff continuous sweep on a skew-normal refit.
    OptimalCsSkew,
    /// Conventional-cutoff continuous sweep on a skew-normal refit.
    TraditionalCsSkew,
    /// Optimal-cutoff continuous sweep on a normal refit.
    OptimalCsNorm,
    /// Conventional-cutoff continuous sweep on a normal refit.
    TraditionalCsNorm,
}

impl SimMethod {
    pub fn label(self) -> &'static str {
        match self {
            SimMethod::OptimalCs => "O-CS",
            SimMethod::TraditionalCs => "T-CS",
            SimMethod::OptimalMs => "O-MS",
            SimMethod::TraditionalMs => "T-MS",
            SimMethod::Sld => "SLD",
            SimMethod::Dys => "DyS",
            SimMethod::OptimalCsSkew => "O-CS-skew",
            SimMethod::TraditionalCsSkew => "T-CS-skew",
            SimMethod::OptimalCsNorm => "O-CS-norm",
            SimMethod::TraditionalCsNorm => "T-CS-norm",
        }
    }
}

impl std::fmt::Display for SimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The full quantifier suite of a study.
pub fn study_suite(study: u8) -> Result<Vec<SimMethod>> {
    match study {
        1 | 2 => Ok(vec![
            SimMethod::OptimalCs,
            SimMethod::TraditionalCs,
            SimMethod::OptimalMs,
            SimMethod::TraditionalMs,
            SimMethod::Sld,
            SimMethod::Dys,
        ]),
        3 => Ok(vec![
            SimMethod::OptimalCsSkew,
            SimMethod::TraditionalCsSkew,
            SimMethod::OptimalCsNorm,
            SimMethod::TraditionalCsNorm,
            SimMethod::OptimalMs,
            SimMethod::TraditionalMs,
            SimMethod::Sld,
            SimMethod::Dys,
        ]),
        other => Err(Error::InvalidInput(format!("unknown study {other}, expected 1, 2, or 3"))),
    }
}

/// One cell of a study's factorial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyCondition {
    pub study: u8,
    /// Position in the study's grid enumeration; also keys the seed stream.
    pub ordinal: usize,
    /// Shape parameter of both class distributions; 0 means normal classes.
    pub skew: f64,
    pub n_train: Option<usize>,
    pub alpha_train: Option<f64>,
    pub n_test: usize,
    pub alpha_test: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub replications: usize,
    pub master_seed: u64,
}

impl StudyCondition {
    /// The data-generating class distributions of this condition.
    pub fn true_model(&self) -> Result<ClassConditionalModel<f64>> {
        let class = |mu: f64, sigma: f64| {
            if self.skew == 0.0 {
                DistributionParams::normal(mu, sigma)
            } else {
                DistributionParams::skew_normal(mu, sigma, self.skew)
            }
        };
        Ok(ClassConditionalModel::new(
            class(self.mu_plus, self.sigma_plus)?,
            class(self.mu_minus, self.sigma_minus)?,
        ))
    }
}

/// Enumerates the factorial grid of a study. Ordinals are contiguous from 0
/// in enumeration order, which fixes each condition's seed stream.
pub fn study_conditions(study: u8, scale: Scale, master_seed: u64) -> Result<Vec<StudyCondition>> {
    let replications = scale.replications();
    let mut out = Vec::new();
    let mut push = |skew: f64,
                    n_train: Option<usize>,
                    alpha_train: Option<f64>,
                    n_test: usize,
                    alpha_test: f64,
                    sigma_plus: f64,
                    sigma_minus: f64| {
        out.push(StudyCondition {
            study,
            ordinal: 0,
            skew,
            n_train,
            alpha_train,
            n_test,
            alpha_test,
            sigma_plus,
            sigma_minus,
            mu_plus: 1.0,
            mu_minus: 0.0,
            replications,
            master_seed,
        });
    };

    match study {
        1 => {
            for &n_test in &[100usize, 1000] {
                for &sigma_plus in &[0.5, 1.0, 1.5] {
                    for &sigma_minus in &[0.5, 1.0, 1.5] {
                        for &alpha_test in &[0.3, 0.5, 0.9] {
                            push(0.0, None, None, n_test, alpha_test, sigma_plus, sigma_minus);
                        }
                    }
                }
            }
        }
        2 => {
            for &n_train in &[100usize, 1000] {
                for &alpha_train in &[0.4, 0.5, 0.6] {
                    for &n_test in &[100usize, 1000] {
                        for &sigma_plus in &[0.5, 1.0, 1.5] {
                            for &sigma_minus in &[0.5, 1.0, 1.5] {
                                for &alpha_test in &[0.3, 0.5, 0.9] {
                                    push(
                                        0.0,
                                        Some(n_train),
                                        Some(alpha_train),
                                        n_test,
                                        alpha_test,
                                        sigma_plus,
                                        sigma_minus,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        3 => {
            for &skew in &[1.0, 2.0, 4.0] {
                for &n_test in &[100usize, 1000] {
                    for &sigma_plus in &[0.5, 1.5] {
                        for &sigma_minus in &[0.5, 1.5] {
                            for &alpha_test in &[0.3, 0.5, 0.9] {
                                push(
                                    skew,
                                    Some(1000),
                                    Some(0.5),
                                    n_test,
                                    alpha_test,
                                    sigma_plus,
                                    sigma_minus,
                                );
                            }
                        }
                    }
                }
            }
        }
        other => {
            return Err(Error::InvalidInput(format!("unknown study {other}, expected 1, 2, or 3")))
        }
    }
    for (i, cond) in out.iter_mut().enumerate() {
        cond.ordinal = i;
    }
    Ok(out)
}

const TEST_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
// ASCII "hist": reserves a seed stream for the posterior histogram draws.
const HISTOGRAM_TAG: u64 = 0x6869_7374;
const HISTOGRAM_DRAWS: usize = 10_000_000;
const HISTOGRAM_CHUNK: usize = 1 << 16;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds context parts into a master seed so every (condition, replication,
/// stream) triple gets its own independent generator.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix(master);
    for &part in parts {
        state = splitmix(state ^ splitmix(part));
    }
    state
}

fn validate_prevalence(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::InvalidInput(format!("prevalence must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn positive_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64).round() as usize).min(n)
}

/// Draws a test set with an exact class split: `round(alpha * n)` positives
/// first, then negatives, then one shuffle, all from a single generator.
pub fn generate_test_set(
    model: &ClassConditionalModel<f64>,
    alpha: f64,
    n_test: usize,
    seed: u64,
) -> Result<ScoreSet<f64>> {
    validate_prevalence(alpha)?;
    if n_test == 0 {
        return Err(Error::EmptyInput("a test set needs at least one draw"));
    }
    let n_pos = positive_count(alpha, n_test);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(n_test);
    scores.extend(model.positive.sample_with(n_pos, &mut rng));
    scores.extend(model.negative.sample_with(n_test - n_pos, &mut rng));
    scores.shuffle(&mut rng);
    ScoreSet::new(scores)
}

/// Draws a labeled training set the same way as [`generate_test_set`].
/// Errors if the rounded class split leaves either class empty.
pub fn generate_train_set(
    model: &ClassConditionalModel<f64>,
    alpha: f64,
    n_train: usize,
    seed: u64,
) -> Result<LabeledScores<f64>> {
    validate_prevalence(alpha)?;
    if n_train == 0 {
        return Err(Error::EmptyInput("a training set needs at least one draw"));
    }
    let n_pos = positive_count(alpha, n_train);
    let n_neg = n_train - n_pos;
    if n_pos == 0 {
        return Err(Error::ClassMissing("the training prevalence rounds to zero positives"));
    }
    if n_neg == 0 {
        return Err(Error::ClassMissing("the training prevalence rounds to zero negatives"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows: Vec<(f64, i8)> = Vec::with_capacity(n_train);
    rows.extend(model.positive.sample_with(n_pos, &mut rng).into_iter().map(|s| (s, 1)));
    rows.extend(model.negative.sample_with(n_neg, &mut rng).into_iter().map(|s| (s, -1)));
    rows.shuffle(&mut rng);
    let (scores, labels) = rows.into_iter().unzip();
    LabeledScores::new(scores, labels)
}

/// Fits both class distributions of a labeled sample in one family.
pub fn fit_model(train: &LabeledScores<f64>, family: Family) -> Result<ClassConditionalModel<f64>> {
    let fit = |scores: &[f64]| match family {
        Family::Normal => fit_normal_mle(scores),
        Family::SkewNormal => fit_skew_normal_mle(scores),
    };
    Ok(ClassConditionalModel::new(
        fit(train.positives().sorted_scores())?,
        fit(train.negatives().sorted_scores())?,
    ))
}

/// Unbiased sample variance of the raw continuous-sweep estimate over
/// freshly drawn test sets; the Monte Carlo check of the variance theory.
pub fn monte_carlo_variance(
    model: &ClassConditionalModel<f64>,
    alpha: f64,
    n_test: usize,
    window: &ThresholdWindow<f64>,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if replications < 100 {
        return Err(Error::InvalidInput(format!(
            "a Monte Carlo variance needs at least 100 replications, got {replications}"
        )));
    }
    let mut estimates = Vec::with_capacity(replications);
    for rep in 0..replications {
        let test = generate_test_set(model, alpha, n_test, derive_seed(seed, &[rep as u64]))?;
        estimates.push(continuous_sweep_in_window(model, &test, window)?.raw);
    }
    let n = replications as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    Ok(estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Aggregated error measures of one quantifier in one condition, over the
/// replications where it produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub method: SimMethod,
    pub bias: f64,
    /// Population variance of the clipped estimates around their own mean.
    pub variance: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Replications this quantifier failed on; excluded from the moments.
    pub failures: usize,
}

fn summarize(method: SimMethod, alpha: f64, estimates: &[f64], failures: usize) -> MethodSummary {
    if estimates.is_empty() {
        return MethodSummary {
            method,
            bias: f64::NAN,
            variance: f64::NAN,
            mse: f64::NAN,
            rmse: f64::NAN,
            failures,
        };
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let bias = mean - alpha;
    let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let mse = bias * bias + variance;
    MethodSummary { method, bias, variance, mse, rmse: mse.sqrt(), failures }
}

/// The outcome of one condition: a summary per suite entry, in suite order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub condition: StudyCondition,
    pub summaries: Vec<MethodSummary>,
}

/// Artifacts shared across the conditions of one study run, currently the
/// large known-model posterior histograms keyed by the class scale pair.
#[derive(Debug, Default)]
pub struct StudyAssets {
    posterior_histograms: HashMap<(u64, u64), (Histogram<f64>, Histogram<f64>)>,
}

impl StudyAssets {
    fn known_model_histograms(
        &mut self,
        condition: &StudyCondition,
        model: &ClassConditionalModel<f64>,
    ) -> Result<(Histogram<f64>, Histogram<f64>)> {
        let key = (condition.sigma_plus.to_bits(), condition.sigma_minus.to_bits());
        if let Some(pair) = self.posterior_histograms.get(&key) {
            return Ok(pair.clone());
        }
        let seed = derive_seed(condition.master_seed, &[HISTOGRAM_TAG, key.0, key.1]);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let positive = posterior_histogram(&model.positive, model, 0.5, &mut rng)?;
        let negative = posterior_histogram(&model.negative, model, 0.5, &mut rng)?;
        let pair = (positive, negative);
        self.posterior_histograms.insert(key, pair.clone());
        Ok(pair)
    }
}

/// Histogram of the posterior transform of one class distribution, built
/// from a large stream of draws without materializing them.
fn posterior_histogram(
    class: &DistributionParams<f64>,
    model: &ClassConditionalModel<f64>,
    prior: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Histogram<f64>> {
    let bins = DYS_BINS;
    let mut counts = vec![0u64; bins];
    let mut remaining = HISTOGRAM_DRAWS;
    while remaining > 0 {
        let chunk = remaining.min(HISTOGRAM_CHUNK);
        for score in class.sample_with(chunk, rng) {
            let p = nb_posterior(model, prior, score)?;
            // Same binning rule as Histogram::equal_width.
            let idx = ((p * bins as f64).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        remaining -= chunk;
    }
    let total = HISTOGRAM_DRAWS as f64;
    let masses = counts.iter().map(|&c| c as f64 / total).collect();
    let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    Histogram::from_parts(edges, masses)
}

fn unused<T>() -> Result<T> {
    Err(Error::InvalidInput("estimator dependency was not requested by the suite".into()))
}

fn posteriors_for(
    model: &ClassConditionalModel<f64>,
    prior: f64,
    test: &ScoreSet<f64>,
    cache: &mut Option<Result<ProbabilitySet<f64>>>,
) -> Result<ProbabilitySet<f64>> {
    cache.get_or_insert_with(|| nb_posteriors(model, prior, test.scores())).clone()
}

/// Continuous sweep through a fitted model bundle: window from the profile,
/// integrals from the exact-antiderivative route.
fn sweep_from(
    bundle: &Result<(ClassConditionalModel<f64>, VarianceProfile<f64>)>,
    p_delta: &Result<f64>,
    test: &ScoreSet<f64>,
) -> Result<f64> {
    let (model, profile) = bundle.as_ref().map_err(Clone::clone)?;
    let p = p_delta.clone()?;
    let window = profile.window_for(p)?;
    Ok(SweepIntegrals::new(model, &window)?.estimate(test).clipped)
}

fn dys_from_train(
    model: &ClassConditionalModel<f64>,
    prior: f64,
    train: &LabeledScores<f64>,
    test_posteriors: Result<ProbabilitySet<f64>>,
) -> Result<f64> {
    let pos = nb_posteriors(model, prior, train.positives().sorted_scores())?;
    let neg = nb_posteriors(model, prior, train.negatives().sorted_scores())?;
    let pos_hist = Histogram::equal_width(&pos, DYS_BINS)?;
    let neg_hist = Histogram::equal_width(&neg, DYS_BINS)?;
    let test_hist = Histogram::equal_width(&test_posteriors?, DYS_BINS)?;
    Ok(dys(&pos_hist, &neg_hist, &test_hist, DYS_TOLERANCE)?.clipped)
}

/// Per-condition state for the known-model study: the true model doubles as
/// the rate curve, so windows, sweeps, and histograms are precomputed once.
struct KnownModelEngine {
    model: ClassConditionalModel<f64>,
    p_star: Result<f64>,
    sweep_optimal: Result<SweepIntegrals<f64>>,
    sweep_traditional: Result<SweepIntegrals<f64>>,
    histograms: Option<(Histogram<f64>, Histogram<f64>)>,
}

impl KnownModelEngine {
    fn build(
        condition: &StudyCondition,
        suite: &[SimMethod],
        assets: &mut StudyAssets,
    ) -> Result<Self> {
        let model = condition.true_model()?;
        let profile = VarianceProfile::new(&model);
        let p_star = profile.as_ref().map_err(Clone::clone).and_then(|prof| {
            optimal_pdelta_with_profile(prof, condition.n_test, 0.5).map(|s| s.p_delta_star)
        });
        let sweep_for = |p: &Result<f64>| -> Result<SweepIntegrals<f64>> {
            let prof = profile.as_ref().map_err(Clone::clone)?;
            let window = prof.window_for(p.clone()?)?;
            SweepIntegrals::new(&model, &window)
        };
        let sweep_optimal = sweep_for(&p_star);
        let sweep_traditional = sweep_for(&Ok(TRADITIONAL_PDELTA));
        let histograms = if suite.contains(&SimMethod::Dys) {
            Some(assets.known_model_histograms(condition, &model)?)
        } else {
            None
        };
        Ok(KnownModelEngine { model, p_star, sweep_optimal, sweep_traditional, histograms })
    }

    fn run(
        &self,
        condition: &StudyCondition,
        suite: &[SimMethod],
        rep: usize,
    ) -> Result<Vec<Result<f64>>> {
        let seed =
            derive_seed(condition.master_seed, &[condition.ordinal as u64, rep as u64, TEST_STREAM]);
        let test = generate_test_set(&self.model, condition.alpha_test, condition.n_test, seed)?;
        let rates = |theta: f64| (self.model.tpr(theta), self.model.fpr(theta));
        let mut posteriors = None;
        let outcomes = suite
            .iter()
            .map(|&method| match method {
                SimMethod::OptimalCs => {
                    self.sweep_optimal.as_ref().map_err(Clone::clone).map(|s| s.estimate(&test).clipped)
                }
                SimMethod::TraditionalCs => self
                    .sweep_traditional
                    .as_ref()
                    .map_err(Clone::clone)
                    .map(|s| s.estimate(&test).clipped),
                SimMethod::OptimalMs => self
                    .p_star
                    .clone()
                    .and_then(|p| median_sweep_with_rates(rates, &test, p))
                    .map(|e| e.clipped),
                SimMethod::TraditionalMs => {
                    median_sweep_with_rates(rates, &test, TRADITIONAL_PDELTA).map(|e| e.clipped)
                }
                SimMethod::Sld => posteriors_for(&self.model, 0.5, &test, &mut posteriors)
                    .and_then(|p| sld(0.5, &p, SLD_MAX_ITERATIONS, SLD_TOLERANCE))
                    .map(|e| e.clipped),
                SimMethod::Dys => {
                    let (pos_hist, neg_hist) =
                        self.histograms.as_ref().expect("histograms built when the suite has DyS");
                    posteriors_for(&self.model, 0.5, &test, &mut posteriors)
                        .and_then(|p| Histogram::equal_width(&p, DYS_BINS))
                        .and_then(|h| dys(pos_hist, neg_hist, &h, DYS_TOLERANCE))
                        .map(|e| e.clipped)
                }
                other => Err(Error::InvalidInput(format!(
                    "{} is not part of study {}",
                    other.label(),
                    condition.study
                ))),
            })
            .collect();
        Ok(outcomes)
    }
}

/// One replication of the refitted-model study: fresh training data, normal
/// MLE per class, cutoff optimization on the fitted model.
fn refit_normal_rep(
    model_true: &ClassConditionalModel<f64>,
    condition: &StudyCondition,
    suite: &[SimMethod],
    rep: usize,
) -> Result<Vec<Result<f64>>> {
    let alpha_train = condition.alpha_train.expect("validated for study 2");
    let n_train = condition.n_train.expect("validated for study 2");
    let train = generate_train_set(
        model_true,
        alpha_train,
        n_train,
        derive_seed(condition.master_seed, &[condition.ordinal as u64, rep as u64, TRAIN_STREAM]),
    )?;
    let test = generate_test_set(
        model_true,
        condition.alpha_test,
        condition.n_test,
        derive_seed(condition.master_seed, &[condition.ordinal as u64, rep as u64, TEST_STREAM]),
    )?;

    let wants = |pred: fn(SimMethod) -> bool| suite.iter().copied().any(pred);
    let fitted = if wants(|m| {
        matches!(m, SimMethod::OptimalCs | SimMethod::TraditionalCs | SimMethod::OptimalMs)
    }) {
        fit_model(&train, Family::Normal)
            .and_then(|m| VarianceProfile::new(&m).map(|prof| (m, prof)))
    } else {
        unused()
    };
    let p_star = if wants(|m| matches!(m, SimMethod::OptimalCs | SimMethod::OptimalMs)) {
        fitted.as_ref().map_err(Clone::clone).and_then(|(_, prof)| {
            optimal_pdelta_with_profile(prof, condition.n_test, 0.5).map(|s| s.p_delta_star)
        })
    } else {
        unused()
    };

    let mut posteriors = None;
    let outcomes = suite
        .iter()
        .map(|&method| match method {
            SimMethod::OptimalCs => sweep_from(&fitted, &p_star, &test),
            SimMethod::TraditionalCs => sweep_from(&fitted, &Ok(TRADITIONAL_PDELTA), &test),
            SimMethod::OptimalMs => p_star
                .clone()
                .and_then(|p| median_sweep(&train, &test, p))
                .map(|e| e.clipped),
            SimMethod::TraditionalMs => {
                median_sweep(&train, &test, TRADITIONAL_PDELTA).map(|e| e.clipped)
            }
            SimMethod::Sld => posteriors_for(model_true, alpha_train, &test, &mut posteriors)
                .and_then(|p| sld(alpha_train, &p, SLD_MAX_ITERATIONS, SLD_TOLERANCE))
                .map(|e| e.clipped),
            SimMethod::Dys => dys_from_train(
                model_true,
                alpha_train,
                &train,
                posteriors_for(model_true, alpha_train, &test, &mut posteriors),
            ),
            other => Err(Error::InvalidInput(format!(
                "{} is not part of study {}",
                other.label(),
                condition.study
            ))),
        })
        .collect();
    Ok(outcomes)
}

/// One replication of the misspecification study: skewed truth, one refit
/// per family, continuous sweep under both, median sweep and the baselines
/// alongside.
fn dual_family_rep(
    model_true: &ClassConditionalModel<f64>,
    condition: &StudyCondition,
    suite: &[SimMethod],
    rep: usize,
) -> Result<Vec<Result<f64>>> {
    let alpha_train = condition.alpha_train.expect("validated for study 3");
    let n_train = condition.n_train.expect("validated for study 3");
    let train = generate_train_set(
        model_true,
        alpha_train,
        n_train,
        derive_seed(condition.master_seed, &[condition.ordinal as u64, rep as u64, TRAIN_STREAM]),
    )?;
    let test = generate_test_set(
        model_true,
        condition.alpha_test,
        condition.n_test,
        derive_seed(condition.master_seed, &[condition.ordinal as u64, rep as u64, TEST_STREAM]),
    )?;

    let wants = |pred: fn(SimMethod) -> bool| suite.iter().copied().any(pred);
    let bundle = |family: Family| {
        fit_model(&train, family).and_then(|m| VarianceProfile::new(&m).map(|prof| (m, prof)))
    };
    let skew = if wants(|m| {
        matches!(
            m,
            SimMethod::OptimalCsSkew | SimMethod::TraditionalCsSkew | SimMethod::OptimalMs
        )
    }) {
        bundle(Family::SkewNormal)
    } else {
        unused()
    };
    let norm = if wants(|m| matches!(m, SimMethod::OptimalCsNorm | SimMethod::TraditionalCsNorm)) {
        bundle(Family::Normal)
    } else {
        unused()
    };
    let optimal_for = |b: &Result<(ClassConditionalModel<f64>, VarianceProfile<f64>)>| {
        b.as_ref().map_err(Clone::clone).and_then(|(_, prof)| {
            optimal_pdelta_with_profile(prof, condition.n_test, 0.5).map(|s| s.p_delta_star)
        })
    };
    // The median sweep reuses the skew fit's optimal cutoff, so it shares
    // the gating with the skew-family continuous sweep.
    let p_skew = if wants(|m| matches!(m, SimMethod::OptimalCsSkew | SimMethod::OptimalMs)) {
        optimal_for(&skew)
    } else {
        unused()
    };
    let p_norm =
        if wants(|m| matches!(m, SimMethod::OptimalCsNorm)) { optimal_for(&norm) } else { unused() };

    let mut posteriors = None;
    let outcomes = suite
        .iter()
        .map(|&method| match method {
            SimMethod::OptimalCsSkew => sweep_from(&skew, &p_skew, &test),
            SimMethod::TraditionalCsSkew => sweep_from(&skew, &Ok(TRADITIONAL_PDELTA), &test),
            SimMethod::OptimalCsNorm => sweep_from(&norm, &p_norm, &test),
            SimMethod::TraditionalCsNorm => sweep_from(&norm, &Ok(TRADITIONAL_PDELTA), &test),
            SimMethod::OptimalMs => p_skew
                .clone()
                .and_then(|p| median_sweep(&train, &test, p))
                .map(|e| e.clipped),
            SimMethod::TraditionalMs => {
                median_sweep(&train, &test, TRADITIONAL_PDELTA).map(|e| e.clipped)
            }
            SimMethod::Sld => posteriors_for(model_true, 0.5, &test, &mut posteriors)
                .and_then(|p| sld(alpha_train, &p, SLD_MAX_ITERATIONS, SLD_TOLERANCE))
                .map(|e| e.clipped),
            SimMethod::Dys => dys_from_train(
                model_true,
                0.5,
                &train,
                posteriors_for(model_true, 0.5, &test, &mut posteriors),
            ),
            other => Err(Error::InvalidInput(format!(
                "{} is not part of study {}",
                other.label(),
                condition.study
            ))),
        })
        .collect();
    Ok(outcomes)
}

fn validate_condition(condition: &StudyCondition, suite: &[SimMethod]) -> Result<()> {
    if suite.is_empty() {
        return Err(Error::EmptyInput("the quantifier suite is empty"));
    }
    let allowed = study_suite(condition.study)?;
    for method in suite {
        if !allowed.contains(method) {
            return Err(Error::InvalidInput(format!(
                "{} is not part of study {}",
                method.label(),
                condition.study
            )));
        }
    }
    if condition.replications == 0 {
        return Err(Error::InvalidInput("a condition needs at least one replication".into()));
    }
    if matches!(condition.study, 2 | 3)
        && (condition.n_train.is_none() || condition.alpha_train.is_none())
    {
        return Err(Error::InvalidInput(format!(
            "study {} conditions need a training size and prevalence",
            condition.study
        )));
    }
    Ok(())
}

/// Runs every replication of one condition and aggregates per quantifier.
/// Per-replication estimator errors are counted as failures and excluded
/// from the moments; infrastructure errors abort the run.
pub fn run_condition(condition: &StudyCondition, suite: &[SimMethod]) -> Result<ConditionResult> {
    run_condition_with_assets(condition, suite, &mut StudyAssets::default())
}

/// As [`run_condition`], sharing expensive cross-condition artifacts.
pub fn run_condition_with_assets(
    condition: &StudyCondition,
    suite: &[SimMethod],
    assets: &mut StudyAssets,
) -> Result<ConditionResult> {
    validate_condition(condition, suite)?;
    let known_engine = match condition.study {
        1 => Some(KnownModelEngine::build(condition, suite, assets)?),
        _ => None,
    };
    let model_true = condition.true_model()?;

    let mut estimates: Vec<Vec<f64>> = vec![Vec::new(); suite.len()];
    let mut failures = vec![0usize; suite.len()];
    for rep in 0..condition.replications {
        let outcomes = match condition.study {
            1 => known_engine.as_ref().expect("built for study 1").run(condition, suite, rep)?,
            2 => refit_normal_rep(&model_true, condition, suite, rep)?,
            3 => dual_family_rep(&model_true, condition, suite, rep)?,
            _ => unreachable!("validated study number"),
        };
        for (slot, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(estimate) => estimates[slot].push(estimate),
                Err(_) => failures[slot] += 1,
            }
        }
    }

    let summaries = suite
        .iter()
        .zip(estimates.iter().zip(&failures))
        .map(|(&method, (ests, &fails))| summarize(method, condition.alpha_test, ests, fails))
        .collect();
    Ok(ConditionResult { condition: *condition, summaries })
}

/// Runs a set of conditions sequentially with shared assets.
pub fn run_conditions(
    conditions: &[StudyCondition],
    suite: &[SimMethod],
) -> Result<Vec<ConditionResult>> {
    let mut assets = StudyAssets::default();
    conditions
        .iter()
        .map(|condition| run_condition_with_assets(condition, suite, &mut assets))
        .collect()
}

/// Runs a full study grid with its standard quantifier suite.
pub fn run_study(study: u8, scale: Scale, master_seed: u64) -> Result<Vec<ConditionResult>> {
    let suite = study_suite(study)?;
    run_conditions(&study_conditions(study, scale, master_seed)?, &suite)
}

/// Threshold policy for the fixed-threshold estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdChoice {
    Fixed(f64),
    /// Training score that maximizes the empirical rate gap.
    MaxGap,
    /// Training score whose empirical true positive rate is nearest 0.5.
    HalfTpr,
}

/// Cutoff policy for the sweep estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeltaChoice {
    /// Minimize the estimator variance under the fitted model.
    Optimal,
    /// The conventional cutoff of 0.25.
    Traditional,
    Fixed(f64),
}

/// Recipe for estimating prevalence from score files.
#[derive(Debug, Clone)]
pub struct EvaluationSuite {
    pub methods: Vec<Method>,
    /// Family fitted to the training scores for the model-based estimators.
    pub family: Family,
    /// Precomputed class distributions; skips the fit when present.
    pub model: Option<ClassConditionalModel<f64>>,
    pub p_delta: PdeltaChoice,
    pub threshold: ThresholdChoice,
    /// Assumed positive prevalence for the posterior transform and for the
    /// plug-in variance objective of the optimal cutoff.
    pub prior: f64,
    pub bins: usize,
}

impl Default for EvaluationSuite {
    fn default() -> Self {
        EvaluationSuite {
            methods: vec![Method::ContinuousSweep],
            family: Family::Normal,
            model: None,
            p_delta: PdeltaChoice::Optimal,
            threshold: ThresholdChoice::Fixed(0.5),
            prior: 0.5,
            bins: DYS_BINS,
        }
    }
}

/// One estimate of one method on one test set. The optional fields carry
/// the sweep diagnostics for display; the estimates CSV holds the first
/// four fields only.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub test_set_id: String,
    pub method: String,
    pub raw: f64,
    pub clipped: f64,
    /// Cutoff used by the sweep methods.
    pub p_delta: Option<f64>,
    /// Threshold window used by the continuous sweep.
    pub window: Option<(f64, f64)>,
    /// Admissible threshold count used by the median sweep.
    pub thresholds: Option<usize>,
    /// Theoretical estimator variance at the assumed prior (continuous
    /// sweep only).
    pub variance: Option<f64>,
}

/// Aggregated error of one method across test sets with known prevalences.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub mae: f64,
    pub rmse: f64,
    /// Relative absolute error, smoothed by flooring the true prevalence at
    /// half a count: |estimate - alpha| / max(alpha, 1 / (2 n)).
    pub rae: f64,
}

/// The outcome of a score-file evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// The fitted model, when any requested method needed one.
    pub model: Option<ClassConditionalModel<f64>>,
    pub estimates: Vec<EstimateRow>,
    /// Present when true prevalences were supplied.
    pub metrics: Option<Vec<MetricsRow>>,
}

/// Estimates prevalence on each test score file with every requested
/// method, optionally scoring against known true prevalences.
pub fn evaluate_score_files(
    train_path: &Path,
    test_paths: &[PathBuf],
    suite: &EvaluationSuite,
    truths: Option<&[(String, f64)]>,
) -> Result<Evaluation> {
    if suite.methods.is_empty() {
        return Err(Error::EmptyInput("no estimation methods requested"));
    }
    if test_paths.is_empty() {
        return Err(Error::EmptyInput("no test score files supplied"));
    }
    if !(suite.prior > 0.0 && suite.prior < 1.0) {
        return Err(Error::InvalidInput(format!(
            "the assumed prior must lie in (0, 1), got {}",
            suite.prior
        )));
    }
    let train = io::read_train_csv(train_path)?;

    let has = |m: Method| suite.methods.contains(&m);
    let needs_model = has(Method::ContinuousSweep) || has(Method::Sld) || has(Method::Dys);
    let needs_optimal = matches!(suite.p_delta, PdeltaChoice::Optimal)
        && (has(Method::ContinuousSweep) || has(Method::MedianSweep));
    let model = if needs_model || needs_optimal {
        Some(match suite.model {
            Some(model) => model,
            None => fit_model(&train, suite.family)?,
        })
    } else {
        None
    };
    let profile =
        if needs_optimal { Some(VarianceProfile::new(model.as_ref().expect("fitted"))?) } else { None };
    let theta = match suite.threshold {
        ThresholdChoice::Fixed(t) => t,
        ThresholdChoice::MaxGap => threshold_max(&train),
        ThresholdChoice::HalfTpr => threshold_t50(&train),
    };
    let train_hists = if has(Method::Dys) {
        let model = model.as_ref().expect("fitted");
        let pos = nb_posteriors(model, suite.prior, train.positives().sorted_scores())?;
        let neg = nb_posteriors(model, suite.prior, train.negatives().sorted_scores())?;
        Some((Histogram::equal_width(&pos, suite.bins)?, Histogram::equal_width(&neg, suite.bins)?))
    } else {
        None
    };

    let mut pstar_cache: HashMap<usize, f64> = HashMap::new();
    let mut resolve_pdelta = |n_test: usize| -> Result<f64> {
        match suite.p_delta {
            PdeltaChoice::Fixed(p) => Ok(p),
            PdeltaChoice::Traditional => Ok(TRADITIONAL_PDELTA),
            PdeltaChoice::Optimal => {
                if let Some(&p) = pstar_cache.get(&n_test) {
                    return Ok(p);
                }
                let prof = profile.as_ref().expect("profile built for the optimal cutoff");
                let p = optimal_pdelta_with_profile(prof, n_test, suite.prior)?.p_delta_star;
                pstar_cache.insert(n_test, p);
                Ok(p)
            }
        }
    };

    let mut estimates = Vec::with_capacity(test_paths.len() * suite.methods.len());
    let mut set_sizes: HashMap<String, usize> = HashMap::new();
    for path in test_paths {
        let id = path.file_stem().unwrap_or(path.as_os_str()).to_string_lossy().into_owned();
        let test = io::read_test_csv(path)?;
        set_sizes.insert(id.clone(), test.len());
        let mut posteriors = None;
        for &method in &suite.methods {
            let mut p_delta = None;
            let estimate = match method {
                Method::ClassifyCount => cc_estimate(&test, theta),
                Method::AdjustedCount => ac_estimate(&train, &test, theta)?,
                Method::MedianSweep => {
                    let p = resolve_pdelta(test.len())?;
                    p_delta = Some(p);
                    median_sweep(&train, &test, p)?
                }
                Method::ContinuousSweep => {
                    let model = model.as_ref().expect("fitted");
                    let p = resolve_pdelta(test.len())?;
                    p_delta = Some(p);
                    continuous_sweep(model, &test, p)?
                }
                Method::Sld => {
                    let model = model.as_ref().expect("fitted");
                    let post = posteriors_for(model, suite.prior, &test, &mut posteriors)?;
                    sld(train.prevalence(), &post, SLD_MAX_ITERATIONS, SLD_TOLERANCE)?
                }
                Method::Dys => {
                    let model = model.as_ref().expect("fitted");
                    let (pos_hist, neg_hist) = train_hists.as_ref().expect("built for DyS");
                    let post = posteriors_for(model, suite.prior, &test, &mut posteriors)?;
                    let test_hist = Histogram::equal_width(&post, suite.bins)?;
                    dys(pos_hist, neg_hist, &test_hist, DYS_TOLERANCE)?
                }
            };
            let window = estimate.diagnostics.window;
            let variance = match (method, &window) {
                (Method::ContinuousSweep, Some(w)) => Some(
                    cs_variance(model.as_ref().expect("fitted"), suite.prior, test.len(), w)?
                        .variance,
                ),
                _ => None,
            };
            estimates.push(EstimateRow {
                test_set_id: id.clone(),
                method: method.as_str().to_string(),
                raw: estimate.raw,
                clipped: estimate.clipped,
                p_delta,
                window: window.map(|w| (w.lower(), w.upper())),
                thresholds: estimate.diagnostics.thresholds_used,
                variance,
            });
        }
    }

    let metrics = truths
        .map(|truths| score_metrics(&suite.methods, &estimates, &set_sizes, truths))
        .transpose()?;

    Ok(Evaluation { model, estimates, metrics })
}

/// As [`evaluate_score_files`], but from fitted class distributions alone.
///
/// Covers the methods that need no raw training scores: classify-and-count,
/// adjusted count and the continuous sweep read their rates off the model,
/// and the posterior recalibration starts from the assumed prior. The median
/// sweep and the histogram matcher are refused since they work on the
/// training scores themselves.
pub fn evaluate_with_model(
    model: &ClassConditionalModel<f64>,
    test_paths: &[PathBuf],
    suite: &EvaluationSuite,
    truths: Option<&[(String, f64)]>,
) -> Result<Evaluation> {
    if suite.methods.is_empty() {
        return Err(Error::EmptyInput("no estimation methods requested"));
    }
    if test_paths.is_empty() {
        return Err(Error::EmptyInput("no test score files supplied"));
    }
    if !(suite.prior > 0.0 && suite.prior < 1.0) {
        return Err(Error::InvalidInput(format!(
            "the assumed prior must lie in (0, 1), got {}",
            suite.prior
        )));
    }
    for &method in &suite.methods {
        if matches!(method, Method::MedianSweep | Method::Dys) {
            return Err(Error::InvalidInput(format!(
                "method {:?} needs raw training scores, not just fitted distributions",
                method.as_str()
            )));
        }
    }
    let theta = match suite.threshold {
        ThresholdChoice::Fixed(t) => t,
        _ => {
            return Err(Error::InvalidInput(
                "threshold policies other than a fixed value need training scores".into(),
            ))
        }
    };

    let has = |m: Method| suite.methods.contains(&m);
    let profile = if matches!(suite.p_delta, PdeltaChoice::Optimal) && has(Method::ContinuousSweep)
    {
        Some(VarianceProfile::new(model)?)
    } else {
        None
    };
    let mut pstar_cache: HashMap<usize, f64> = HashMap::new();
    let mut resolve_pdelta = |n_test: usize| -> Result<f64> {
        match suite.p_delta {
            PdeltaChoice::Fixed(p) => Ok(p),
            PdeltaChoice::Traditional => Ok(TRADITIONAL_PDELTA),
            PdeltaChoice::Optimal => {
                if let Some(&p) = pstar_cache.get(&n_test) {
                    return Ok(p);
                }
                let prof = profile.as_ref().expect("profile built for the optimal cutoff");
                let p = optimal_pdelta_with_profile(prof, n_test, suite.prior)?.p_delta_star;
                pstar_cache.insert(n_test, p);
                Ok(p)
            }
        }
    };

    let mut estimates = Vec::with_capacity(test_paths.len() * suite.methods.len());
    let mut set_sizes: HashMap<String, usize> = HashMap::new();
    for path in test_paths {
        let id = path.file_stem().unwrap_or(path.as_os_str()).to_string_lossy().into_owned();
        let test = io::read_test_csv(path)?;
        set_sizes.insert(id.clone(), test.len());
        let mut posteriors = None;
        for &method in &suite.methods {
            let mut p_delta = None;
            let estimate = match method {
                Method::ClassifyCount => cc_estimate(&test, theta),
                Method::AdjustedCount => PrevalenceEstimate::new(
                    Method::AdjustedCount,
                    adjusted_count(classify_count(&test, theta), model.tpr(theta), model.fpr(theta))?,
                ),
                Method::ContinuousSweep => {
                    let p = resolve_pdelta(test.len())?;
                    p_delta = Some(p);
                    continuous_sweep(model, &test, p)?
                }
                Method::Sld => {
                    let post = posteriors_for(model, suite.prior, &test, &mut posteriors)?;
                    sld(suite.prior, &post, SLD_MAX_ITERATIONS, SLD_TOLERANCE)?
                }
                Method::MedianSweep | Method::Dys => unreachable!("rejected above"),
            };
            let window = estimate.diagnostics.window;
            let variance = match (method, &window) {
                (Method::ContinuousSweep, Some(w)) => {
                    Some(cs_variance(model, suite.prior, test.len(), w)?.variance)
                }
                _ => None,
            };
            estimates.push(EstimateRow {
                test_set_id: id.clone(),
                method: method.as_str().to_string(),
                raw: estimate.raw,
                clipped: estimate.clipped,
                p_delta,
                window: window.map(|w| (w.lower(), w.upper())),
                thresholds: estimate.diagnostics.thresholds_used,
                variance,
            });
        }
    }

    let metrics = truths
        .map(|truths| score_metrics(&suite.methods, &estimates, &set_sizes, truths))
        .transpose()?;

    Ok(Evaluation { model: Some(model.clone()), estimates, metrics })
}

/// Mean absolute, root-mean-square and smoothed relative absolute error of
/// each method against known prevalences.
fn score_metrics(
    methods: &[Method],
    estimates: &[EstimateRow],
    set_sizes: &HashMap<String, usize>,
    truths: &[(String, f64)],
) -> Result<Vec<MetricsRow>> {
    let lookup: HashMap<&str, f64> =
        truths.iter().map(|(id, alpha)| (id.as_str(), *alpha)).collect();
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let name = method.as_str();
        let mut abs_sum = 0.0;
        let mut sq_sum = 0.0;
        let mut rae_sum = 0.0;
        let mut count = 0.0;
        for row in estimates.iter().filter(|r| r.method == name) {
            let alpha = *lookup.get(row.test_set_id.as_str()).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no true prevalence given for test set {:?}",
                    row.test_set_id
                ))
            })?;
            let n = set_sizes[&row.test_set_id] as f64;
            let err = row.clipped - alpha;
            abs_sum += err.abs();
            sq_sum += err * err;
            rae_sum += err.abs() / alpha.max(1.0 / (2.0 * n));
            count += 1.0;
        }
        rows.push(MetricsRow {
            method: name.to_string(),
            mae: abs_sum / count,
            rmse: (sq_sum / count).sqrt(),
            rae: rae_sum / count,
        });
    }
    Ok(rows)
}
