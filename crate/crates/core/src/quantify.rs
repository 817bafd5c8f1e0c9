//! Prevalence estimators built on threshold classifiers: classify-and-count,
//! adjusted count, median sweep, and continuous sweep.

use crate::data::{EmpiricalCdf, LabeledScores, ScoreSet};
use crate::dist::ClassConditionalModel;
use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_max, integrate, Chebyshev};
use crate::real::Real;

/// Estimation method tags carried on results and selected on the command
/// line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClassifyCount,
    AdjustedCount,
    MedianSweep,
    ContinuousSweep,
    Sld,
    Dys,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClassifyCount => "cc",
            Method::AdjustedCount => "ac",
            Method::MedianSweep => "ms",
            Method::ContinuousSweep => "cs",
            Method::Sld => "sld",
            Method::Dys => "dys",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "cc" => Method::ClassifyCount,
            "ac" => Method::AdjustedCount,
            "ms" => Method::MedianSweep,
            "cs" => Method::ContinuousSweep,
            "sld" => Method::Sld,
            "dys" => Method::Dys,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown method {other:?}, expected one of cc, ac, ms, cs, sld, dys"
                )))
            }
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Threshold interval (lower, upper) with positive width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdWindow<F> {
    lower: F,
    upper: F,
}

impl<F: Real> ThresholdWindow<F> {
    pub fn new(lower: F, upper: F) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::NonFinite("window bounds"));
        }
        if lower >= upper {
            return Err(Error::InvalidInput(format!(
                "window lower bound {lower} must be below upper bound {upper}"
            )));
        }
        Ok(ThresholdWindow { lower, upper })
    }

    pub fn lower(&self) -> F {
        self.lower
    }

    pub fn upper(&self) -> F {
        self.upper
    }

    pub fn width(&self) -> F {
        self.upper - self.lower
    }
}

/// Auxiliary facts recorded next to an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<F> {
    /// Sweep window, for the continuous-sweep estimator.
    pub window: Option<ThresholdWindow<F>>,
    /// Number of admissible thresholds, for the median-sweep estimator.
    pub thresholds_used: Option<usize>,
    /// Whether an iterative method stopped before reaching its tolerance.
    pub reached_iteration_cap: bool,
}

impl<F> Default for Diagnostics<F> {
    fn default() -> Self {
        Diagnostics { window: None, thresholds_used: None, reached_iteration_cap: false }
    }
}

/// A prevalence estimate before and after clipping to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrevalenceEstimate<F> {
    pub method: Method,
    pub raw: F,
    pub clipped: F,
    pub diagnostics: Diagnostics<F>,
}

impl<F: Real> PrevalenceEstimate<F> {
    pub fn new(method: Method, raw: F) -> Self {
        PrevalenceEstimate {
            method,
            raw,
            clipped: clip_unit(raw),
            diagnostics: Diagnostics::default(),
        }
    }

    fn with_diagnostics(method: Method, raw: F, diagnostics: Diagnostics<F>) -> Self {
        PrevalenceEstimate { method, raw, clipped: clip_unit(raw), diagnostics }
    }
}

/// Clamps a raw estimate onto the unit interval.
pub fn clip_unit<F: Real>(x: F) -> F {
    x.max(F::zero()).min(F::one())
}

/// Classify-and-count: the fraction of test scores at or above the
/// threshold.
pub fn classify_count<F: Real>(test: &ScoreSet<F>, theta: F) -> F {
    let hits = test.scores().iter().filter(|&&s| s >= theta).count();
    F::count(hits) / F::count(test.len())
}

/// Fraction of positive training scores at or above the threshold.
pub fn empirical_tpr<F: Real>(train: &LabeledScores<F>, theta: F) -> F {
    train.positives().fraction_ge(theta)
}

/// Fraction of negative training scores at or above the threshold.
pub fn empirical_fpr<F: Real>(train: &LabeledScores<F>, theta: F) -> F {
    train.negatives().fraction_ge(theta)
}

/// Rate-corrected count (cc - fpr) / (tpr - fpr). The result may fall
/// outside [0, 1]; callers clip when they need a prevalence.
pub fn adjusted_count<F: Real>(cc: F, tpr: F, fpr: F) -> Result<F> {
    let gap = tpr - fpr;
    if gap.abs() < F::of(1e-12) {
        return Err(Error::DegenerateDenominator {
            context: "adjusted count needs tpr != fpr",
            value: gap.as_f64(),
        });
    }
    Ok((cc - fpr) / gap)
}

/// Classify-and-count as a packaged estimate.
pub fn cc_estimate<F: Real>(test: &ScoreSet<F>, theta: F) -> PrevalenceEstimate<F> {
    PrevalenceEstimate::new(Method::ClassifyCount, classify_count(test, theta))
}

/// Adjusted count with rates taken from the training sample.
pub fn ac_estimate<F: Real>(
    train: &LabeledScores<F>,
    test: &ScoreSet<F>,
    theta: F,
) -> Result<PrevalenceEstimate<F>> {
    let raw = adjusted_count(
        classify_count(test, theta),
        empirical_tpr(train, theta),
        empirical_fpr(train, theta),
    )?;
    Ok(PrevalenceEstimate::new(Method::AdjustedCount, raw))
}

/// Threshold maximizing the empirical rate gap tpr - fpr over the observed
/// training scores; ties resolve to the smallest score.
pub fn threshold_max<F: Real>(train: &LabeledScores<F>) -> F {
    select_threshold(train, |tpr, fpr| tpr - fpr)
}

/// Threshold whose empirical tpr is nearest one half; ties resolve to the
/// smallest score.
pub fn threshold_t50<F: Real>(train: &LabeledScores<F>) -> F {
    select_threshold(train, |tpr, _| -(tpr - F::of(0.5)).abs())
}

fn select_threshold<F: Real>(train: &LabeledScores<F>, score: impl Fn(F, F) -> F) -> F {
    let mut candidates = train.scores().to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite scores compare"));
    candidates.dedup();
    let mut best = candidates[0];
    let mut best_score = score(empirical_tpr(train, best), empirical_fpr(train, best));
    for &theta in &candidates[1..] {
        let s = score(empirical_tpr(train, theta), empirical_fpr(train, theta));
        if s > best_score {
            best = theta;
            best_score = s;
        }
    }
    best
}

/// Median sweep with rates estimated from the training sample.
///
/// Candidate thresholds are the deduplicated test scores whose rate gap
/// strictly exceeds `p_delta`; the estimate is the median of their adjusted
/// counts.
pub fn median_sweep<F: Real>(
    train: &LabeledScores<F>,
    test: &ScoreSet<F>,
    p_delta: F,
) -> Result<PrevalenceEstimate<F>> {
    median_sweep_with_rates(
        |theta| (empirical_tpr(train, theta), empirical_fpr(train, theta)),
        test,
        p_delta,
    )
}

/// Median sweep with caller-supplied rate curves (for instance the model
/// rates of fitted class distributions).
pub fn median_sweep_with_rates<F: Real>(
    rates: impl Fn(F) -> (F, F),
    test: &ScoreSet<F>,
    p_delta: F,
) -> Result<PrevalenceEstimate<F>> {
    if !p_delta.is_finite() || p_delta < F::zero() || p_delta >= F::one() {
        return Err(Error::InvalidInput(format!("p-delta must lie in [0, 1), got {p_delta}")));
    }
    let ecdf = test.ecdf();
    let mut candidates = ecdf.sorted_scores().to_vec();
    candidates.dedup();

    let mut counts = Vec::new();
    let mut max_gap = F::neg_infinity();
    for &theta in &candidates {
        let (tpr, fpr) = rates(theta);
        let gap = tpr - fpr;
        max_gap = max_gap.max(gap);
        if gap > p_delta {
            counts.push(adjusted_count(ecdf.fraction_ge(theta), tpr, fpr)?);
        }
    }
    if counts.is_empty() {
        return Err(Error::NoAdmissibleThresholds {
            p_delta: p_delta.as_f64(),
            max_gap: max_gap.as_f64(),
        });
    }
    counts.sort_by(|a, b| a.partial_cmp(b).expect("finite counts compare"));
    let k = counts.len();
    let median = if k % 2 == 1 {
        counts[k / 2]
    } else {
        (counts[k / 2 - 1] + counts[k / 2]) * F::of(0.5)
    };
    Ok(PrevalenceEstimate::with_diagnostics(
        Method::MedianSweep,
        median,
        Diagnostics { thresholds_used: Some(k), ..Diagnostics::default() },
    ))
}

/// Thresholds where the model rate gap equals `p_delta`, on either side of
/// the gap's peak.
///
/// The gap must be strictly unimodal above `p_delta`: a gap that never
/// reaches `p_delta` yields [`Error::WindowUndefined`], and an interior dip
/// below `p_delta` between the two crossings yields
/// [`Error::GapNotUnimodal`].
pub fn decision_boundaries<F: Real>(
    model: &ClassConditionalModel<F>,
    p_delta: F,
) -> Result<ThresholdWindow<F>> {
    if !p_delta.is_finite() || p_delta <= F::zero() || p_delta >= F::one() {
        return Err(Error::InvalidInput(format!("p-delta must lie in (0, 1), got {p_delta}")));
    }
    let (lo, hi) = model.threshold_bracket();
    let (peak, gap_peak) = golden_max(|t| model.rate_gap(t), lo, hi, F::of(1e-10));
    if gap_peak <= p_delta {
        return Err(Error::WindowUndefined {
            p_delta: p_delta.as_f64(),
            max_gap: gap_peak.as_f64(),
        });
    }

    let mut left_end = lo;
    let mut step = hi - lo;
    for _ in 0..40 {
        if model.rate_gap(left_end) < p_delta {
            break;
        }
        left_end = left_end - step;
        step = step + step;
    }
    let mut right_end = hi;
    let mut step = hi - lo;
    for _ in 0..40 {
        if model.rate_gap(right_end) < p_delta {
            break;
        }
        right_end = right_end + step;
        step = step + step;
    }

    let x_tol = F::of(1e-12);
    let lower = bisect(|t| model.rate_gap(t) - p_delta, left_end, peak, x_tol)?;
    let upper = bisect(|t| model.rate_gap(t) - p_delta, peak, right_end, x_tol)?;
    let window = ThresholdWindow::new(lower, upper)?;

    let probes = 64;
    for i in 1..probes {
        let t = lower + window.width() * F::count(i) / F::count(probes);
        if model.rate_gap(t) < p_delta - F::of(1e-9) {
            return Err(Error::GapNotUnimodal { p_delta: p_delta.as_f64() });
        }
    }
    Ok(window)
}

/// Splits the window at the distinct test scores strictly inside it. Each
/// returned segment carries the classify-and-count value, which is constant
/// on the segment's interior.
fn sweep_segments<F: Real>(
    ecdf: &EmpiricalCdf<F>,
    window: &ThresholdWindow<F>,
) -> Vec<(F, F, F)> {
    let mut cuts = Vec::with_capacity(ecdf.len() + 2);
    cuts.push(window.lower());
    for &s in ecdf.sorted_scores() {
        if s > window.lower() && s < window.upper() && *cuts.last().unwrap() != s {
            cuts.push(s);
        }
    }
    cuts.push(window.upper());
    cuts.windows(2)
        .map(|pair| {
            let mid = (pair[0] + pair[1]) * F::of(0.5);
            (pair[0], pair[1], ecdf.fraction_ge(mid))
        })
        .collect()
}

/// Continuous sweep: the average of the pointwise adjusted counts over the
/// window where the model rate gap exceeds `p_delta`.
pub fn continuous_sweep<F: Real>(
    model: &ClassConditionalModel<F>,
    test: &ScoreSet<F>,
    p_delta: F,
) -> Result<PrevalenceEstimate<F>> {
    let window = decision_boundaries(model, p_delta)?;
    continuous_sweep_in_window(model, test, &window)
}

/// Continuous sweep over a precomputed window.
pub fn continuous_sweep_in_window<F: Real>(
    model: &ClassConditionalModel<F>,
    test: &ScoreSet<F>,
    window: &ThresholdWindow<F>,
) -> Result<PrevalenceEstimate<F>> {
    continuous_sweep_with_tolerance(model, test, window, F::of(1e-10))
}

/// Continuous sweep with an explicit absolute tolerance for the integral
/// over the whole window.
pub fn continuous_sweep_with_tolerance<F: Real>(
    model: &ClassConditionalModel<F>,
    test: &ScoreSet<F>,
    window: &ThresholdWindow<F>,
    abs_tol: F,
) -> Result<PrevalenceEstimate<F>> {
    let ecdf = test.ecdf();
    let segments = sweep_segments(&ecdf, window);
    let seg_tol = abs_tol / F::count(segments.len());
    let mut total = F::zero();
    for (a, b, cc) in segments {
        let part = integrate(
            |t| {
                let fpr = model.fpr(t);
                (cc - fpr) / (model.tpr(t) - fpr)
            },
            a,
            b,
            seg_tol,
        )
        .map_err(|e| match e {
            Error::QuadratureDidNotConverge { error_estimate, .. } => {
                Error::QuadratureDidNotConverge {
                    context: format!("sweep segment [{a}, {b}]"),
                    error_estimate,
                }
            }
            other => other,
        })?;
        total += part;
    }
    let raw = total / window.width();
    Ok(PrevalenceEstimate::with_diagnostics(
        Method::ContinuousSweep,
        raw,
        Diagnostics { window: Some(*window), ..Diagnostics::default() },
    ))
}

/// Precomputed antiderivatives that turn the sweep integral into a sum over
/// segments, for repeated estimates under one model and window.
///
/// Writing the pointwise adjusted count as cc(t)/g(t) - fpr(t)/g(t) with
/// g = tpr - fpr, the integral over a segment where cc is constant needs
/// only the antiderivatives of 1/g and fpr/g, which are fitted once here by
/// Chebyshev approximation.
#[derive(Debug, Clone)]
pub struct SweepIntegrals<F> {
    window: ThresholdWindow<F>,
    inv_gap: Chebyshev<F>,
    fpr_over_gap: Chebyshev<F>,
}

impl<F: Real> SweepIntegrals<F> {
    pub fn new(model: &ClassConditionalModel<F>, window: &ThresholdWindow<F>) -> Result<Self> {
        let inv_gap = Chebyshev::fit(
            |t| F::one() / model.rate_gap(t),
            window.lower(),
            window.upper(),
            1e-13,
        )?
        .antiderivative();
        let fpr_over_gap = Chebyshev::fit(
            |t| model.fpr(t) / model.rate_gap(t),
            window.lower(),
            window.upper(),
            1e-13,
        )?
        .antiderivative();
        Ok(SweepIntegrals { window: *window, inv_gap, fpr_over_gap })
    }

    pub fn window(&self) -> &ThresholdWindow<F> {
        &self.window
    }

    pub fn estimate(&self, test: &ScoreSet<F>) -> PrevalenceEstimate<F> {
        let ecdf = test.ecdf();
        let mut total = F::zero();
        for (a, b, cc) in sweep_segments(&ecdf, &self.window) {
            total += cc * (self.inv_gap.eval(b) - self.inv_gap.eval(a))
                - (self.fpr_over_gap.eval(b) - self.fpr_over_gap.eval(a));
        }
        let raw = total / self.window.width();
        PrevalenceEstimate::with_diagnostics(
            Method::ContinuousSweep,
            raw,
            Diagnostics { window: Some(self.window), ..Diagnostics::default() },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionParams;

    fn unit_model() -> ClassConditionalModel<f64> {
        ClassConditionalModel::new(
            DistributionParams::normal(1.0, 1.0).unwrap(),
            DistributionParams::normal(0.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn classify_count_includes_threshold_ties() {
        let test = ScoreSet::new(vec![0.2, 0.5, 0.5, 0.9]).unwrap();
        assert_eq!(classify_count(&test, 0.5), 0.75);
        assert_eq!(classify_count(&test, 0.91), 0.0);
        assert_eq!(classify_count(&test, 0.0), 1.0);
    }

    #[test]
    fn adjusted_count_corrects_and_rejects_degenerate_rates() {
        assert_eq!(adjusted_count(0.5, 1.0, 0.0).unwrap(), 0.5);
        let ac: f64 = adjusted_count(0.4, 0.8, 0.2).unwrap();
        assert!((ac - (0.4 - 0.2) / 0.6).abs() < 1e-15);
        assert!(matches!(
            adjusted_count(0.5, 0.3, 0.3),
            Err(Error::DegenerateDenominator { .. })
        ));
        let outside = adjusted_count(0.9, 0.6, 0.55).unwrap();
        assert!(outside > 1.0, "adjusted counts may leave the unit interval");
    }

    #[test]
    fn max_gap_threshold_prefers_smallest_on_ties() {
        let train = LabeledScores::from_classes(&[1.0, 2.0, 3.0, 4.0], &[0.5, 1.5]).unwrap();
        // gap at 1.0: 1 - 0.5 = 0.5; at 2.0: 0.75 - 0 = 0.75; at 3.0: 0.5;
        // at 1.5: 0.75 - 0.5 = 0.25; at 4.0: 0.25; at 0.5: 0.
        assert_eq!(threshold_max(&train), 2.0);
    }

    #[test]
    fn t50_threshold_tracks_half_tpr() {
        let train = LabeledScores::from_classes(&[1.0, 2.0, 3.0, 4.0], &[0.5, 1.5]).unwrap();
        assert_eq!(threshold_t50(&train), 3.0);
    }

    #[test]
    fn median_sweep_matches_hand_computation() {
        let train =
            LabeledScores::from_classes(&[0.9, 0.8, 0.7], &[0.4, 0.3, 0.2]).unwrap();
        let test = ScoreSet::new(vec![0.85, 0.75, 0.35, 0.25]).unwrap();
        let est: PrevalenceEstimate<f64> = median_sweep(&train, &test, 0.25).unwrap();
        // Adjusted counts at the four candidates: 0.75, 0.75, 0.625, 1.0.
        assert!((est.raw - 0.75).abs() < 1e-15);
        assert_eq!(est.diagnostics.thresholds_used, Some(4));
        assert_eq!(est.clipped, est.raw);
    }

    #[test]
    fn median_sweep_reports_empty_admissible_sets() {
        let train =
            LabeledScores::from_classes(&[0.9, 0.8, 0.7], &[0.4, 0.3, 0.2]).unwrap();
        let test = ScoreSet::new(vec![0.85, 0.75, 0.35, 0.25]).unwrap();
        let err = median_sweep(&train, &test, 0.99).unwrap_err();
        match err {
            Error::NoAdmissibleThresholds { p_delta, max_gap } => {
                assert_eq!(p_delta, 0.99);
                // The best candidate among the test scores has gap 2/3.
                assert!((max_gap - 2.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn median_sweep_gap_test_is_strict() {
        let train = LabeledScores::from_classes(&[1.0, 2.0], &[1.5, -1.0]).unwrap();
        let test = ScoreSet::new(vec![1.0]).unwrap();
        // The only candidate sits at gap exactly 0.5; a p-delta of 0.5 must
        // exclude it because admissibility is a strict inequality.
        assert!(median_sweep(&train, &test, 0.5 - 1e-9).is_ok());
        let err = median_sweep(&train, &test, 0.5).unwrap_err();
        match err {
            Error::NoAdmissibleThresholds { p_delta, max_gap } => {
                assert_eq!(p_delta, 0.5);
                assert_eq!(max_gap, 0.5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn boundaries_match_the_symmetric_unit_model() {
        let window = decision_boundaries(&unit_model(), 0.25).unwrap();
        assert!((window.lower() - -0.462767545712733).abs() < 1e-9, "{}", window.lower());
        assert!((window.upper() - 1.462767545712733).abs() < 1e-9, "{}", window.upper());
        let model = unit_model();
        assert!((model.rate_gap(window.lower()) - 0.25).abs() < 1e-10);
        assert!((model.rate_gap(window.upper()) - 0.25).abs() < 1e-10);
    }

    #[test]
    fn boundaries_reject_unreachable_gaps() {
        let err = decision_boundaries(&unit_model(), 0.5).unwrap_err();
        match err {
            Error::WindowUndefined { p_delta, max_gap } => {
                assert_eq!(p_delta, 0.5);
                assert!((max_gap - 0.382924922548026).abs() < 1e-9);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(decision_boundaries(&unit_model(), 0.0).is_err());
        assert!(decision_boundaries(&unit_model(), 1.0).is_err());
    }

    #[test]
    fn sweep_over_empty_window_is_a_single_segment() {
        let model = unit_model();
        let window = ThresholdWindow::new(0.2, 0.8).unwrap();
        let test = ScoreSet::new(vec![-1.0, -0.5, 1.5, 2.0]).unwrap();
        let est = continuous_sweep_in_window(&model, &test, &window).unwrap();
        let cc = classify_count(&test, window.lower());
        assert_eq!(cc, 0.5);
        // With constant cc the estimate is the window average of the
        // pointwise adjusted count; check against a dense Riemann sum.
        let n = 200_000;
        let mut acc = 0.0;
        for i in 0..n {
            let t = window.lower() + (i as f64 + 0.5) / n as f64 * window.width();
            acc += (cc - model.fpr(t)) / (model.tpr(t) - model.fpr(t));
        }
        let want = acc / n as f64;
        assert!((est.raw - want).abs() < 1e-8, "got {} want {want}", est.raw);
        assert_eq!(est.diagnostics.window, Some(window));
    }

    #[test]
    fn sweep_estimate_is_permutation_invariant() {
        let model = unit_model();
        let window = decision_boundaries(&model, 0.25).unwrap();
        let scores = DistributionParams::normal(0.5, 1.2).unwrap().sample(400, 21).unwrap();
        let mut reversed = scores.clone();
        reversed.reverse();
        let a = continuous_sweep_in_window(&model, &ScoreSet::new(scores).unwrap(), &window)
            .unwrap();
        let b = continuous_sweep_in_window(&model, &ScoreSet::new(reversed).unwrap(), &window)
            .unwrap();
        assert!((a.raw - b.raw).abs() < 1e-9);
    }

    #[test]
    fn tighter_tolerance_stays_within_the_coarser_budget() {
        let model = unit_model();
        let window = decision_boundaries(&model, 0.25).unwrap();
        let scores = DistributionParams::normal(0.4, 1.0).unwrap().sample(300, 8).unwrap();
        let test = ScoreSet::new(scores).unwrap();
        let coarse = continuous_sweep_with_tolerance(&model, &test, &window, 1e-8).unwrap();
        let fine = continuous_sweep_with_tolerance(&model, &test, &window, 1e-9).unwrap();
        assert!((coarse.raw - fine.raw).abs() < 1e-8);
    }

    #[test]
    fn fast_sweep_route_agrees_with_direct_quadrature() {
        let model = unit_model();
        let window = decision_boundaries(&model, 0.25).unwrap();
        let fast = SweepIntegrals::new(&model, &window).unwrap();
        for seed in 0..5u64 {
            let scores =
                DistributionParams::normal(0.5, 1.1).unwrap().sample(250, seed).unwrap();
            let test = ScoreSet::new(scores).unwrap();
            let direct = continuous_sweep_in_window(&model, &test, &window).unwrap();
            let quick = fast.estimate(&test);
            assert!(
                (direct.raw - quick.raw).abs() < 1e-9,
                "seed {seed}: {} vs {}",
                direct.raw,
                quick.raw
            );
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            Method::ClassifyCount,
            Method::AdjustedCount,
            Method::MedianSweep,
            Method::ContinuousSweep,
            Method::Sld,
            Method::Dys,
        ] {
            assert_eq!(Method::parse(m.as_str()).unwrap(), m);
        }
        assert!(Method::parse("pcc").is_err());
    }
}
