//! Bias and variance theory for the counting estimators, and the
//! variance-minimizing choice of the rate-gap cutoff.

use crate::dist::ClassConditionalModel;
use crate::error::{Error, Result};
use crate::numerics::{bisect, gauss_legendre, golden_max, golden_min, Chebyshev};
use crate::quantify::{decision_boundaries, ThresholdWindow};
use crate::real::Real;

/// Expected classify-and-count value at true prevalence `alpha` for a
/// classifier with the given rates.
pub fn cc_expectation<F: Real>(alpha: F, tpr: F, fpr: F) -> F {
    alpha * tpr + (F::one() - alpha) * fpr
}

/// Bias of classify-and-count: expectation minus the true prevalence.
pub fn cc_bias<F: Real>(alpha: F, tpr: F, fpr: F) -> F {
    cc_expectation(alpha, tpr, fpr) - alpha
}

/// Variance of classify-and-count over test sets of size `n_test`.
///
/// Only the Bernoulli terms p(1-p) of the per-class hit rates enter, so
/// passing a hit rate or its complement gives the same value.
pub fn cc_variance<F: Real>(alpha: F, tpr: F, fpr: F, n_test: usize) -> Result<F> {
    if n_test == 0 {
        return Err(Error::InvalidInput("cc variance needs a test set size of at least 1".into()));
    }
    let one = F::one();
    let num = alpha * tpr * (one - tpr) + (one - alpha) * fpr * (one - fpr);
    Ok(num / F::count(n_test))
}

/// Variance of the adjusted count built from per-class hit rates `p_plus`
/// (positives called positive) and `p_minus` (negatives called negative).
pub fn ac_variance<F: Real>(alpha: F, p_plus: F, p_minus: F, n_test: usize) -> Result<F> {
    if n_test == 0 {
        return Err(Error::InvalidInput("ac variance needs a test set size of at least 1".into()));
    }
    let one = F::one();
    let denom_root = p_plus + p_minus - one;
    if denom_root.abs() < F::of(1e-12) {
        return Err(Error::DegenerateDenominator {
            context: "adjusted-count variance needs hit rates summing away from 1",
            value: denom_root.as_f64(),
        });
    }
    let num = alpha * p_plus * (one - p_plus) + (one - alpha) * p_minus * (one - p_minus);
    Ok(num / (F::count(n_test) * denom_root * denom_root))
}

/// Covariance of the classify-and-count estimates at two thresholds
/// `x >= y` under the model, at prevalence `alpha` and test size `n_test`.
pub fn cov_cc<F: Real>(
    model: &ClassConditionalModel<F>,
    alpha: F,
    n_test: usize,
    x: F,
    y: F,
) -> Result<F> {
    if n_test == 0 {
        return Err(Error::InvalidInput("cc covariance needs a test set size of at least 1".into()));
    }
    if x < y {
        return Err(Error::InvalidInput(format!(
            "cc covariance takes ordered thresholds, got x = {x} below y = {y}"
        )));
    }
    Ok(scaled_cov_kernel(model, alpha, x, y) / F::count(n_test))
}

/// n times the covariance of CC at thresholds x >= y: survival-form
/// kernel alpha F+(x)(1-F+(y)) + (1-alpha) F-(x)(1-F-(y)).
fn scaled_cov_kernel<F: Real>(model: &ClassConditionalModel<F>, alpha: F, x: F, y: F) -> F {
    let one = F::one();
    alpha * model.tpr(x) * (one - model.tpr(y))
        + (one - alpha) * model.fpr(x) * (one - model.fpr(y))
}

/// Result of a continuous-sweep variance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport<F> {
    pub variance: F,
    pub window: ThresholdWindow<F>,
    pub alpha_plugin: F,
    pub n_test: usize,
    /// Relative agreement reached between the last two quadrature orders.
    pub quadrature_tolerance: f64,
}

const LADDER_ORDERS: [usize; 6] = [48, 64, 96, 128, 192, 256];
const LADDER_REL_TOL: f64 = 1e-8;

/// Variance of continuous sweep over the window, by tensor Gauss-Legendre
/// quadrature of the covariance double integral over the ordered-threshold
/// triangle, refined until two successive orders agree to 1e-8 relative.
pub fn cs_variance<F: Real>(
    model: &ClassConditionalModel<F>,
    alpha: F,
    n_test: usize,
    window: &ThresholdWindow<F>,
) -> Result<VarianceReport<F>> {
    validate_alpha(alpha)?;
    if n_test == 0 {
        return Err(Error::InvalidInput("sweep variance needs a test set size of at least 1".into()));
    }
    let mut prev: Option<F> = None;
    let mut last_diff = f64::INFINITY;
    for order in LADDER_ORDERS {
        let val = triangle_quadrature(model, alpha, window, order);
        if let Some(p) = prev {
            last_diff = (val - p).abs().as_f64();
            if last_diff <= LADDER_REL_TOL * val.abs().as_f64() {
                let scale = F::of(2.0) / (F::count(n_test) * window.width() * window.width());
                return Ok(VarianceReport {
                    variance: val * scale,
                    window: *window,
                    alpha_plugin: alpha,
                    n_test,
                    quadrature_tolerance: LADDER_REL_TOL,
                });
            }
        }
        prev = Some(val);
    }
    Err(Error::QuadratureDidNotConverge {
        context: format!(
            "sweep variance double integral over [{}, {}]",
            window.lower(),
            window.upper()
        ),
        error_estimate: last_diff,
    })
}

/// Integral of kernel / (g(x) g(y)) over theta_l <= y <= x <= theta_r, with
/// the outer variable y and the inner segment [y, theta_r] both mapped onto
/// Gauss-Legendre nodes of the given order.
fn triangle_quadrature<F: Real>(
    model: &ClassConditionalModel<F>,
    alpha: F,
    window: &ThresholdWindow<F>,
    order: usize,
) -> F {
    let (nodes, weights) = gauss_legendre::<F>(order);
    let half = F::of(0.5);
    let y_mid = (window.lower() + window.upper()) * half;
    let y_half = window.width() * half;
    let mut total = F::zero();
    for (&u, &wu) in nodes.iter().zip(&weights) {
        let y = y_mid + y_half * u;
        let gap_y = model.rate_gap(y);
        let x_half = (window.upper() - y) * half;
        let x_mid = (y + window.upper()) * half;
        let mut inner = F::zero();
        for (&v, &wv) in nodes.iter().zip(&weights) {
            let x = x_mid + x_half * v;
            inner += wv * scaled_cov_kernel(model, alpha, x, y) / model.rate_gap(x);
        }
        total += wu * inner * x_half / gap_y;
    }
    total * y_half
}

/// Reusable machinery for evaluating the sweep variance at many cutoffs
/// under one model.
///
/// The double integral separates: the inner integrals of F/g are fitted
/// once as Chebyshev antiderivatives over the widest window the optimizer
/// will visit, leaving a single smooth outer integral per evaluation.
#[derive(Debug, Clone)]
pub struct VarianceProfile<F> {
    model: ClassConditionalModel<F>,
    peak: F,
    max_gap: F,
    support: ThresholdWindow<F>,
    int_pos: Chebyshev<F>,
    int_neg: Chebyshev<F>,
    nodes: Vec<F>,
    weights: Vec<F>,
}

/// Fraction of the maximum gap kept clear at both ends of the cutoff range.
const GAP_MARGIN: f64 = 0.01;
const OUTER_ORDER: usize = 96;

impl<F: Real> VarianceProfile<F> {
    pub fn new(model: &ClassConditionalModel<F>) -> Result<Self> {
        let (lo, hi) = model.threshold_bracket();
        let (peak, max_gap) = golden_max(|t| model.rate_gap(t), lo, hi, F::of(1e-10));
        if max_gap <= F::zero() {
            return Err(Error::WindowUndefined { p_delta: 0.0, max_gap: max_gap.as_f64() });
        }
        let support = decision_boundaries(model, F::of(GAP_MARGIN) * max_gap)?;
        let int_pos = Chebyshev::fit(
            |t| model.tpr(t) / model.rate_gap(t),
            support.lower(),
            support.upper(),
            1e-12,
        )?
        .antiderivative();
        let int_neg = Chebyshev::fit(
            |t| model.fpr(t) / model.rate_gap(t),
            support.lower(),
            support.upper(),
            1e-12,
        )?
        .antiderivative();
        let (nodes, weights) = gauss_legendre::<F>(OUTER_ORDER);
        Ok(VarianceProfile {
            model: *model,
            peak,
            max_gap,
            support,
            int_pos,
            int_neg,
            nodes,
            weights,
        })
    }

    pub fn max_gap(&self) -> F {
        self.max_gap
    }

    pub fn peak(&self) -> F {
        self.peak
    }

    /// Widest window the profile covers, at a cutoff of 1% of the maximum
    /// gap.
    pub fn support(&self) -> &ThresholdWindow<F> {
        &self.support
    }

    /// Window boundaries for a cutoff within the profiled range.
    ///
    /// A cutoff within rounding distance of the gap value at a support edge
    /// (the support itself was found by bisection) clamps onto that edge
    /// instead of failing the sign-change bracket.
    pub fn window_for(&self, p_delta: F) -> Result<ThresholdWindow<F>> {
        if p_delta >= self.max_gap {
            return Err(Error::WindowUndefined {
                p_delta: p_delta.as_f64(),
                max_gap: self.max_gap.as_f64(),
            });
        }
        let edge_tol = F::of(1e-9) * self.max_gap;
        let floor_lower = self.model.rate_gap(self.support.lower());
        let floor_upper = self.model.rate_gap(self.support.upper());
        if p_delta < floor_lower.min(floor_upper) - edge_tol {
            return Err(Error::InvalidInput(format!(
                "cutoff {p_delta} is below the profiled range starting at {}",
                floor_lower.min(floor_upper)
            )));
        }
        let x_tol = F::of(1e-12);
        let lower = if p_delta <= floor_lower {
            self.support.lower()
        } else {
            bisect(|t| self.model.rate_gap(t) - p_delta, self.support.lower(), self.peak, x_tol)?
        };
        let upper = if p_delta <= floor_upper {
            self.support.upper()
        } else {
            bisect(|t| self.model.rate_gap(t) - p_delta, self.peak, self.support.upper(), x_tol)?
        };
        ThresholdWindow::new(lower, upper)
    }

    /// Sweep variance over a window that lies within the profiled support.
    pub fn variance(&self, window: &ThresholdWindow<F>, alpha: F, n_test: usize) -> Result<F> {
        validate_alpha(alpha)?;
        if n_test == 0 {
            return Err(Error::InvalidInput(
                "sweep variance needs a test set size of at least 1".into(),
            ));
        }
        let slack = F::of(1e-9) * self.support.width();
        if window.lower() < self.support.lower() - slack
            || window.upper() > self.support.upper() + slack
        {
            return Err(Error::InvalidInput(
                "window extends beyond the profiled support".into(),
            ));
        }
        let one = F::one();
        let half = F::of(0.5);
        let mid = (window.lower() + window.upper()) * half;
        let half_width = window.width() * half;
        let top_pos = self.int_pos.eval(window.upper());
        let top_neg = self.int_neg.eval(window.upper());
        let mut total = F::zero();
        for (&u, &w) in self.nodes.iter().zip(&self.weights) {
            let y = mid + half_width * u;
            let tail_pos = top_pos - self.int_pos.eval(y);
            let tail_neg = top_neg - self.int_neg.eval(y);
            let weighted = alpha * (one - self.model.tpr(y)) * tail_pos
                + (one - alpha) * (one - self.model.fpr(y)) * tail_neg;
            total += w * weighted / self.model.rate_gap(y);
        }
        total = total * half_width;
        Ok(total * F::of(2.0) / (F::count(n_test) * window.width() * window.width()))
    }

    /// Sweep variance at a cutoff, combining [`Self::window_for`] and
    /// [`Self::variance`].
    pub fn variance_at(&self, p_delta: F, alpha: F, n_test: usize) -> Result<F> {
        let window = self.window_for(p_delta)?;
        self.variance(&window, alpha, n_test)
    }
}

fn validate_alpha<F: Real>(alpha: F) -> Result<()> {
    if !(alpha >= F::zero() && alpha <= F::one()) {
        return Err(Error::InvalidInput(format!("prevalence must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// The variance-minimizing cutoff and the variance attained there.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeltaSolution<F> {
    pub p_delta_star: F,
    pub variance_at_star: F,
    /// Sampled variance curve, present when the search fell back to a grid
    /// scan.
    pub variance_curve: Option<Vec<(F, F)>>,
}

const PDELTA_TOL: f64 = 1e-4;

/// Minimizes the sweep variance over cutoffs in [1%, 99%] of the maximum
/// gap, by golden-section search after a unimodality prescan; a rough
/// prescan falls back to a 101-point grid before sectioning.
pub fn optimal_pdelta<F: Real>(
    model: &ClassConditionalModel<F>,
    n_test: usize,
    alpha_plugin: F,
) -> Result<PdeltaSolution<F>> {
    let profile = VarianceProfile::new(model)?;
    optimal_pdelta_with_profile(&profile, n_test, alpha_plugin)
}

/// As [`optimal_pdelta`], reusing an already-built profile.
pub fn optimal_pdelta_with_profile<F: Real>(
    profile: &VarianceProfile<F>,
    n_test: usize,
    alpha_plugin: F,
) -> Result<PdeltaSolution<F>> {
    validate_alpha(alpha_plugin)?;
    if n_test == 0 {
        return Err(Error::InvalidInput(
            "cutoff optimization needs a test set size of at least 1".into(),
        ));
    }
    let lo = profile.max_gap() * F::of(GAP_MARGIN);
    let hi = profile.max_gap() * F::of(1.0 - GAP_MARGIN);
    let objective = |p: F| match profile.variance_at(p, alpha_plugin, n_test) {
        Ok(v) => v,
        Err(_) => F::infinity(),
    };

    let coarse = sample_curve(&objective, lo, hi, 9);
    let (bracket, curve) = if let Some(m) = unimodal_argmin(&coarse) {
        ((coarse[m.saturating_sub(1)].0, coarse[(m + 1).min(coarse.len() - 1)].0), None)
    } else {
        let grid = sample_curve(&objective, lo, hi, 101);
        let m = match finite_argmin(&grid) {
            Some(m) => m,
            None => {
                return Err(Error::OptimizationFailed {
                    context: "sweep variance was not finite anywhere on the cutoff grid".into(),
                    curve: curve_f64(&grid),
                })
            }
        };
        (
            (grid[m.saturating_sub(1)].0, grid[(m + 1).min(grid.len() - 1)].0),
            Some(grid),
        )
    };

    let (p_star, _) = golden_min(&objective, bracket.0, bracket.1, F::of(PDELTA_TOL));
    let variance_at_star = profile.variance_at(p_star, alpha_plugin, n_test)?;
    if !variance_at_star.is_finite() {
        let grid = curve.unwrap_or_else(|| sample_curve(&objective, lo, hi, 101));
        return Err(Error::OptimizationFailed {
            context: format!("sweep variance is not finite at the sectioned cutoff {p_star}"),
            curve: curve_f64(&grid),
        });
    }
    Ok(PdeltaSolution { p_delta_star: p_star, variance_at_star, variance_curve: curve })
}

/// Samples the profiled sweep variance on an even cutoff grid, e.g. for
/// plotting the curve behind the optimizer's choice.
pub fn pdelta_variance_curve<F: Real>(
    model: &ClassConditionalModel<F>,
    n_test: usize,
    alpha_plugin: F,
    points: usize,
) -> Result<Vec<(F, F)>> {
    validate_alpha(alpha_plugin)?;
    if points < 2 {
        return Err(Error::InvalidInput("a curve needs at least 2 points".into()));
    }
    let profile = VarianceProfile::new(model)?;
    let lo = profile.max_gap() * F::of(GAP_MARGIN);
    let hi = profile.max_gap() * F::of(1.0 - GAP_MARGIN);
    let objective = |p: F| match profile.variance_at(p, alpha_plugin, n_test) {
        Ok(v) => v,
        Err(_) => F::infinity(),
    };
    Ok(sample_curve(&objective, lo, hi, points))
}

fn sample_curve<F: Real>(objective: &impl Fn(F) -> F, lo: F, hi: F, points: usize) -> Vec<(F, F)> {
    (0..points)
        .map(|i| {
            let p = lo + (hi - lo) * F::count(i) / F::count(points - 1);
            (p, objective(p))
        })
        .collect()
}

fn finite_argmin<F: Real>(curve: &[(F, F)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(_, v)) in curve.iter().enumerate() {
        if v.is_finite() && best.map_or(true, |b| v < curve[b].1) {
            best = Some(i);
        }
    }
    best
}

/// Index of the minimum if the sampled values descend to it and ascend
/// after it (within a small relative slack); None otherwise.
fn unimodal_argmin<F: Real>(curve: &[(F, F)]) -> Option<usize> {
    let m = finite_argmin(curve)?;
    let slack = curve[m].1.abs() * F::of(1e-9);
    for k in 0..curve.len() - 1 {
        let (a, b) = (curve[k].1, curve[k + 1].1);
        if !a.is_finite() || !b.is_finite() {
            return None;
        }
        if k < m && b > a + slack {
            return None;
        }
        if k >= m && b < a - slack {
            return None;
        }
    }
    Some(m)
}

fn curve_f64<F: Real>(curve: &[(F, F)]) -> Vec<(f64, f64)> {
    curve.iter().map(|&(p, v)| (p.as_f64(), v.as_f64())).collect()
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

    fn lequa_model() -> ClassConditionalModel<f64> {
        ClassConditionalModel::new(
            DistributionParams::skew_normal(1.0309, 1.4119, 1.0068).unwrap(),
            DistributionParams::skew_normal(0.8425, 1.6677, -1.7983).unwrap(),
        )
    }

    #[test]
    fn expectation_and_bias_match_the_motivating_rates() {
        assert!((cc_expectation(0.1f64, 0.98, 0.03) - 0.125).abs() < 1e-12);
        assert!((cc_bias(0.1f64, 0.98, 0.03) - 0.025).abs() < 1e-12);
        assert_eq!(cc_expectation(0.0f64, 0.9, 0.2), 0.2);
        assert_eq!(cc_expectation(1.0f64, 0.9, 0.2), 0.9);
        assert_eq!(cc_bias(1.0f64, 1.0, 0.0), 0.0);
    }

    #[test]
    fn bias_vanishes_at_the_neutral_prevalence() {
        for (tpr, fpr) in [(0.8f64, 0.1), (0.7, 0.3), (0.99, 0.5)] {
            let neutral = fpr / (1.0 - tpr + fpr);
            assert!(cc_bias(neutral, tpr, fpr).abs() < 1e-15);
        }
    }

    #[test]
    fn cc_variance_scales_inversely_with_test_size() {
        assert_eq!(cc_variance(0.3f64, 1.0, 1.0, 50).unwrap(), 0.0);
        let v100: f64 = cc_variance(0.5, 0.8, 0.8, 100).unwrap();
        assert!((v100 - 0.0016).abs() < 1e-18);
        let v200 = cc_variance(0.5, 0.8, 0.8, 200).unwrap();
        assert_eq!(v200 * 2.0, v100);
        assert!(cc_variance(0.5f64, 0.8, 0.8, 0).is_err());
    }

    #[test]
    fn ac_variance_matches_arithmetic_and_flags_the_pole() {
        let v: f64 = ac_variance(0.1, 0.98, 0.97, 1000).unwrap();
        assert!((v - 3.119e-5).abs() < 1e-8);
        assert_eq!(ac_variance(0.4, 1.0, 1.0, 10).unwrap(), 0.0);
        assert!(matches!(
            ac_variance(0.5, 0.6, 0.4, 100),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn cc_covariance_has_the_frozen_reference_value() {
        let model = unit_model();
        let got = cov_cc(&model, 0.5, 1000, 1.0, 0.0).unwrap();
        assert!(
            (got - 7.932762696572854e-05).abs() < 1e-18,
            "covariance at (1, 0): {got:e}"
        );
        assert!(cov_cc(&model, 0.5, 1000, 0.0, 1.0).is_err());
        assert!(cov_cc(&model, 0.5, 1000, 40.0, 39.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cc_covariance_diagonal_is_the_cc_variance() {
        let model = unit_model();
        for x in [-0.5, 0.3, 1.2] {
            let diag = cov_cc(&model, 0.4, 500, x, x).unwrap();
            let var = cc_variance(0.4, model.tpr(x), model.fpr(x), 500).unwrap();
            assert!((diag - var).abs() < 1e-18, "diagonal at {x}");
        }
    }

    #[test]
    fn sweep_variance_has_the_frozen_reference_value() {
        let model = unit_model();
        let window = decision_boundaries(&model, 0.25).unwrap();
        let report = cs_variance(&model, 0.5, 500, &window).unwrap();
        let got = report.variance;
        assert!(
            ((got - 2.058466338971e-03) / got).abs() < 1e-9,
            "sweep variance: {got:e}"
        );
        assert_eq!(report.n_test, 500);
        assert!(got > 0.0);
    }

    #[test]
    fn sweep_variance_scales_inversely_with_test_size() {
        let model = unit_model();
        let window = decision_boundaries(&model, 0.25).unwrap();
        let v100 = cs_variance(&model, 0.5, 100, &window).unwrap().variance;
        let v1000 = cs_variance(&model, 0.5, 1000, &window).unwrap().variance;
        assert!(((v100 / 10.0 - v1000) / v1000).abs() < 1e-15);
    }

    #[test]
    fn narrow_window_variance_approaches_the_adjusted_count_variance() {
        let model = unit_model();
        let h = 1e-5;
        let window = ThresholdWindow::new(0.5 - h, 0.5 + h).unwrap();
        let sweep = cs_variance(&model, 0.5, 1000, &window).unwrap().variance;
        let fixed = ac_variance(0.5, model.tpr(0.5), 1.0 - model.fpr(0.5), 1000).unwrap();
        // The limit converges linearly in the half-width h, so at h = 1e-5
        // agreement to 1e-4 relative demonstrates it.
        assert!(
            ((sweep - fixed) / fixed).abs() < 1e-4,
            "degenerate window: {sweep:e} vs {fixed:e}"
        );
    }

    #[test]
    fn triangle_quadrature_is_order_of_integration_invariant() {
        let model = unit_model();
        let windows = [
            decision_boundaries(&model, 0.25).unwrap(),
            decision_boundaries(&model, 0.1).unwrap(),
            ThresholdWindow::new(-0.2, 0.9).unwrap(),
        ];
        for window in windows {
            let direct: f64 = triangle_quadrature(&model, 0.4, &window, 160);
            // Same triangle with x as the outer variable and y in
            // [theta_l, x] inside.
            let (nodes, weights) = gauss_legendre::<f64>(160);
            let mid = (window.lower() + window.upper()) * 0.5;
            let half = window.width() * 0.5;
            let mut swapped = 0.0;
            for (&u, &wu) in nodes.iter().zip(&weights) {
                let x = mid + half * u;
                let inner_half = (x - window.lower()) * 0.5;
                let inner_mid = (window.lower() + x) * 0.5;
                let mut inner = 0.0;
                for (&v, &wv) in nodes.iter().zip(&weights) {
                    let y = inner_mid + inner_half * v;
                    inner += wv * scaled_cov_kernel(&model, 0.4, x, y) / model.rate_gap(y);
                }
                swapped += wu * inner * inner_half / model.rate_gap(x);
            }
            swapped *= half;
            assert!(
                ((direct - swapped) / direct).abs() < 1e-9,
                "window [{}, {}]: {direct:e} vs {swapped:e}",
                window.lower(),
                window.upper()
            );
        }
    }

    #[test]
    fn profiled_variance_agrees_with_the_triangle_ladder() {
        let model = unit_model();
        let profile = VarianceProfile::new(&model).unwrap();
        for p_delta in [0.05, 0.1, 0.25, 0.35] {
            let window = decision_boundaries(&model, p_delta).unwrap();
            let ladder = cs_variance(&model, 0.5, 1000, &window).unwrap().variance;
            let quick = profile.variance(&window, 0.5, 1000).unwrap();
            assert!(
                ((ladder - quick) / ladder).abs() < 1e-7,
                "cutoff {p_delta}: {ladder:e} vs {quick:e}"
            );
        }
    }

    #[test]
    fn profile_window_matches_the_direct_boundaries() {
        let model = unit_model();
        let profile = VarianceProfile::new(&model).unwrap();
        let direct = decision_boundaries(&model, 0.25).unwrap();
        let quick = profile.window_for(0.25).unwrap();
        assert!((direct.lower() - quick.lower()).abs() < 1e-9);
        assert!((direct.upper() - quick.upper()).abs() < 1e-9);
        assert!(profile.window_for(0.5).is_err());
        assert!((profile.max_gap() - 0.382924922548026).abs() < 1e-9);
    }

    #[test]
    fn optimal_cutoff_matches_the_frozen_unit_model_solution() {
        let model = unit_model();
        let solution = optimal_pdelta(&model, 1000, 0.5).unwrap();
        assert!(
            (solution.p_delta_star - 0.162181).abs() < 5e-4,
            "cutoff {}",
            solution.p_delta_star
        );
        assert!(
            ((solution.variance_at_star - 9.936477e-04) / 9.936477e-04).abs() < 1e-5,
            "variance {:e}",
            solution.variance_at_star
        );
        assert!(solution.variance_curve.is_none(), "prescan should see a unimodal curve");

        let profile = VarianceProfile::new(&model).unwrap();
        let at_traditional = profile.variance_at(0.25, 0.5, 1000).unwrap();
        assert!(solution.variance_at_star <= at_traditional);
        assert!(((at_traditional - 1.029233e-03) / 1.029233e-03).abs() < 1e-5);
    }

    #[test]
    fn optimal_cutoff_matches_the_reported_skew_fit_point() {
        let model = lequa_model();
        let profile = VarianceProfile::new(&model).unwrap();
        assert!((profile.max_gap() - 0.639930).abs() < 1e-5);
        let solution = optimal_pdelta(&model, 250, 0.5).unwrap();
        assert!(
            solution.p_delta_star > 0.35 && solution.p_delta_star < 0.45,
            "cutoff {}",
            solution.p_delta_star
        );
        assert!((solution.p_delta_star - 0.399716).abs() < 2e-3);
    }

    #[test]
    fn optimal_cutoff_is_affine_invariant() {
        let base = unit_model();
        let moved = ClassConditionalModel::new(
            DistributionParams::normal(3.0 + 2.0 * 1.0, 2.0).unwrap(),
            DistributionParams::normal(3.0, 2.0).unwrap(),
        );
        let a = optimal_pdelta(&base, 400, 0.5).unwrap();
        let b = optimal_pdelta(&moved, 400, 0.5).unwrap();
        assert!((a.p_delta_star - b.p_delta_star).abs() < 2e-4);
        assert!(((a.variance_at_star - b.variance_at_star) / a.variance_at_star).abs() < 1e-6);
    }

    #[test]
    fn no_sampled_point_beats_the_minimizer() {
        let model = unit_model();
        let solution = optimal_pdelta(&model, 1000, 0.5).unwrap();
        let curve = pdelta_variance_curve(&model, 1000, 0.5, 50).unwrap();
        let best = curve.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
        assert!(
            solution.variance_at_star <= best + 1e-8 + 1e-6 * best,
            "{} vs curve minimum {best}",
            solution.variance_at_star
        );
    }

    #[test]
    fn curve_sampling_validates_inputs() {
        let model = unit_model();
        assert!(pdelta_variance_curve(&model, 1000, 0.5, 1).is_err());
        assert!(pdelta_variance_curve(&model, 1000, 1.5, 10).is_err());
        assert!(optimal_pdelta(&model, 0, 0.5).is_err());
    }

    #[test]
    fn curves_are_finite_out_to_the_profiled_edges() {
        // The grid spans [1%, 99%] of the maximum gap; its endpoints sit
        // exactly on the gap values of the profiled support, where the
        // window must clamp rather than fail the bisection bracket.
        for model in [unit_model(), lequa_model()] {
            let profile = VarianceProfile::new(&model).unwrap();
            let edge = profile.window_for(0.01 * profile.max_gap()).unwrap();
            assert!((edge.lower() - profile.support().lower()).abs() < 1e-9);
            assert!((edge.upper() - profile.support().upper()).abs() < 1e-9);

            let curve = pdelta_variance_curve(&model, 500, 0.5, 101).unwrap();
            assert_eq!(curve.len(), 101);
            for &(p, v) in &curve {
                assert!(v.is_finite() && v > 0.0, "variance {v} at cutoff {p}");
            }
            let tensor = cs_variance(&model, 0.5, 500, &edge).unwrap().variance;
            assert!(
                ((curve[0].1 - tensor) / tensor).abs() < 1e-7,
                "edge variance {:e} vs tensor route {tensor:e}",
                curve[0].1
            );
        }
    }
}
