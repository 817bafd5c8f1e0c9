//! Distribution-matching baselines: the EM prior-adjustment estimator
//! (SLD) and histogram mixture matching (DyS), plus the score-to-posterior
//! transform that feeds them.

use crate::dist::ClassConditionalModel;
use crate::error::{Error, Result};
use crate::quantify::{Diagnostics, Method, PrevalenceEstimate};
use crate::real::Real;

pub const SLD_MAX_ITERATIONS: usize = 1000;
pub const SLD_TOLERANCE: f64 = 1e-4;
pub const DYS_TOLERANCE: f64 = 1e-5;
pub const DYS_BINS: usize = 8;

/// Validated probabilities in [0, 1], e.g. class posteriors of a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySet<F> {
    values: Vec<F>,
}

impl<F: Real> ProbabilitySet<F> {
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("probability set"));
        }
        if values.iter().any(|v| !(*v >= F::zero() && *v <= F::one())) {
            return Err(Error::InvalidInput("probabilities must lie in [0, 1]".into()));
        }
        Ok(ProbabilitySet { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn mean(&self) -> F {
        self.values.iter().copied().sum::<F>() / F::count(self.values.len())
    }
}

/// Positive-class posterior of a score under the model and a class prior.
pub fn nb_posterior<F: Real>(
    model: &ClassConditionalModel<F>,
    prior: F,
    score: F,
) -> Result<F> {
    if !(prior > F::zero() && prior < F::one()) {
        return Err(Error::InvalidInput(format!("prior must lie in (0, 1), got {prior}")));
    }
    let weighted_pos = prior * model.positive.pdf(score)?;
    let weighted_neg = (F::one() - prior) * model.negative.pdf(score)?;
    let total = weighted_pos + weighted_neg;
    if total <= F::zero() {
        return Err(Error::ZeroDensity { score: score.as_f64() });
    }
    Ok(weighted_pos / total)
}

/// Posterior transform of a whole score set.
pub fn nb_posteriors<F: Real>(
    model: &ClassConditionalModel<F>,
    prior: F,
    scores: &[F],
) -> Result<ProbabilitySet<F>> {
    let values = scores
        .iter()
        .map(|&s| nb_posterior(model, prior, s))
        .collect::<Result<Vec<F>>>()?;
    ProbabilitySet::new(values)
}

/// EM prior adjustment: reweights the posteriors by the ratio of the
/// current prior estimate to the training prior until the prior stabilizes.
///
/// The prior fed back into the reweighting is clamped away from 0 and 1 to
/// avoid absorbing states; the reported estimate is the raw final mean.
/// Hitting the iteration cap is flagged in the diagnostics, not an error.
pub fn sld<F: Real>(
    train_prior: F,
    posteriors: &ProbabilitySet<F>,
    max_iter: usize,
    tol: F,
) -> Result<PrevalenceEstimate<F>> {
    if !(train_prior > F::zero() && train_prior < F::one()) {
        return Err(Error::InvalidInput(format!(
            "training prior must lie in (0, 1), got {train_prior}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("sld needs at least one iteration".into()));
    }
    if !(tol > F::zero()) {
        return Err(Error::InvalidInput("sld tolerance must be positive".into()));
    }
    let n = F::count(posteriors.len());
    let one = F::one();
    let clamp_lo = F::of(1e-8);
    let clamp_hi = one - F::of(1e-8);
    let mut alpha = train_prior;
    let mut capped = true;
    for _ in 0..max_iter {
        let fed = alpha.max(clamp_lo).min(clamp_hi);
        let ratio_pos = fed / train_prior;
        let ratio_neg = (one - fed) / (one - train_prior);
        let mut sum = F::zero();
        for &p in posteriors.values() {
            let reweighted = ratio_pos * p;
            sum += reweighted / (reweighted + ratio_neg * (one - p));
        }
        let next = sum / n;
        let step = (next - alpha).abs();
        alpha = next;
        if step < tol {
            capped = false;
            break;
        }
    }
    Ok(PrevalenceEstimate {
        method: Method::Sld,
        raw: alpha,
        clipped: alpha.max(F::zero()).min(one),
        diagnostics: Diagnostics { reached_iteration_cap: capped, ..Diagnostics::default() },
    })
}

/// Equal-width histogram over [0, 1] with relative-frequency masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<F> {
    edges: Vec<F>,
    masses: Vec<F>,
}

impl<F: Real> Histogram<F> {
    /// Bins the probabilities into `bins` equal-width cells on [0, 1]; the
    /// final bin is closed on the right so a value of exactly 1 lands in it.
    pub fn equal_width(values: &ProbabilitySet<F>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("a histogram needs at least one bin".into()));
        }
        let mut counts = vec![0usize; bins];
        for &v in values.values() {
            let idx = ((v * F::count(bins)).as_f64().floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let n = F::count(values.len());
        let masses = counts.iter().map(|&c| F::count(c) / n).collect();
        let edges = (0..=bins).map(|i| F::count(i) / F::count(bins)).collect();
        Ok(Histogram { edges, masses })
    }

    /// Builds from explicit edges and masses, validating the histogram
    /// spans [0, 1] with non-negative masses summing to 1.
    pub fn from_parts(edges: Vec<F>, masses: Vec<F>) -> Result<Self> {
        if masses.is_empty() || edges.len() != masses.len() + 1 {
            return Err(Error::InvalidInput(
                "histogram needs one more edge than it has masses".into(),
            ));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("histogram edges must strictly increase".into()));
        }
        let eps = F::of(1e-12);
        if edges[0].abs() > eps || (edges[edges.len() - 1] - F::one()).abs() > eps {
            return Err(Error::InvalidInput("histogram edges must span [0, 1]".into()));
        }
        if masses.iter().any(|m| *m < F::zero()) {
            return Err(Error::InvalidInput("histogram masses must be non-negative".into()));
        }
        let total = masses.iter().copied().sum::<F>();
        if (total - F::one()).abs() > eps {
            return Err(Error::InvalidInput(format!(
                "histogram masses must sum to 1, got {total}"
            )));
        }
        Ok(Histogram { edges, masses })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn edges(&self) -> &[F] {
        &self.edges
    }

    pub fn masses(&self) -> &[F] {
        &self.masses
    }

    fn same_edges(&self, other: &Self) -> bool {
        self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| (*a - *b).abs() <= F::of(1e-12))
    }
}

/// Topsoe distance between two mass vectors, with 0 log 0 read as 0.
fn topsoe<F: Real>(a: &[F], b: &[F]) -> F {
    fn half<F: Real>(x: F, y: F) -> F {
        if x > F::zero() {
            x * (F::of(2.0) * x / (x + y)).ln()
        } else {
            F::zero()
        }
    }
    a.iter().zip(b).map(|(&x, &y)| half(x, y) + half(y, x)).sum()
}

/// Histogram mixture matching: the prevalence whose blend of the per-class
/// training histograms is closest to the test histogram in Topsoe distance,
/// found by ternary search on [0, 1] to an interval of width `tol`.
pub fn dys<F: Real>(
    pos_hist: &Histogram<F>,
    neg_hist: &Histogram<F>,
    test_hist: &Histogram<F>,
    tol: F,
) -> Result<PrevalenceEstimate<F>> {
    if !pos_hist.same_edges(neg_hist) || !pos_hist.same_edges(test_hist) {
        return Err(Error::HistogramMismatch(
            "the class and test histograms must share bin edges",
        ));
    }
    if !(tol > F::zero() && tol < F::one()) {
        return Err(Error::InvalidInput("dys tolerance must lie in (0, 1)".into()));
    }
    let one = F::one();
    let objective = |alpha: F| {
        let mix: Vec<F> = pos_hist
            .masses
            .iter()
            .zip(&neg_hist.masses)
            .map(|(&p, &q)| alpha * p + (one - alpha) * q)
            .collect();
        topsoe(&mix, &test_hist.masses)
    };
    let mut lo = F::zero();
    let mut hi = one;
    while hi - lo > tol {
        let third = (hi - lo) / F::of(3.0);
        let m1 = lo + third;
        let m2 = hi - third;
        if objective(m1) < objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let raw = (lo + hi) * F::of(0.5);
    Ok(PrevalenceEstimate::new(Method::Dys, raw))
}
