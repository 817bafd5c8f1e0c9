//! Parametric class-conditional score distributions: the normal and
//! skew-normal families, their maximum-likelihood fits, and sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{bisect, nelder_mead, NelderMeadOptions};
use crate::real::Real;
use crate::special::{log_norm_cdf, norm_cdf, norm_pdf, norm_sf, owen_t};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    SkewNormal,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::SkewNormal => "skew-normal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Family::Normal),
            "skew-normal" => Ok(Family::SkewNormal),
            other => Err(Error::InvalidInput(format!(
                "unknown family {other:?}, expected \"normal\" or \"skew-normal\""
            ))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Location-scale distribution of discriminant scores for one class.
///
/// `shape` is the skew-normal slant and is fixed at zero for the normal
/// family; a skew-normal with zero shape evaluates identically to the normal
/// with the same location and scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionParams<F> {
    family: Family,
    location: F,
    scale: F,
    shape: F,
}

impl<F: Real> DistributionParams<F> {
    pub fn normal(location: F, scale: F) -> Result<Self> {
        Self::new(Family::Normal, location, scale, F::zero())
    }

    pub fn skew_normal(location: F, scale: F, shape: F) -> Result<Self> {
        Self::new(Family::SkewNormal, location, scale, shape)
    }

    pub fn new(family: Family, location: F, scale: F, shape: F) -> Result<Self> {
        if !location.is_finite() || !scale.is_finite() || !shape.is_finite() {
            return Err(Error::NonFinite("distribution parameters"));
        }
        if scale <= F::zero() {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        if family == Family::Normal && shape != F::zero() {
            return Err(Error::InvalidInput("normal family requires zero shape".into()));
        }
        Ok(DistributionParams { family, location, scale, shape })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn location(&self) -> F {
        self.location
    }

    pub fn scale(&self) -> F {
        self.scale
    }

    pub fn shape(&self) -> F {
        self.shape
    }

    fn standardize(&self, s: F) -> F {
        (s - self.location) / self.scale
    }

    pub fn pdf(&self, s: F) -> Result<F> {
        if !s.is_finite() {
            return Err(Error::NonFinite("pdf argument"));
        }
        let z = self.standardize(s);
        let base = norm_pdf(z) / self.scale;
        Ok(match self.family {
            Family::Normal => base,
            Family::SkewNormal => F::of(2.0) * base * norm_cdf(self.shape * z),
        })
    }

    pub fn log_pdf(&self, s: F) -> Result<F> {
        if !s.is_finite() {
            return Err(Error::NonFinite("pdf argument"));
        }
        let z = self.standardize(s);
        let base = -z * z * F::of(0.5) - self.scale.ln() - F::of(LN_SQRT_2PI);
        Ok(match self.family {
            Family::Normal => base,
            Family::SkewNormal => {
                base + F::of(std::f64::consts::LN_2) + log_norm_cdf(self.shape * z)
            }
        })
    }

    /// Upper-tail probability P(S >= s). Survival of the positive class is
    /// the true positive rate of the threshold classifier at s, survival of
    /// the negative class its false positive rate.
    pub fn survival(&self, s: F) -> F {
        let z = self.standardize(s);
        let raw = match self.family {
            Family::Normal => norm_sf(z),
            Family::SkewNormal => norm_sf(z) + F::of(2.0) * owen_t(z, self.shape),
        };
        raw.max(F::zero()).min(F::one())
    }

    /// Lower-tail probability P(S < s) (equivalently P(S <= s); the
    /// distributions are continuous).
    pub fn cdf(&self, s: F) -> F {
        let z = self.standardize(s);
        let raw = match self.family {
            Family::Normal => norm_cdf(z),
            Family::SkewNormal => norm_cdf(z) - F::of(2.0) * owen_t(z, self.shape),
        };
        raw.max(F::zero()).min(F::one())
    }

    /// Inverse of [`cdf`], by bracketed bisection to an interval of width
    /// 1e-12 (times the scale when the scale is large).
    pub fn quantile(&self, p: F) -> Result<F> {
        if !(p > F::zero() && p < F::one()) {
            return Err(Error::InvalidInput(format!("quantile needs p in (0, 1), got {p}")));
        }
        let mut lo = self.location - F::of(8.0) * self.scale;
        let mut hi = self.location + F::of(8.0) * self.scale;
        let mut step = F::of(8.0) * self.scale;
        for _ in 0..200 {
            if self.cdf(lo) < p {
                break;
            }
            lo = lo - step;
            step = step + step;
        }
        let mut step = F::of(8.0) * self.scale;
        for _ in 0..200 {
            if self.cdf(hi) > p {
                break;
            }
            hi = hi + step;
            step = step + step;
        }
        let tol = F::of(1e-12) * self.scale.max(F::one());
        bisect(|x| self.cdf(x) - p, lo, hi, tol)
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> F {
        match self.family {
            Family::Normal => self.location,
            Family::SkewNormal => {
                self.location + self.scale * self.delta() * F::of(SQRT_2_OVER_PI)
            }
        }
    }

    /// Standardized third moment; zero for the normal family.
    pub fn skewness(&self) -> F {
        match self.family {
            Family::Normal => F::zero(),
            Family::SkewNormal => {
                let d = self.delta().as_f64();
                let m = d * SQRT_2_OVER_PI;
                let v = 1.0 - m * m;
                F::of((2.0 - std::f64::consts::FRAC_PI_2) * m.powi(3) / v.powf(1.5))
            }
        }
    }

    fn delta(&self) -> F {
        self.shape / (F::one() + self.shape * self.shape).sqrt()
    }

    /// Draws `n` scores with a private generator seeded by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<F>> {
        if n == 0 {
            return Err(Error::EmptyInput("sample size must be at least 1"));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Ok(self.sample_with(n, &mut rng))
    }

    /// Draws `n` scores from a caller-managed generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<F> {
        let delta = self.delta().as_f64();
        let coshape = (1.0 - delta * delta).sqrt();
        (0..n)
            .map(|_| {
                let z = match self.family {
                    Family::Normal => rng.sample::<f64, _>(StandardNormal),
                    Family::SkewNormal => {
                        let t: f64 = rng.sample(StandardNormal);
                        let u: f64 = rng.sample(StandardNormal);
                        delta * t.abs() + coshape * u
                    }
                };
                self.location + self.scale * F::of(z)
            })
            .collect()
    }
}

/// The pair of class-conditional score distributions. Supplies the model
/// true and false positive rates of the threshold classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassConditionalModel<F> {
    pub positive: DistributionParams<F>,
    pub negative: DistributionParams<F>,
}

impl<F: Real> ClassConditionalModel<F> {
    pub fn new(positive: DistributionParams<F>, negative: DistributionParams<F>) -> Self {
        ClassConditionalModel { positive, negative }
    }

    /// True positive rate at threshold theta.
    pub fn tpr(&self, theta: F) -> F {
        self.positive.survival(theta)
    }

    /// False positive rate at threshold theta.
    pub fn fpr(&self, theta: F) -> F {
        self.negative.survival(theta)
    }

    /// tpr - fpr, the quantity the sweep window is built from.
    pub fn rate_gap(&self, theta: F) -> F {
        self.tpr(theta) - self.fpr(theta)
    }

    /// Interval certain to contain every threshold of interest: both
    /// locations plus/minus ten scales.
    pub fn threshold_bracket(&self) -> (F, F) {
        let ten = F::of(10.0);
        let lo = (self.positive.location - ten * self.positive.scale)
            .min(self.negative.location - ten * self.negative.scale);
        let hi = (self.positive.location + ten * self.positive.scale)
            .max(self.negative.location + ten * self.negative.scale);
        (lo, hi)
    }
}

/// Log-likelihood of the data under the given parameters.
pub fn log_likelihood<F: Real>(params: &DistributionParams<F>, scores: &[F]) -> Result<F> {
    let mut acc = F::zero();
    for &s in scores {
        acc += params.log_pdf(s)?;
    }
    Ok(acc)
}

/// Normal maximum-likelihood fit: sample mean and the divisor-n standard
/// deviation. Inputs are summed in sorted order so the result is exactly
/// permutation invariant.
pub fn fit_normal_mle<F: Real>(scores: &[F]) -> Result<DistributionParams<F>> {
    if scores.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "normal fit needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    let sorted = sorted_finite(scores)?;
    let n = F::count(sorted.len());
    let mean = sorted.iter().copied().sum::<F>() / n;
    let ss = sorted.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>();
    let scale = (ss / n).sqrt();
    if scale <= F::zero() {
        return Err(Error::InvalidInput("all scores identical; fitted scale is zero".into()));
    }
    DistributionParams::normal(mean, scale)
}

/// Skew-normal maximum-likelihood fit.
///
/// The search runs Nelder-Mead over (location, log scale, shape) from a
/// method-of-moments start; a second start at the nested normal fit is tried
/// if the first stalls or lands below it. The returned fit never scores
/// worse than the normal fit by more than 1e-9 log-likelihood.
pub fn fit_skew_normal_mle<F: Real>(scores: &[F]) -> Result<DistributionParams<F>> {
    if scores.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "skew-normal fit needs at least 3 scores, got {}",
            scores.len()
        )));
    }
    let data = sorted_finite(scores)?;
    let normal = fit_normal_mle(&data)?;
    let mean = normal.location();
    let sd = normal.scale();

    let m3 = data.iter().map(|&x| (x - mean).powi(3)).sum::<F>() / F::count(data.len());
    let sample_skew = (m3 / sd.powi(3)).as_f64().clamp(-0.99, 0.99);
    let moment_start = moment_estimate(mean.as_f64(), sd.as_f64(), sample_skew);

    let objective = |v: &[F]| {
        let omega = v[1].exp();
        -skew_log_likelihood(&data, v[0], omega, v[2])
    };
    let opts = NelderMeadOptions { max_evals: 4000, f_tol: 1e-12, x_tol: 1e-10 };
    let steps = [sd * F::of(0.1), F::of(0.1), F::of(0.5)];
    let start = [F::of(moment_start.0), F::of(moment_start.1.ln()), F::of(moment_start.2)];
    let first = nelder_mead(objective, &start, &steps, opts);

    let normal_point = [mean, sd.ln(), F::zero()];
    let normal_obj = objective(&normal_point);
    let second = if !first.converged || first.fx > normal_obj {
        Some(nelder_mead(objective, &normal_point, &steps, opts))
    } else {
        None
    };

    let mut best: (Vec<F>, F, bool) = (first.x, first.fx, first.converged);
    if let Some(r) = second {
        if r.fx < best.1 {
            best = (r.x, r.fx, r.converged);
        }
    }
    if normal_obj < best.1 {
        best = (normal_point.to_vec(), normal_obj, true);
    }

    let (v, fx, converged) = best;
    let params_raw = [v[0].as_f64(), v[1].exp().as_f64(), v[2].as_f64()];
    if !fx.is_finite() || !converged {
        return Err(Error::FitDidNotConverge {
            family: "skew-normal",
            best: params_raw,
            log_likelihood: -fx.as_f64(),
        });
    }
    DistributionParams::skew_normal(v[0], v[1].exp(), v[2])
}

fn sorted_finite<F: Real>(scores: &[F]) -> Result<Vec<F>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores compare"));
    Ok(sorted)
}

/// Method-of-moments skew-normal parameters from mean, standard deviation,
/// and (clamped) sample skewness.
fn moment_estimate(mean: f64, sd: f64, skew: f64) -> (f64, f64, f64) {
    let c = (2.0 - std::f64::consts::FRAC_PI_2).powf(2.0 / 3.0);
    let r = skew.abs().powf(2.0 / 3.0);
    let delta_sq = (std::f64::consts::FRAC_PI_2 * r / (r + c)).min(0.995 * 0.995);
    let delta = delta_sq.sqrt().copysign(skew);
    let shape = delta / (1.0 - delta * delta).sqrt();
    let omega = sd / (1.0 - 2.0 * delta * delta / std::f64::consts::PI).sqrt();
    let location = mean - omega * delta * SQRT_2_OVER_PI;
    (location, omega, shape)
}

fn skew_log_likelihood<F: Real>(data: &[F], location: F, omega: F, shape: F) -> F {
    if !omega.is_finite() || omega <= F::zero() {
        return F::neg_infinity();
    }
    let log_norm = F::of(std::f64::consts::LN_2) - omega.ln() - F::of(LN_SQRT_2PI);
    let mut acc = F::zero();
    for &x in data {
        let z = (x - location) / omega;
        acc += log_norm - z * z * F::of(0.5) + log_norm_cdf(shape * z);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    fn close(got: f64, want: f64, tol: f64, what: &str) {
        assert!((got - want).abs() <= tol, "{what}: got {got:e}, want {want:e}");
    }

    #[test]
    fn normal_pdf_peak_and_symmetry() {
        let d = DistributionParams::normal(0.0, 1.0).unwrap();
        close(d.pdf(0.0).unwrap(), 0.3989422804014327, 1e-15, "standard normal mode");
        close(d.survival(0.0), 0.5, 1e-15, "sf at the mean");
        let shifted = DistributionParams::normal(1.0, 1.0).unwrap();
        close(shifted.survival(1.0), 0.5, 1e-15, "sf at a shifted mean");
        close(shifted.survival(f64::NEG_INFINITY), 1.0, 0.0, "full mass below");
        close(shifted.survival(f64::INFINITY), 0.0, 0.0, "no mass above");
    }

    #[test]
    fn zero_shape_skew_normal_collapses_to_normal() {
        let n = DistributionParams::normal(0.3, 1.7).unwrap();
        let s = DistributionParams::skew_normal(0.3, 1.7, 0.0).unwrap();
        for i in -40..=40 {
            let x = i as f64 * 0.25;
            assert_eq!(n.pdf(x).unwrap(), s.pdf(x).unwrap(), "pdf at {x}");
            assert_eq!(n.survival(x), s.survival(x), "survival at {x}");
        }
        for &p in &[0.01, 0.25, 0.5, 0.9, 0.999] {
            let qn = n.quantile(p).unwrap();
            let qs = s.quantile(p).unwrap();
            assert!((qn - qs).abs() < 1e-12, "quantile at {p}: {qn} vs {qs}");
        }
    }

    #[test]
    fn skew_normal_matches_reference_evaluations() {
        // (x, shape, survival, pdf) for location 0, scale 1.
        let cases = [
            (0.0, 4.0, 0.9220208696226306, 0.3989422804014327),
            (1.3, 2.0, 0.1933934832633616, 0.34113962163782513),
            (-0.7, -3.0, 0.5173100046691399, 0.6133513955574075),
            (0.5, 0.0, 0.3085375387259869, 0.35206532676429947),
            (2.2, 1.0, 0.027613589174236605, 0.06996274741306223),
        ];
        for (x, shape, sf, pdf) in cases {
            let d = DistributionParams::skew_normal(0.0, 1.0, shape).unwrap();
            close(d.survival(x), sf, 1e-13, &format!("sf({x}; shape {shape})"));
            close(d.pdf(x).unwrap(), pdf, 1e-13, &format!("pdf({x}; shape {shape})"));
        }
    }

    #[test]
    fn skew_normal_density_integrates_to_one() {
        let d = DistributionParams::skew_normal(0.0, 1.0, 4.0).unwrap();
        let total = integrate(|x| d.pdf(x).unwrap(), -12.0, 12.0, 1e-10).unwrap();
        close(total, 1.0, 1e-8, "skew-normal total mass");
    }

    #[test]
    fn survival_plus_cdf_is_one() {
        let d = DistributionParams::skew_normal(0.2, 0.8, -2.5).unwrap();
        for i in -30..=30 {
            let x = i as f64 * 0.2;
            let s: f64 = d.survival(x) + d.cdf(x);
            assert!((s - 1.0).abs() < 1e-12, "mass splits at {x}: {s}");
        }
    }

    #[test]
    fn quantiles_invert_the_cdf() {
        let n = DistributionParams::normal(1.0, 2.0).unwrap();
        close(n.quantile(0.975).unwrap(), 1.0 + 2.0 * 1.959963984540054, 1e-9, "normal 97.5%");
        close(n.quantile(0.5).unwrap(), 1.0, 1e-11, "normal median");
        assert!(n.quantile(0.0).is_err());
        assert!(n.quantile(1.0).is_err());

        let cases = [(0.25, 4.0, 0.3057822312552346), (0.9, -2.0, 0.1338112617709598)];
        for (p, shape, want) in cases {
            let d = DistributionParams::skew_normal(0.0, 1.0, shape).unwrap();
            close(d.quantile(p).unwrap(), want, 1e-9, &format!("skew quantile {p}"));
            let q = d.quantile(p).unwrap();
            close(d.cdf(q), p, 1e-10, "round trip");
        }
    }

    #[test]
    fn sampling_is_seeded_and_matches_moments() {
        let d = DistributionParams::normal(0.0, 1.0).unwrap();
        let a = d.sample(1_000_000, 99).unwrap();
        let b = d.sample(1_000_000, 99).unwrap();
        assert_eq!(a, b, "same seed must reproduce the sample");
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 4e-3, "sample mean {mean}");

        let sk = DistributionParams::skew_normal(0.0, 1.0, 4.0).unwrap();
        let s = sk.sample(1_000_000, 7).unwrap();
        let n = s.len() as f64;
        let m = s.iter().sum::<f64>() / n;
        let v = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        let m3 = s.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
        let skewness = m3 / v.powf(1.5);
        close(skewness, 0.784426755382313, 0.02, "sample skewness of shape 4");
        assert!(d.sample(0, 1).is_err());
    }

    #[test]
    fn normal_fit_recovers_parameters() {
        let exact = fit_normal_mle(&[-1.0, 1.0]).unwrap();
        assert_eq!(exact.location(), 0.0);
        assert_eq!(exact.scale(), 1.0);
        assert!(fit_normal_mle(&[2.0, 2.0, 2.0]).is_err());
        assert!(fit_normal_mle(&[1.0]).is_err());

        let d = DistributionParams::normal(1.0, 0.5).unwrap();
        let sample = d.sample(100_000, 3).unwrap();
        let fit = fit_normal_mle(&sample).unwrap();
        close(fit.location(), 1.0, 0.01, "fitted location");
        close(fit.scale(), 0.5, 0.01, "fitted scale");
    }

    #[test]
    fn normal_fit_is_permutation_invariant() {
        let d = DistributionParams::normal(0.0, 1.0).unwrap();
        let sample = d.sample(1001, 11).unwrap();
        let mut reversed = sample.clone();
        reversed.reverse();
        let a = fit_normal_mle(&sample).unwrap();
        let b = fit_normal_mle(&reversed).unwrap();
        assert_eq!(a.location(), b.location());
        assert_eq!(a.scale(), b.scale());
    }

    #[test]
    fn skew_fit_recovers_shape() {
        let d = DistributionParams::skew_normal(0.0, 1.0, 2.0).unwrap();
        let sample = d.sample(100_000, 5).unwrap();
        let fit = fit_skew_normal_mle(&sample).unwrap();
        close(fit.shape(), 2.0, 0.1, "fitted shape");
        close(fit.location(), 0.0, 0.05, "fitted location");
        close(fit.scale(), 1.0, 0.05, "fitted scale");
    }

    #[test]
    fn skew_fit_never_scores_below_the_nested_normal_fit() {
        let d = DistributionParams::normal(0.0, 1.0).unwrap();
        let sample: Vec<f64> = d.sample(5000, 17).unwrap();
        let skew_fit = fit_skew_normal_mle(&sample).unwrap();
        let normal_fit = fit_normal_mle(&sample).unwrap();
        let ll_skew = log_likelihood(&skew_fit, &sample).unwrap();
        let ll_normal = log_likelihood(&normal_fit, &sample).unwrap();
        assert!(
            ll_skew >= ll_normal - 1e-9,
            "skew fit {ll_skew} must not score below normal fit {ll_normal}"
        );
        // The shape itself is noisy on normal data (it scales with the cube
        // root of the sample skewness), so only a loose bound is meaningful.
        assert!(skew_fit.shape().abs() < 2.0, "shape {} blew up", skew_fit.shape());
    }

    #[test]
    fn model_rates_are_the_class_survivals() {
        let model = ClassConditionalModel::new(
            DistributionParams::normal(1.0, 1.0).unwrap(),
            DistributionParams::normal(0.0, 1.0).unwrap(),
        );
        close(model.tpr(1.0), 0.5, 1e-15, "tpr at positive mean");
        close(model.fpr(0.0), 0.5, 1e-15, "fpr at negative mean");
        assert!(model.rate_gap(0.5) > 0.38 && model.rate_gap(0.5) < 0.3835);
        let (lo, hi) = model.threshold_bracket();
        assert_eq!(lo, -10.0);
        assert_eq!(hi, 11.0);
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        assert!(DistributionParams::normal(0.0, 0.0).is_err());
        assert!(DistributionParams::normal(f64::NAN, 1.0).is_err());
        assert!(DistributionParams::skew_normal(0.0, -1.0, 2.0).is_err());
        assert!(DistributionParams::new(Family::Normal, 0.0, 1.0, 0.5).is_err());
        let d = DistributionParams::normal(0.0, 1.0).unwrap();
        assert!(d.pdf(f64::NAN).is_err());
    }
}
