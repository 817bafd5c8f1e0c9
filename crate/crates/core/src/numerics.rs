//! Shared numerical machinery: Gauss-Legendre rules, adaptive
//! Gauss-Kronrod quadrature, root finding, golden-section search,
//! Nelder-Mead, and Chebyshev approximation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::real::Real;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending by node.
///
/// Roots of the Legendre polynomial are located by Newton iteration in `f64`
/// and cast afterwards, so accuracy is double precision for any `F`.
pub fn gauss_legendre<F: Real>(n: usize) -> (Vec<F>, Vec<F>) {
    let rule = gauss_legendre_f64(n);
    let (x, w) = rule.as_ref();
    (
        x.iter().map(|&v| F::of(v)).collect(),
        w.iter().map(|&v| F::of(v)).collect(),
    )
}

/// Cached `f64` Gauss-Legendre rule; orders recur constantly in the variance
/// quadrature, so rules are computed once per order.
pub(crate) fn gauss_legendre_f64(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("gauss-legendre cache poisoned");
    map.entry(n).or_insert_with(|| Arc::new(compute_gauss_legendre(n))).clone()
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th root, descending from +1.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    (nodes, weights)
}

/// Integrates `f` over `[lo, hi]` with a fixed Gauss-Legendre rule of the
/// given order.
pub fn gauss_panel<F: Real>(f: impl Fn(F) -> F, lo: F, hi: F, order: usize) -> F {
    let rule = gauss_legendre_f64(order);
    let (x, w) = rule.as_ref();
    let half = (hi - lo) * F::of(0.5);
    let mid = (hi + lo) * F::of(0.5);
    let mut acc = F::zero();
    for (&xi, &wi) in x.iter().zip(w) {
        acc += F::of(wi) * f(mid + half * F::of(xi));
    }
    acc * half
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK values).
const GK_NODES: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod 15/7 panel: returns the Kronrod value and |K15 - G7| as
/// a conservative error estimate.
fn gk15<F: Real>(f: &impl Fn(F) -> F, lo: F, hi: F) -> (F, F) {
    let half = (hi - lo) * F::of(0.5);
    let mid = (hi + lo) * F::of(0.5);
    let f_mid = f(mid);
    let mut kronrod = F::of(GK_WEIGHTS_K[7]) * f_mid;
    let mut gauss = F::of(GK_WEIGHTS_G[3]) * f_mid;
    for j in 0..7 {
        let offset = half * F::of(GK_NODES[j]);
        let pair = f(mid - offset) + f(mid + offset);
        kronrod += F::of(GK_WEIGHTS_K[j]) * pair;
        if j % 2 == 1 {
            gauss += F::of(GK_WEIGHTS_G[j / 2]) * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

const MAX_PANELS: usize = 4096;

/// Adaptive Gauss-Kronrod integration of `f` over `[lo, hi]` to the given
/// absolute tolerance, splitting the worst panel first.
pub fn integrate<F: Real>(f: impl Fn(F) -> F, lo: F, hi: F, abs_tol: F) -> Result<F> {
    if lo == hi {
        return Ok(F::zero());
    }
    let (sign, lo, hi) = if lo < hi { (F::one(), lo, hi) } else { (-F::one(), hi, lo) };
    struct Panel<F> {
        lo: F,
        hi: F,
        value: F,
        err: F,
    }
    let non_finite = |a: F, b: F| Error::QuadratureDidNotConverge {
        context: format!("non-finite integrand on [{a}, {b}]"),
        error_estimate: f64::INFINITY,
    };
    let (value, err) = gk15(&f, lo, hi);
    if !value.is_finite() {
        return Err(non_finite(lo, hi));
    }
    let mut panels = vec![Panel { lo, hi, value, err }];
    loop {
        let total_err: F = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol {
            let total: F = panels.iter().map(|p| p.value).sum();
            return Ok(sign * total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::QuadratureDidNotConverge {
                context: format!("adaptive panel limit on [{lo}, {hi}]"),
                error_estimate: total_err.as_f64(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.err.partial_cmp(&b.1.err).expect("quadrature error is NaN"))
            .map(|(i, _)| i)
            .expect("panel list is non-empty");
        let Panel { lo: a, hi: b, .. } = panels.swap_remove(worst);
        let mid = (a + b) * F::of(0.5);
        if mid <= a || mid >= b {
            // Interval narrowed to machine resolution; accept what we have.
            let (value, err) = gk15(&f, a, b);
            panels.push(Panel { lo: a, hi: b, value, err: err * F::zero() });
            continue;
        }
        let (v1, e1) = gk15(&f, a, mid);
        let (v2, e2) = gk15(&f, mid, b);
        if !v1.is_finite() || !v2.is_finite() {
            return Err(non_finite(a, b));
        }
        panels.push(Panel { lo: a, hi: mid, value: v1, err: e1 });
        panels.push(Panel { lo: mid, hi: b, value: v2, err: e2 });
    }
}

/// Bisection on a bracketing interval. Requires a sign change (or an exact
/// zero at an endpoint) and returns the midpoint of the final interval of
/// width at most `x_tol`.
pub fn bisect<F: Real>(f: impl Fn(F) -> F, lo: F, hi: F, x_tol: F) -> Result<F> {
    let mut lo = lo;
    let mut hi = hi;
    let f_lo = f(lo);
    if f_lo == F::zero() {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi == F::zero() {
        return Ok(hi);
    }
    if (f_lo > F::zero()) == (f_hi > F::zero()) {
        return Err(Error::BracketingFailed("no sign change over the bracket"));
    }
    let lo_positive = f_lo > F::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * F::of(0.5);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == F::zero() {
            return Ok(mid);
        }
        if (f_mid > F::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * F::of(0.5))
}

/// Golden-section minimization on `[lo, hi]`; returns the located minimizer
/// and its objective value. The objective is assumed unimodal on the bracket;
/// otherwise some local minimum is found.
pub fn golden_min<F: Real>(f: impl Fn(F) -> F, lo: F, hi: F, x_tol: F) -> (F, F) {
    let inv_phi = F::of(0.618_033_988_749_894_9);
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if b - a <= x_tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let x = (a + b) * F::of(0.5);
    (x, f(x))
}

/// Golden-section maximization; see [`golden_min`].
pub fn golden_max<F: Real>(f: impl Fn(F) -> F, lo: F, hi: F, x_tol: F) -> (F, F) {
    let (x, neg) = golden_min(|t| -f(t), lo, hi, x_tol);
    (x, -neg)
}

/// Nelder-Mead settings. `f_tol` is relative to the best objective value
/// seen, `x_tol` is an absolute bound on the simplex diameter; meeting either
/// stops the search.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 2000, f_tol: 1e-12, x_tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome<F> {
    pub x: Vec<F>,
    pub fx: F,
    pub evaluations: usize,
    pub converged: bool,
}

/// Downhill-simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
/// objective values are treated as +inf so the simplex retreats from them.
pub fn nelder_mead<F: Real>(
    f: impl Fn(&[F]) -> F,
    x0: &[F],
    step: &[F],
    opts: NelderMeadOptions,
) -> NelderMeadOutcome<F> {
    assert_eq!(x0.len(), step.len(), "one step per coordinate");
    let dim = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[F]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            F::infinity()
        }
    };

    let mut simplex: Vec<(Vec<F>, F)> = Vec::with_capacity(dim + 1);
    let fx0 = eval(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step[i];
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut converged = false;
    while evals.get() < opts.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("NaN escaped the eval guard"));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let f_spread = (worst - best).abs().as_f64();
        let x_spread = (0..dim)
            .map(|i| {
                let lo = simplex.iter().map(|(v, _)| v[i]).fold(F::infinity(), F::min);
                let hi = simplex.iter().map(|(v, _)| v[i]).fold(F::neg_infinity(), F::max);
                (hi - lo).as_f64()
            })
            .fold(0.0f64, f64::max);
        if f_spread <= opts.f_tol * (1.0 + best.as_f64().abs()) || x_spread <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<F> = (0..dim)
            .map(|i| {
                let s: F = simplex[..dim].iter().map(|(v, _)| v[i]).sum();
                s / F::count(dim)
            })
            .collect();
        let at = |coef: F| -> Vec<F> {
            (0..dim).map(|i| centroid[i] + coef * (centroid[i] - simplex[dim].0[i])).collect()
        };

        let reflected = at(F::one());
        let f_reflected = eval(&reflected);
        if f_reflected < simplex[0].1 {
            let expanded = at(F::of(2.0));
            let f_expanded = eval(&expanded);
            simplex[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
        } else {
            let contracted = if f_reflected < simplex[dim].1 {
                at(F::of(0.5))
            } else {
                at(F::of(-0.5))
            };
            let f_contracted = eval(&contracted);
            if f_contracted < simplex[dim].1.min(f_reflected) {
                simplex[dim] = (contracted, f_contracted);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for i in 0..dim {
                        vertex.0[i] = anchor[i] + (vertex.0[i] - anchor[i]) * F::of(0.5);
                    }
                    vertex.1 = eval(&vertex.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("NaN escaped the eval guard"));
    NelderMeadOutcome {
        x: simplex[0].0.clone(),
        fx: simplex[0].1,
        evaluations: evals.get(),
        converged,
    }
}

/// Chebyshev interpolant of a function on `[lo, hi]`, stored as plain-sum
/// coefficients: f(x) = sum_k c[k] T_k(t) with t the affine map of x onto
/// [-1, 1].
#[derive(Debug, Clone)]
pub struct Chebyshev<F> {
    lo: F,
    hi: F,
    coeffs: Vec<F>,
}

impl<F: Real> Chebyshev<F> {
    /// Fits at Chebyshev-Lobatto nodes, doubling the degree until the
    /// trailing coefficients fall below `rel_tol` times the largest one.
    /// Function values are reused between refinement levels.
    pub fn fit(f: impl Fn(F) -> F, lo: F, hi: F, rel_tol: f64) -> Result<Self> {
        assert!(lo < hi, "invalid interval");
        let mid = (hi + lo) * F::of(0.5);
        let half = (hi - lo) * F::of(0.5);
        let max_n = 2048usize;
        let mut n = 16usize;
        // values[j] = f at the Lobatto node cos(pi j / n); node sets nest as
        // n doubles, with old index j landing at 2j.
        let mut values: Vec<F> = (0..=n)
            .map(|j| f(mid + half * F::of((std::f64::consts::PI * j as f64 / n as f64).cos())))
            .collect();
        loop {
            let coeffs = lobatto_coefficients(&values);
            let scale = coeffs.iter().fold(F::zero(), |m, c| m.max(c.abs()));
            let tail = coeffs[n - 2].abs().max(coeffs[n - 1].abs()).max(coeffs[n].abs());
            if scale == F::zero() || tail <= F::of(rel_tol) * scale {
                let cut = F::of(rel_tol) * scale * F::of(0.1);
                let mut keep = coeffs.len();
                while keep > 2 && coeffs[keep - 1].abs() <= cut {
                    keep -= 1;
                }
                let mut coeffs = coeffs;
                coeffs.truncate(keep);
                return Ok(Chebyshev { lo, hi, coeffs });
            }
            if n >= max_n {
                return Err(Error::QuadratureDidNotConverge {
                    context: "chebyshev fit did not resolve the function".into(),
                    error_estimate: (tail / scale.max(F::of(f64::MIN_POSITIVE))).as_f64(),
                });
            }
            n *= 2;
            let mut next = vec![F::zero(); n + 1];
            for (j, v) in values.iter().enumerate() {
                next[2 * j] = *v;
            }
            for (j, slot) in next.iter_mut().enumerate() {
                if j % 2 == 1 {
                    *slot =
                        f(mid + half * F::of((std::f64::consts::PI * j as f64 / n as f64).cos()));
                }
            }
            values = next;
        }
    }

    /// Evaluates the interpolant by Clenshaw recurrence.
    pub fn eval(&self, x: F) -> F {
        let t = (x + x - self.lo - self.hi) / (self.hi - self.lo);
        let two_t = t + t;
        let mut b1 = F::zero();
        let mut b2 = F::zero();
        for &c in self.coeffs.iter().skip(1).rev() {
            let b = two_t * b1 - b2 + c;
            b2 = b1;
            b1 = b;
        }
        self.coeffs[0] + t * b1 - b2
    }

    /// Antiderivative with value 0 at the left endpoint.
    pub fn antiderivative(&self) -> Self {
        let n = self.coeffs.len();
        let scale = (self.hi - self.lo) * F::of(0.5);
        let c = |k: usize| if k < n { self.coeffs[k] } else { F::zero() };
        let mut out = vec![F::zero(); n + 1];
        // Plain-sum coefficients: the k = 0 term carries weight 2 in the
        // halved-first-coefficient convention the recurrence is stated in.
        out[1] = scale * (c(0) + c(0) - c(2)) * F::of(0.5);
        for k in 2..=n {
            out[k] = scale * (c(k - 1) - c(k + 1)) / F::count(2 * k);
        }
        let mut at_left = F::zero();
        for (k, &g) in out.iter().enumerate().skip(1) {
            // T_k(-1) = (-1)^k
            if k % 2 == 0 {
                at_left += g;
            } else {
                at_left -= g;
            }
        }
        out[0] = -at_left;
        Chebyshev { lo: self.lo, hi: self.hi, coeffs: out }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn domain(&self) -> (F, F) {
        (self.lo, self.hi)
    }
}

/// Discrete Chebyshev transform on Lobatto samples: values[j] = f(cos(pi j/n))
/// in as plain-sum coefficients out.
fn lobatto_coefficients<F: Real>(values: &[F]) -> Vec<F> {
    let n = values.len() - 1;
    let mut coeffs = vec![F::zero(); n + 1];
    for (k, slot) in coeffs.iter_mut().enumerate() {
        let mut acc = F::zero();
        for (j, &v) in values.iter().enumerate() {
            let w = if j == 0 || j == n { F::of(0.5) } else { F::one() };
            let angle = std::f64::consts::PI * ((j * k) % (2 * n)) as f64 / n as f64;
            acc += w * v * F::of(angle.cos());
        }
        let outer = if k == 0 || k == n { F::of(0.5) } else { F::one() };
        *slot = outer * acc * F::of(2.0) / F::count(n);
    }
    coeffs
}
