//! Exponential sums `Σ_j w_j e^{-t_j ξ}` approximating `ξ^{-α}` uniformly on
//! `[1, ∞)`.
//!
//! The sum comes from the Laplace representation
//! `ξ^{-α} = Γ(α)^{-1} ∫_0^∞ t^{α-1} e^{-tξ} dt`, remapped to the real line by
//! `t = log(1 + e^τ)^{1/α}` and discretized with the truncated trapezoidal
//! (sinc) rule `h Σ_{j=-N₋}^{N₊} g(jh)`. The integrand
//!
//! ```text
//! g(τ) = exp(-ξ log(1 + e^τ)^{1/α}) / (1 + e^{-τ})
//! ```
//!
//! is analytic on the strip `|Im τ| < π`; its decay on the boundary of the
//! narrower strip `|Im τ| ≤ d`, `d ≤ πα/8`, gives the error bounds
//! implemented here.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};
use crate::special::gamma;

/// Which error estimate applies to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundForm {
    /// `eps ≤ e^{-π²/4}` and `d = πα/8`: the closed-form estimate holds.
    ClosedForm,
    /// Truncation counts follow the step-size rule but the closed form does
    /// not apply (loose `eps` or a narrower strip).
    FirstForm,
    /// Counts chosen by the caller; estimate is the quadrature bound plus the
    /// truncation remainder.
    General,
}

/// Parameters of the sinc discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSumParams<T: Scalar> {
    alpha: T,
    eps: T,
    d: T,
    h: T,
    n_minus: usize,
    n_plus: usize,
    beta: T,
    form: BoundForm,
}

/// `e^{-π²/4} ≈ 0.085`, the largest `eps` for which the closed-form bound holds.
pub fn closed_form_eps_cap<T: Scalar>() -> T {
    (-(T::PI() * T::PI()) / T::lit(4.0)).exp()
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Largest admissible strip half-width `πα/8`.
pub fn max_strip_width<T: Scalar>(alpha: T) -> T {
    T::PI() * alpha / T::lit(8.0)
}

/// Real-valued truncation counts `(2πd/h², (2πd h^{-(α+1)/α}/β)^α)`.
fn raw_counts<T: Scalar>(alpha: T, d: T, h: T, beta: T) -> (T, T) {
    let two_pi_d = T::lit(2.0) * T::PI() * d;
    let n_minus = two_pi_d / (h * h);
    let n_plus = (two_pi_d * h.powf(-(alpha + T::one()) / alpha) / beta).powf(alpha);
    (n_minus, n_plus)
}

fn ceil_count<T: Scalar>(x: T) -> usize {
    let c = x.ceil();
    c.to_usize().unwrap_or(usize::MAX)
}

impl<T: Scalar> ExpSumParams<T> {
    /// Parameters for target accuracy `eps` with the widest strip `d = πα/8`.
    pub fn select(alpha: T, eps: T) -> Result<Self> {
        check_alpha(alpha)?;
        Self::select_with_strip(alpha, eps, max_strip_width(alpha))
    }

    /// Parameters for target accuracy `eps` on a caller-chosen strip `0 < d ≤ πα/8`.
    pub fn select_with_strip(alpha: T, eps: T, d: T) -> Result<Self> {
        check_alpha(alpha)?;
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
        }
        let d_max = max_strip_width(alpha);
        if !(d > T::zero() && d <= d_max * (T::one() + T::epsilon())) {
            return Err(Error::InvalidArgument(format!(
                "strip half-width must lie in (0, πα/8 = {d_max}], got {d}"
            )));
        }
        let d = d.min(d_max);
        let log_inv_eps = -eps.ln();
        let h = T::lit(2.0) * T::PI() * d / log_inv_eps;
        let beta = (T::lit(2.0) * d / alpha).cos();
        let (nm, np) = raw_counts(alpha, d, h, beta);
        let at_max_strip = (d - d_max).abs() <= d_max * T::lit(8.0) * T::epsilon();
        let form = if at_max_strip && eps <= closed_form_eps_cap() {
            BoundForm::ClosedForm
        } else {
            BoundForm::FirstForm
        };
        Ok(Self {
            alpha,
            eps,
            d,
            h,
            n_minus: ceil_count(nm),
            n_plus: ceil_count(np),
            beta,
            form,
        })
    }

    /// Explicit step and truncation counts on the strip `d = πα/8`.
    ///
    /// `eps` is reported as `e^{-2πd/h}`, the quadrature accuracy of the step.
    pub fn from_counts(alpha: T, h: T, n_minus: usize, n_plus: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
        }
        let d = max_strip_width(alpha);
        let beta = (T::lit(2.0) * d / alpha).cos();
        let eps = (-(T::lit(2.0) * T::PI() * d) / h).exp();
        let (nm, np) = raw_counts(alpha, d, h, beta);
        let follows_rule = n_minus >= ceil_count(nm) && n_plus >= ceil_count(np);
        let form = match (follows_rule, eps <= closed_form_eps_cap()) {
            (true, true) => BoundForm::ClosedForm,
            (true, false) => BoundForm::FirstForm,
            (false, _) => BoundForm::General,
        };
        Ok(Self {
            alpha,
            eps,
            d,
            h,
            n_minus,
            n_plus,
            beta,
            form,
        })
    }

    /// Parameters with exactly `n_terms` terms.
    ///
    /// For `n_terms ≥ 3` this takes the smallest `eps` whose rule-derived sum
    /// has at most `n_terms` terms and pads `N₋` with the remainder, which only
    /// enlarges the sum. Fewer than three terms cannot satisfy the rule; those
    /// sums use the step of `eps = e^{-π²/4}` and carry [`BoundForm::General`].
    pub fn for_terms(alpha: T, n_terms: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if n_terms == 0 {
            return Err(Error::InvalidArgument("an exponential sum needs at least one term".into()));
        }
        if n_terms < 3 {
            let d = max_strip_width(alpha);
            let h = T::lit(2.0) * T::PI() * d / (T::PI() * T::PI() / T::lit(4.0));
            return Self::from_counts(alpha, h, n_terms - 1, 0);
        }
        let count = |log_inv_eps: T| -> Result<usize> {
            Self::select(alpha, (-log_inv_eps).exp()).map(|p| p.n_terms())
        };
        let mut lo = T::lit(1e-3);
        let mut hi = T::one();
        while count(hi)? <= n_terms {
            lo = hi;
            hi *= T::lit(2.0);
            if hi > T::lit(700.0) {
                return Err(Error::InvalidArgument(format!(
                    "{n_terms} terms exceed the representable accuracy range"
                )));
            }
        }
        if count(lo)? > n_terms {
            return Err(Error::InvalidArgument(format!("cannot build a sum with {n_terms} terms")));
        }
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid)? <= n_terms {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut p = Self::select(alpha, (-lo).exp())?;
        p.n_minus += n_terms - p.n_terms();
        Ok(p)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    /// Strip half-width.
    pub fn d(&self) -> T {
        self.d
    }

    /// Quadrature step.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    /// Decay constant `cos(2d/α)` of the right tail.
    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn n_terms(&self) -> usize {
        self.n_minus + self.n_plus + 1
    }

    pub fn bound_form(&self) -> BoundForm {
        self.form
    }

    /// True when `eps` exceeds `e^{-π²/4}` and the closed-form bound is not certified.
    pub fn is_loose(&self) -> bool {
        self.eps > closed_form_eps_cap()
    }
}

/// Integrand `g(τ)` of the remapped Laplace integral, principal branches.
pub fn integrand<T: Scalar>(tau: Complex<T>, xi: T, alpha: T) -> Result<Complex<T>> {
    check_alpha(alpha)?;
    if !(xi > T::zero()) {
        return Err(Error::InvalidArgument(format!("xi must be positive, got {xi}")));
    }
    if !(tau.re.is_finite() && tau.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {tau}")));
    }
    if tau.im.abs() >= T::PI() {
        return Err(Error::Domain(format!(
            "|Im τ| = {} reaches the poles/branch cut at ±iπ",
            tau.im.abs()
        )));
    }
    let one = Complex::new(T::one(), T::zero());
    // w = log(1 + e^τ), evaluated without overflow on either side.
    let (w, inv_denominator) = if tau.re > T::zero() {
        let z = (-tau).exp();
        (tau + ln_1p(z), one / (one + z))
    } else {
        let z = tau.exp();
        (ln_1p(z), z / (one + z))
    };
    let power = if w == Complex::new(T::zero(), T::zero()) {
        w
    } else {
        (w.ln() / alpha).exp()
    };
    Ok((-power * xi).exp() * inv_denominator)
}

/// `log(1 + z)`, accurate for small `|z|`.
fn ln_1p<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let two = T::lit(2.0);
    let re = (two * z.re + z.re * z.re + z.im * z.im).ln_1p() / two;
    let im = z.im.atan2(T::one() + z.re);
    Complex::new(re, im)
}

/// Left-tail decay bound `e^{-|γ|}` on `Re τ = γ ≤ 0`.
pub fn left_decay_bound<T: Scalar>(gamma_re: T) -> T {
    (-gamma_re.abs()).exp()
}

/// Right-tail decay bound `exp(-ξ γ^{1/α} cos(d / (α max(γ, 1/2))))` on `Re τ = γ > 0`.
pub fn right_decay_bound<T: Scalar>(gamma_re: T, d: T, xi: T, alpha: T) -> T {
    let arg = d / (alpha * gamma_re.max(T::lit(0.5)));
    (-xi * gamma_re.powf(T::one() / alpha) * arg.cos()).exp()
}

/// Bound on `∫_{∂D_d} |g|` valid for every `0 < d ≤ πα/8`:
/// `2(1 + log 2 + Γ(α+1)/(ξ cos(π/8))^α)`.
pub fn strip_norm_bound<T: Scalar>(alpha: T, xi: T) -> T {
    let cos_pi_8 = (T::PI() / T::lit(8.0)).cos();
    T::lit(2.0) * (T::one() + T::LN_2() + gamma(alpha + T::one()) / (xi * cos_pi_8).powf(alpha))
}

/// Remainder of dropping the terms outside `-N₋..=N₊` from the infinite
/// trapezoidal sum: `e^{-N₋h}/h + α e^{-β(N₊h)^{1/α}} / (β h^{1/α})`.
pub fn truncation_bound<T: Scalar>(params: &ExpSumParams<T>) -> T {
    let h = params.h;
    let a = params.alpha;
    let left = (-(T::from_usize_lossy(params.n_minus) * h)).exp() / h;
    let right_exp = -params.beta * (T::from_usize_lossy(params.n_plus) * h).powf(T::one() / a);
    let right = a * right_exp.exp() / (params.beta * h.powf(T::one() / a));
    left + right
}

/// Uniform bound on `|ξ^{-α} − E(ξ)|` over `ξ ≥ 1`.
///
/// Closed form `2[1 + log 2 + Γ(α+1)/cos(π/8)^α + cos(π/4)^{-1}(4 log(1/ε)/(π²α))^{1/α}] ε`
/// when it applies, `(‖g‖ + 1/h + 1/(βh^{1/α})) ε` for rule-derived counts
/// otherwise, and `‖g‖ e^{-2πd/h} + truncation` for explicit counts.
pub fn total_error_bound<T: Scalar>(params: &ExpSumParams<T>) -> T {
    let a = params.alpha;
    let eps = params.eps;
    let two = T::lit(2.0);
    match params.form {
        BoundForm::ClosedForm => {
            let cos_pi_8 = (T::PI() / T::lit(8.0)).cos();
            let cos_pi_4 = (T::PI() / T::lit(4.0)).cos();
            let growth = (T::lit(4.0) * (-eps.ln()) / (T::PI() * T::PI() * a)).powf(T::one() / a);
            two * (T::one() + T::LN_2() + gamma(a + T::one()) / cos_pi_8.powf(a) + growth / cos_pi_4) * eps
        }
        BoundForm::FirstForm => {
            let h = params.h;
            (strip_norm_bound(a, T::one()) + T::one() / h + T::one() / (params.beta * h.powf(T::one() / a))) * eps
        }
        BoundForm::General => {
            let quad = (-(two * T::PI() * params.d) / params.h).exp();
            strip_norm_bound(a, T::one()) * quad + truncation_bound(params)
        }
    }
}

/// Weights and exponents of an exponential sum, indexed by `j = -N₋..=N₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum<T: Scalar> {
    params: ExpSumParams<T>,
    weights: Vec<T>,
    exponents: Vec<T>,
}

impl<T: Scalar> ExpSum<T> {
    pub fn build(params: ExpSumParams<T>) -> Self {
        let h = params.h;
        let a = params.alpha;
        let prefactor = h / (a * gamma(a));
        let inv_alpha = T::one() / a;
        let n = params.n_terms();
        let mut weights = Vec::with_capacity(n);
        let mut exponents = Vec::with_capacity(n);
        for k in 0..n {
            let j = k as i64 - params.n_minus as i64;
            let x = T::lit(j as f64) * h;
            // log(1 + e^x) without overflow for large x
            let softplus = if x > T::zero() {
                x + (-x).exp().ln_1p()
            } else {
                x.exp().ln_1p()
            };
            weights.push(prefactor / (T::one() + (-x).exp()));
            exponents.push(softplus.powf(inv_alpha));
        }
        Self {
            params,
            weights,
            exponents,
        }
    }

    /// Convenience: `build(select(alpha, eps))`.
    pub fn new(alpha: T, eps: T) -> Result<Self> {
        Ok(Self::build(ExpSumParams::select(alpha, eps)?))
    }

    /// Convenience: `build(for_terms(alpha, n_terms))`.
    pub fn with_terms(alpha: T, n_terms: usize) -> Result<Self> {
        Ok(Self::build(ExpSumParams::for_terms(alpha, n_terms)?))
    }

    pub fn params(&self) -> &ExpSumParams<T> {
        &self.params
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn exponents(&self) -> &[T] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.weights.iter().copied().zip(self.exponents.iter().copied())
    }

    /// `Σ_j w_j e^{-t_j ξ}`, summed in ascending `j` with compensation.
    pub fn evaluate(&self, xi: T) -> T {
        let mut acc = CompensatedSum::new();
        for (w, t) in self.terms() {
            acc.add(w * (-t * xi).exp());
        }
        acc.value()
    }

    pub fn error_bound(&self) -> T {
        total_error_bound(&self.params)
    }

    /// Two whitespace-separated columns `weight exponent`, one line per term.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 48);
        for (w, t) in self.terms() {
            let _ = writeln!(s, "{:.17e} {:.17e}", w.to_f64_lossy(), t.to_f64_lossy());
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// Parses the two-column text produced by [`ExpSum::to_text`] into
/// `(weights, exponents)`.
pub fn parse_terms<T: Scalar>(text: &str) -> Result<(Vec<T>, Vec<T>)> {
    let mut weights = Vec::new();
    let mut exponents = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace();
        let mut next = || -> Result<T> {
            let tok = cols
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: expected two columns", lineno + 1)))?;
            tok.parse::<f64>()
                .map(T::lit)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        weights.push(next()?);
        exponents.push(next()?);
    }
    Ok((weights, exponents))
}
