//! Compactly supported piecewise-polynomial radial kernels.
//!
//! A kernel of smoothness class `C^{2τ}` on `R^d` is built by applying the radial
//! integral operator
//!
//! ```text
//! (Iψ)(r) = ∫_r^∞ t ψ(t) dt
//! ```
//!
//! τ times to the truncated power `ψ(r) = max{1-r, 0}^ν` with `ν = ⌊d/2⌋ + τ + 1`.
//! Because the integrand vanishes on `[1, ∞)`, every application reduces to a
//! polynomial antiderivative on `[r, 1]`, so the coefficients are computed in exact
//! rational arithmetic. The result is normalized to `φ(0) = 1`, which makes the
//! diagonal of every interpolation Gram matrix equal to one.
//!
//! The generated polynomial has a root of exact multiplicity `m = ⌊d/2⌋ + 2τ + 1`
//! at `r = 1` (each integration raises the multiplicity of the starting
//! `max{1-r, 0}^ν` by one). Evaluation therefore uses the factored form
//! `φ(r) = (1-r)^m q(r)`, obtained by exact synthetic division: near the support
//! edge the expanded monomial form suffers catastrophic cancellation (absolute
//! error `~ε·Σ|c_k|`, which dwarfs the tiny function values there), while the
//! factored form is well conditioned on all of `[0, 1]`. The profile is
//! identically zero for `r ≥ 1`, and a spatial scale `σ` stretches the support:
//! the kernel is evaluated as `φ(|x - y| / σ)`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A compactly supported radial kernel with exact polynomial coefficients.
///
/// Immutable after construction; shared freely between threads.
#[derive(Debug, Clone)]
pub struct PiecewiseKernel {
    dim: usize,
    tau: usize,
    scale: f64,
    /// Exact expanded coefficients of `φ` on `[0, 1]`, index = power of `r`.
    coeffs: Vec<BigRational>,
    /// Multiplicity of the root at `r = 1`.
    edge_multiplicity: u32,
    /// `q` in `φ(r) = (1-r)^m q(r)`, Horner-ready.
    factor: Vec<f64>,
    /// `w₁` in `φ'(r) = (1-r)^{m-1} w₁(r)`.
    factor_d1: Vec<f64>,
    /// `w₂` in `φ''(r) = (1-r)^{m-2} w₂(r)`.
    factor_d2: Vec<f64>,
    /// `w₁(r)/r`, an exact polynomial quotient (valid because `φ'(0) = 0`),
    /// giving `φ'(r)/r = (1-r)^{m-1} w₁(r)/r` without a removable singularity.
    factor_d1_over_r: Vec<f64>,
}

/// Construct the order-`τ` compactly supported kernel for dimension `d`.
///
/// The returned kernel has unit support radius (`scale = 1`); use
/// [`PiecewiseKernel::with_scale`] to stretch it.
pub fn generate_wendland(d: usize, tau: usize) -> Result<PiecewiseKernel> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "kernel dimension must be positive".into(),
        ));
    }
    if tau == 0 {
        return Err(Error::InvalidParameter(
            "kernel smoothness parameter must be positive".into(),
        ));
    }

    let nu = d / 2 + tau + 1;
    let mut poly = truncated_power_coeffs(nu);
    for _ in 0..tau {
        poly = radial_integral(&poly);
    }

    // Normalize to φ(0) = 1. The integrand is nonnegative so the constant term
    // is strictly positive.
    let at_zero = poly[0].clone();
    debug_assert!(at_zero.is_positive());
    for c in &mut poly {
        *c /= at_zero.clone();
    }

    PiecewiseKernel::from_rational_coeffs(d, tau, poly, 1.0)
}

impl PiecewiseKernel {
    fn from_rational_coeffs(
        dim: usize,
        tau: usize,
        coeffs: Vec<BigRational>,
        scale: f64,
    ) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel scale must be positive and finite, got {scale}"
            )));
        }
        let m = (dim / 2 + 2 * tau + 1) as u32;
        // Divide out the root at r = 1 with its full multiplicity. The remainder
        // is exactly zero at every step; anything else is a generation bug.
        let mut q = coeffs.clone();
        for _ in 0..m {
            let (quotient, remainder) = divide_by_one_minus_r(&q);
            assert!(
                remainder.is_zero(),
                "kernel polynomial lost its root at the support edge"
            );
            q = quotient;
        }
        // w₁ and w₂ make φ' = (1-r)^{m-1} w₁ and φ'' = (1-r)^{m-2} w₂.
        let q_d1 = differentiate_rational(&q);
        let m_rat = BigRational::from_integer(BigInt::from(m));
        let w1 = poly_sub(&poly_mul_one_minus_r(&q_d1), &poly_scale(&q, &m_rat));
        let w1_d1 = differentiate_rational(&w1);
        let m1_rat = BigRational::from_integer(BigInt::from(m - 1));
        let w2 = poly_sub(&poly_mul_one_minus_r(&w1_d1), &poly_scale(&w1, &m1_rat));
        // The radial integral never produces a linear term, so φ'(0) = 0, which
        // forces w₁(0) = 0 and makes w₁(r)/r a polynomial. The derivative
        // evaluations at the origin rely on this.
        assert!(w1.first().map(Zero::is_zero).unwrap_or(true));
        let w1_over_r: Vec<BigRational> = w1.iter().skip(1).cloned().collect();

        let to_f64 = |p: &[BigRational]| -> Vec<f64> {
            p.iter()
                .map(|c| c.to_f64().expect("kernel coefficient representable as f64"))
                .collect()
        };
        Ok(Self {
            dim,
            tau,
            scale,
            factor: to_f64(&q),
            factor_d1: to_f64(&w1),
            factor_d2: to_f64(&w2),
            factor_d1_over_r: to_f64(&w1_over_r),
            coeffs,
            edge_multiplicity: m,
        })
    }

    /// Same kernel profile with support radius `scale`.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::from_rational_coeffs(self.dim, self.tau, self.coeffs.clone(), scale)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Exact rational coefficients of `φ` on `[0, 1]`, index = power of `r`.
    pub fn rational_coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// The radial profile `φ(r)` (unscaled argument): zero for `r ≥ 1`.
    pub fn profile(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        (1.0 - r).powi(self.edge_multiplicity as i32) * horner(&self.factor, r)
    }

    /// `φ'(r)`, zero for `r ≥ 1`.
    pub fn profile_d1(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        (1.0 - r).powi(self.edge_multiplicity as i32 - 1) * horner(&self.factor_d1, r)
    }

    /// `φ''(r)`, zero for `r ≥ 1`.
    pub fn profile_d2(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        (1.0 - r).powi(self.edge_multiplicity as i32 - 2) * horner(&self.factor_d2, r)
    }

    /// `φ'(r)/r` evaluated through the exact polynomial quotient, so the removable
    /// singularity at `r = 0` needs no special casing. Zero for `r ≥ 1`.
    pub fn profile_d1_over_r(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        (1.0 - r).powi(self.edge_multiplicity as i32 - 1) * horner(&self.factor_d1_over_r, r)
    }

    /// `Φ_σ(x - y) = φ(|x - y| / σ)`; exactly zero when `|x - y| ≥ σ`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let r = distance(x, y) / self.scale;
        self.profile(r)
    }

    /// `∂Φ_σ/∂x_i` at `x - y`.
    pub fn eval_d1(&self, i: usize, x: &[f64], y: &[f64]) -> f64 {
        debug_assert!(i < self.dim);
        let z = x[i] - y[i];
        let r = distance(x, y) / self.scale;
        // ∂_i φ(|z|/σ) = z_i/σ² · φ'(r)/r, with φ'(r)/r the polynomial quotient.
        z / (self.scale * self.scale) * self.profile_d1_over_r(r)
    }

    /// `∂²Φ_σ/∂x_i∂x_j` at `x - y`.
    pub fn eval_d2(&self, i: usize, j: usize, x: &[f64], y: &[f64]) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        let dist = distance(x, y);
        let r = dist / self.scale;
        let inv_scale2 = 1.0 / (self.scale * self.scale);
        let quotient = self.profile_d1_over_r(r);
        let diagonal = if i == j { quotient } else { 0.0 };
        if dist == 0.0 {
            // Radial part: both the direction and the coefficient φ'' - φ'/r vanish.
            return diagonal * inv_scale2;
        }
        let ni = (x[i] - y[i]) / dist;
        let nj = (x[j] - y[j]) / dist;
        (diagonal + ni * nj * (self.profile_d2(r) - quotient)) * inv_scale2
    }

    /// `D^α_x Φ_σ(x - y)` for a multi-index `α` with `|α|₁ ≤ 2`.
    pub fn derivative(&self, alpha: &[usize], x: &[f64], y: &[f64]) -> Result<f64> {
        if alpha.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "multi-index length {} does not match kernel dimension {}",
                alpha.len(),
                self.dim
            )));
        }
        let order: usize = alpha.iter().sum();
        match order {
            0 => Ok(self.eval(x, y)),
            1 => {
                let i = alpha.iter().position(|&a| a == 1).unwrap();
                Ok(self.eval_d1(i, x, y))
            }
            2 => {
                if let Some(i) = alpha.iter().position(|&a| a == 2) {
                    Ok(self.eval_d2(i, i, x, y))
                } else {
                    let mut ones = alpha.iter().enumerate().filter(|(_, &a)| a == 1);
                    let i = ones.next().unwrap().0;
                    let j = ones.next().unwrap().0;
                    Ok(self.eval_d2(i, j, x, y))
                }
            }
            _ => Err(Error::InvalidParameter(format!(
                "kernel derivatives only available up to order 2, got |α| = {order}"
            ))),
        }
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn horner(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}

/// Exact synthetic division `p(r) = (1-r)·quotient(r) + remainder`.
fn divide_by_one_minus_r(p: &[BigRational]) -> (Vec<BigRational>, BigRational) {
    // Divide by the root at 1 (giving p = (r-1)·t + p(1)) and flip the sign.
    let n = p.len();
    if n <= 1 {
        return (
            Vec::new(),
            p.first().cloned().unwrap_or_else(BigRational::zero),
        );
    }
    let mut t = vec![BigRational::zero(); n - 1];
    t[n - 2] = p[n - 1].clone();
    for k in (1..n - 1).rev() {
        t[k - 1] = &p[k] + &t[k];
    }
    let remainder = &p[0] + &t[0];
    (t.into_iter().map(|c| -c).collect(), remainder)
}

fn differentiate_rational(p: &[BigRational]) -> Vec<BigRational> {
    (1..p.len())
        .map(|k| &p[k] * BigRational::from_integer(BigInt::from(k)))
        .collect()
}

fn poly_scale(p: &[BigRational], factor: &BigRational) -> Vec<BigRational> {
    p.iter().map(|c| c * factor).collect()
}

/// Coefficients of `(1-r)·p(r)`.
fn poly_mul_one_minus_r(p: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); p.len() + 1];
    for (k, c) in p.iter().enumerate() {
        out[k] += c;
        out[k + 1] -= c;
    }
    out
}

/// `a - b`, padding the shorter polynomial with zeros.
fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (k, c) in a.iter().enumerate() {
        out[k] += c;
    }
    for (k, c) in b.iter().enumerate() {
        out[k] -= c;
    }
    out
}

/// Coefficients of `(1 - r)^ν` in the monomial basis.
fn truncated_power_coeffs(nu: usize) -> Vec<BigRational> {
    let mut coeffs = Vec::with_capacity(nu + 1);
    let mut binom = BigInt::one();
    for k in 0..=nu {
        let sign = if k % 2 == 0 {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        coeffs.push(BigRational::from_integer(sign * &binom));
        // binom(nu, k+1) = binom(nu, k) * (nu - k) / (k + 1), exact at every step.
        binom = binom * BigInt::from(nu - k) / BigInt::from(k + 1);
    }
    coeffs
}

/// One application of the radial integral: `q(r) = ∫_r^1 t p(t) dt` for a
/// polynomial `p` supported on `[0, 1]`.
fn radial_integral(p: &[BigRational]) -> Vec<BigRational> {
    // Antiderivative of t·p(t) puts p_k/(k+2) at power k+2; the constant term of
    // q is its value at 1. Note q never gains a linear term.
    let mut q = vec![BigRational::zero(); p.len() + 2];
    let mut at_one = BigRational::zero();
    for (k, c) in p.iter().enumerate() {
        let term = c / BigRational::from_integer(BigInt::from(k + 2));
        at_one += &term;
        q[k + 2] = -term;
    }
    q[0] = at_one;
    q
}
