//! Model layer: coefficients of a Zakai stochastic PDE and the differential
//! operators built from them.
//!
//! An equation instance
//!
//! ```text
//! du(t,x) = L₀u(t,x) dt + Σ_{k=1}^m L_k u(t,x) dW_k(t)
//! ```
//!
//! is described by its coefficient fields: a symmetric diffusion matrix `a`,
//! a drift vector `b`, an observation vector `β`, and an observation-noise
//! coupling matrix `γ`, together with the initial datum `u₀`. The operators are
//! divergence-form:
//!
//! ```text
//! L₀f = (1/2) Σ_{ij} ∂²_{ij}(a_{ij} f) + Σ_i ∂_i(b_i f)
//! L_k f = β_k f + Σ_i ∂_i(γ_{ik} f),        k = 1..m.
//! ```
//!
//! [`apply_l0`] and [`apply_lk`] evaluate them with the product rule expanded,
//! which is why a [`ZakaiModel`] must supply analytic first (and for `a`,
//! second) partial derivatives of its coefficients — no automatic or numeric
//! differentiation is hidden here. Smoothness and the degenerate ellipticity
//! condition `ξᵀ(a - γγᵀ)ξ ≥ 0` are preconditions of the underlying theory;
//! [`validate_model`] spot-checks them by sampling (a sanity check, not a
//! proof).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::interpolation::Interpolant;
use crate::kernels::PiecewiseKernel;

/// Coefficient fields of a Zakai equation, with analytic derivatives.
///
/// Index arguments are 0-based. Implementations must be pure functions of `x`;
/// models are treated as immutable value objects and evaluated concurrently.
pub trait ZakaiModel: Sync {
    /// State dimension `d`.
    fn state_dim(&self) -> usize;

    /// Noise dimension `m` (number of driving Brownian motions).
    fn noise_dim(&self) -> usize;

    /// Diffusion matrix entry `a_{ij}(x)`; must be symmetric in `(i, j)`.
    fn diffusion(&self, i: usize, j: usize, x: &[f64]) -> f64;

    /// `∂_k a_{ij}(x)`.
    fn diffusion_d1(&self, i: usize, j: usize, k: usize, x: &[f64]) -> f64;

    /// `∂²_{kl} a_{ij}(x)`.
    fn diffusion_d2(&self, i: usize, j: usize, k: usize, l: usize, x: &[f64]) -> f64;

    /// Drift entry `b_i(x)`.
    fn drift(&self, i: usize, x: &[f64]) -> f64;

    /// `∂_k b_i(x)`.
    fn drift_d1(&self, i: usize, k: usize, x: &[f64]) -> f64;

    /// Observation entry `β_k(x)`, `k = 0..m`.
    fn observation(&self, k: usize, x: &[f64]) -> f64;

    /// Observation-noise coupling `γ_{ik}(x)`, `i = 0..d`, `k = 0..m`.
    fn coupling(&self, i: usize, k: usize, x: &[f64]) -> f64;

    /// `∂_l γ_{ik}(x)`.
    fn coupling_d1(&self, i: usize, k: usize, l: usize, x: &[f64]) -> f64;

    /// Initial datum `u₀(x)`.
    fn initial(&self, x: &[f64]) -> f64;
}

/// A twice-differentiable scalar field: what the operators need from their
/// argument `f`.
pub trait DifferentiableField {
    fn value(&self, x: &[f64]) -> f64;

    /// `∂_i f(x)`.
    fn gradient(&self, i: usize, x: &[f64]) -> f64;

    /// `∂²_{ij} f(x)`.
    fn hessian(&self, i: usize, j: usize, x: &[f64]) -> f64;
}

/// The kernel translate `x ↦ Φ(x - y)` as a differentiable field — the function
/// class the collocation scheme applies its operators to.
pub struct KernelTranslate<'a> {
    pub kernel: &'a PiecewiseKernel,
    pub center: &'a [f64],
}

impl DifferentiableField for KernelTranslate<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.kernel.eval(x, self.center)
    }

    fn gradient(&self, i: usize, x: &[f64]) -> f64 {
        self.kernel.eval_d1(i, x, self.center)
    }

    fn hessian(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        self.kernel.eval_d2(i, j, x, self.center)
    }
}

/// An interpolant is a twice-differentiable field, so the operators can be
/// applied to it directly — the reference path for cross-checking the
/// propagator matrices.
impl DifferentiableField for Interpolant<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        Interpolant::value(self, x).expect("dimension checked at interpolation")
    }

    fn gradient(&self, i: usize, x: &[f64]) -> f64 {
        let mut alpha = vec![0usize; x.len()];
        alpha[i] = 1;
        self.derivative(&alpha, x)
            .expect("dimension checked at interpolation")
    }

    fn hessian(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        let mut alpha = vec![0usize; x.len()];
        alpha[i] += 1;
        alpha[j] += 1;
        self.derivative(&alpha, x)
            .expect("dimension checked at interpolation")
    }
}

/// `L₀f(x)`, with the divergence form expanded by the product rule:
///
/// ```text
/// (1/2) Σ_{ij} [a_{ij}∂²_{ij}f + (∂_i a_{ij})∂_j f + (∂_j a_{ij})∂_i f + (∂²_{ij}a_{ij})f]
///   + Σ_i [b_i ∂_i f + (∂_i b_i) f]
/// ```
pub fn apply_l0(model: &impl ZakaiModel, f: &impl DifferentiableField, x: &[f64]) -> f64 {
    let d = model.state_dim();
    let value = f.value(x);
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            sum += 0.5
                * (model.diffusion(i, j, x) * f.hessian(i, j, x)
                    + model.diffusion_d1(i, j, i, x) * f.gradient(j, x)
                    + model.diffusion_d1(i, j, j, x) * f.gradient(i, x)
                    + model.diffusion_d2(i, j, i, j, x) * value);
        }
        sum += model.drift(i, x) * f.gradient(i, x) + model.drift_d1(i, i, x) * value;
    }
    sum
}

/// `L_k f(x) = β_k f + Σ_i ∂_i(γ_{ik} f)`, expanded. The operator index `k`
/// runs over `1..=m` (the driving noise components; the drift operator is
/// [`apply_l0`]).
pub fn apply_lk(
    model: &impl ZakaiModel,
    k: usize,
    f: &impl DifferentiableField,
    x: &[f64],
) -> Result<f64> {
    let m = model.noise_dim();
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "operator index {k} out of range 1..={m}"
        )));
    }
    let kk = k - 1;
    let value = f.value(x);
    let mut sum = model.observation(kk, x) * value;
    for i in 0..model.state_dim() {
        sum += model.coupling(i, kk, x) * f.gradient(i, x) + model.coupling_d1(i, kk, i, x) * value;
    }
    Ok(sum)
}

/// The built-in 1-D filtering test equation
///
/// ```text
/// du = [(1/2)u″ − (tanh(x)·u)′] dt + u dW,
/// u(0,x) = (1/√(2π)) cosh(x) e^{−x²/2},
/// ```
///
/// i.e. `d = m = 1`, `a = 1`, `b = −tanh`, `β = 1`, `γ = 0`. Its solution is
/// known in closed form ([`TestModel::closed_form_solution`]), which is what
/// makes it the reference problem for every convergence experiment.
#[derive(Debug, Clone, Copy, Default)]
pub struct TestModel;

impl TestModel {
    /// The exact solution `u(t,x) = (1/√(2π)) cosh(x) exp(W_t − 3t/2 − x²/(2(1+t)))`,
    /// evaluated with the supplied Brownian value `W_t`. At `t = 0`, `W = 0` it
    /// reduces to the initial datum.
    pub fn closed_form_solution(&self, t: f64, x: f64, w_t: f64) -> f64 {
        debug_assert!(t >= 0.0, "closed form evaluated at negative time {t}");
        x.cosh() * (w_t - 1.5 * t - x * x / (2.0 * (1.0 + t))).exp()
            / (2.0 * std::f64::consts::PI).sqrt()
    }
}

impl ZakaiModel for TestModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn diffusion(&self, _i: usize, _j: usize, _x: &[f64]) -> f64 {
        1.0
    }

    fn diffusion_d1(&self, _i: usize, _j: usize, _k: usize, _x: &[f64]) -> f64 {
        0.0
    }

    fn diffusion_d2(&self, _i: usize, _j: usize, _k: usize, _l: usize, _x: &[f64]) -> f64 {
        0.0
    }

    fn drift(&self, _i: usize, x: &[f64]) -> f64 {
        -x[0].tanh()
    }

    fn drift_d1(&self, _i: usize, _k: usize, x: &[f64]) -> f64 {
        // d/dx(−tanh x) = −sech²x
        -1.0 / (x[0].cosh() * x[0].cosh())
    }

    fn observation(&self, _k: usize, _x: &[f64]) -> f64 {
        1.0
    }

    fn coupling(&self, _i: usize, _k: usize, _x: &[f64]) -> f64 {
        0.0
    }

    fn coupling_d1(&self, _i: usize, _k: usize, _l: usize, _x: &[f64]) -> f64 {
        0.0
    }

    fn initial(&self, x: &[f64]) -> f64 {
        self.closed_form_solution(0.0, x[0], 0.0)
    }
}

/// Sampling sanity checks on a model over the box `(-half_width, half_width)^d`:
/// symmetry of `a`, degenerate ellipticity `ξᵀ(a − γγᵀ)ξ ≥ −1e-10·|ξ|²` at 100
/// random `(x, ξ)` pairs, and agreement of the supplied analytic coefficient
/// derivatives with central finite differences (relative 1e-5, 50 random
/// points). Passing is evidence, not proof.
pub fn validate_model(model: &impl ZakaiModel, half_width: f64, seed: u64) -> Result<()> {
    if model.state_dim() == 0 {
        return Err(Error::InvalidParameter("state dimension is zero".into()));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "validation half-width must be positive, got {half_width}"
        )));
    }
    let d = model.state_dim();
    let m = model.noise_dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let random_point = |rng: &mut ChaCha12Rng| -> Vec<f64> {
        (0..d)
            .map(|_| rng.random_range(-half_width..half_width))
            .collect()
    };

    // Symmetry and ellipticity at 100 sampled (x, ξ).
    for _ in 0..100 {
        let x = random_point(&mut rng);
        let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xi_norm_sq: f64 = xi.iter().map(|v| v * v).sum();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                let a_ij = model.diffusion(i, j, &x);
                let a_ji = model.diffusion(j, i, &x);
                if (a_ij - a_ji).abs() > 1e-12 * (1.0 + a_ij.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "diffusion matrix not symmetric at x = {x:?}: a[{i}][{j}] = {a_ij}, a[{j}][{i}] = {a_ji}"
                    )));
                }
                let mut gamma_gamma_t = 0.0;
                for k in 0..m {
                    gamma_gamma_t += model.coupling(i, k, &x) * model.coupling(j, k, &x);
                }
                quad += xi[i] * (a_ij - gamma_gamma_t) * xi[j];
            }
        }
        if quad < -1e-10 * xi_norm_sq {
            return Err(Error::InvalidParameter(format!(
                "degenerate ellipticity violated at x = {x:?}: ξᵀ(a − γγᵀ)ξ = {quad}"
            )));
        }
    }

    // Analytic derivatives vs central differences.
    let h = 1e-5;
    let check = |name: &str, exact: f64, approx: f64| -> Result<()> {
        if (exact - approx).abs() > 1e-5 * exact.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name}: analytic derivative {exact} disagrees with finite difference {approx}"
            )));
        }
        Ok(())
    };
    for _ in 0..50 {
        let x = random_point(&mut rng);
        for axis in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[axis] += h;
            xm[axis] -= h;
            for i in 0..d {
                for j in 0..d {
                    let fd = (model.diffusion(i, j, &xp) - model.diffusion(i, j, &xm)) / (2.0 * h);
                    check("diffusion_d1", model.diffusion_d1(i, j, axis, &x), fd)?;
                    for l in 0..d {
                        let fd2 = (model.diffusion_d1(i, j, l, &xp)
                            - model.diffusion_d1(i, j, l, &xm))
                            / (2.0 * h);
                        check("diffusion_d2", model.diffusion_d2(i, j, l, axis, &x), fd2)?;
                    }
                }
                let fd = (model.drift(i, &xp) - model.drift(i, &xm)) / (2.0 * h);
                check("drift_d1", model.drift_d1(i, axis, &x), fd)?;
                for k in 0..m {
                    let fd = (model.coupling(i, k, &xp) - model.coupling(i, k, &xm)) / (2.0 * h);
                    check("coupling_d1", model.coupling_d1(i, k, axis, &x), fd)?;
                }
            }
        }
    }
    Ok(())
}
