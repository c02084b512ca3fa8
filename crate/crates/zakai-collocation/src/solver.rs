//! The stochastic collocation time stepper.
//!
//! On the grid, one Euler step of the scheme is the vector recursion
//!
//! ```text
//! u_i = u_{i-1} + Σ_{k=0}^m (P_k u_{i-1}) ΔW_k(t_i),      P_k = A_k A⁻¹,
//! ```
//!
//! where `A_{k,jℓ} = L_k Φ(x - x_ℓ)|_{x=x_j}`, the `k = 0` term is the drift
//! with `W_0(t) = t` (so `ΔW_0 = Δt`), and the identity
//! `L_k I(f)(x_j) = (A_k A⁻¹ f|_Γ)_j` turns operator application into a
//! mat-vec. Because the coefficients are time-independent, the propagators
//! `P_k` are assembled and factor-solved once per configuration; each time step
//! is then `m+1` dense mat-vecs.
//!
//! Off-grid points ξ are advanced by the same recursion — via matrices `E_k`
//! whose rows are `L_k Φ(x - x_ℓ)|_{x=ξ}·A⁻¹` — rather than by re-interpolating
//! grid values at the end: the recursion defines the approximation at every x,
//! not only on Γ. [`reinterpolate`] is provided separately for comparing the
//! two readings.
//!
//! The explicit scheme has no blow-up guard. A run reports an `overflow` flag
//! when any value exceeds 1e12 in magnitude (or turns non-finite); surfacing
//! instability beats masking it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::interpolation::InterpolationSystem;
use crate::models::{apply_l0, apply_lk, KernelTranslate, ZakaiModel};

/// Magnitude beyond which a trajectory is reported as overflowed.
pub const OVERFLOW_LIMIT: f64 = 1e12;

/// The precomputed step matrices `P_k = A_k A⁻¹` (and optionally their
/// off-grid counterparts `E_k`).
///
/// Immutable after assembly; shareable across concurrent Monte Carlo workers.
#[derive(Debug, Clone)]
pub struct Propagators {
    /// `P_0..P_m`, each N×N.
    on_grid: Vec<DMatrix<f64>>,
    /// Evaluation points ξ and their M×N matrices `E_0..E_m`.
    off_grid: Option<EvalOperators>,
    /// Set when the kernel smoothness is below the τ ≥ 3 the convergence
    /// theory assumes; the scheme still runs, accuracy claims are off.
    low_smoothness: bool,
}

/// Evaluation points off the grid, paired with the M×N matrices `E_0..E_m`
/// that advance their values from the previous grid state.
#[derive(Debug, Clone)]
pub struct EvalOperators {
    points: Vec<Vec<f64>>,
    matrices: Vec<DMatrix<f64>>,
}

impl EvalOperators {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// `E_k`, `k = 0..=m`.
    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }
}

impl Propagators {
    /// Number of driving noises `m` (the drift matrix is index 0).
    pub fn noise_dim(&self) -> usize {
        self.on_grid.len() - 1
    }

    /// Number of grid points `N`.
    pub fn len(&self) -> usize {
        self.on_grid[0].ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `P_k`, `k = 0..=m`.
    pub fn on_grid(&self, k: usize) -> &DMatrix<f64> {
        &self.on_grid[k]
    }

    /// The evaluation points and their `E_k`, when the propagators were
    /// built with any.
    pub fn off_grid(&self) -> Option<&EvalOperators> {
        self.off_grid.as_ref()
    }

    /// True when the kernel's smoothness parameter is below the τ ≥ 3 the
    /// convergence theory assumes.
    pub fn low_smoothness(&self) -> bool {
        self.low_smoothness
    }
}

/// Assemble `A_k` by applying the operators to kernel translates, and form
/// `P_k = A_k A⁻¹` through solves against the cached factorization (`A` is
/// symmetric, so `P_k = (A⁻¹ A_kᵀ)ᵀ`). With `eval_points`, the matrices `E_k`
/// for the off-grid recursion are built the same way.
pub fn build_propagators(
    model: &impl ZakaiModel,
    sys: &InterpolationSystem,
    eval_points: Option<&[Vec<f64>]>,
) -> Result<Propagators> {
    let d = sys.grid().dim();
    if model.state_dim() != d {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} does not match grid dimension {d}",
            model.state_dim()
        )));
    }
    let kernel = sys.kernel();
    let grid_points = sys.grid().points();
    let m = model.noise_dim();

    let assemble = |rows: &[Vec<f64>]| -> Result<Vec<DMatrix<f64>>> {
        let mut mats = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let mut a_k = DMatrix::zeros(rows.len(), grid_points.len());
            for (j, row_point) in rows.iter().enumerate() {
                for (l, center) in grid_points.iter().enumerate() {
                    let translate = KernelTranslate { kernel, center };
                    a_k[(j, l)] = if k == 0 {
                        apply_l0(model, &translate, row_point)
                    } else {
                        apply_lk(model, k, &translate, row_point)?
                    };
                }
            }
            // A_k A⁻¹ = (A⁻¹ A_kᵀ)ᵀ by symmetry of A.
            mats.push(sys.solve_matrix(&a_k.transpose()).transpose());
        }
        Ok(mats)
    };

    let on_grid = assemble(grid_points)?;
    let off_grid = match eval_points {
        None => None,
        Some([]) => None,
        Some(points) => {
            for (i, p) in points.iter().enumerate() {
                if p.len() != d {
                    return Err(Error::InvalidParameter(format!(
                        "evaluation point {i} has dimension {}, expected {d}",
                        p.len()
                    )));
                }
            }
            Some(EvalOperators {
                points: points.to_vec(),
                matrices: assemble(points)?,
            })
        }
    };

    Ok(Propagators {
        on_grid,
        off_grid,
        low_smoothness: kernel.tau() < 3,
    })
}

/// A sampled Wiener path on a uniform time grid: the increments
/// `ΔW_k(t_i) ~ Normal(0, Δt)` and their running sums.
#[derive(Debug, Clone)]
pub struct WienerPath {
    times: Vec<f64>,
    /// n×m, row `i-1` holding `ΔW_k(t_i)`.
    increments: DMatrix<f64>,
    /// (n+1)×m cumulative values, `W_k(t_0) = 0`.
    path: DMatrix<f64>,
    seed: u64,
    stream: u64,
}

impl WienerPath {
    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.increments.nrows()
    }

    pub fn noise_dim(&self) -> usize {
        self.increments.ncols()
    }

    /// `t_0 = 0 < t_1 < … < t_n = T`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// `ΔW_k(t_i)` for step `i = 1..=n`.
    pub fn increment(&self, i: usize, k: usize) -> f64 {
        self.increments[(i - 1, k)]
    }

    /// `W_k(t_i)` for `i = 0..=n`.
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.path[(i, k)]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Substream index the path was drawn from (the Monte Carlo sample index).
    pub fn stream(&self) -> u64 {
        self.stream
    }
}

/// Draw a Wiener path on the uniform grid `t_i = i·T/n` from a seeded
/// deterministic generator. Same `(n, m, horizon, seed)` → bitwise-identical
/// output.
pub fn generate_wiener(n: usize, m: usize, horizon: f64, seed: u64) -> Result<WienerPath> {
    generate_wiener_stream(n, m, horizon, seed, 0)
}

/// [`generate_wiener`] on an independent substream: Monte Carlo sample `s`
/// draws from stream `s` of the same base seed, so samples are reproducible
/// individually and indifferent to evaluation order.
pub fn generate_wiener_stream(
    n: usize,
    m: usize,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<WienerPath> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "need at least one step and one noise, got n = {n}, m = {m}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time horizon must be positive, got {horizon}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dt = horizon / n as f64;
    let sqrt_dt = dt.sqrt();
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let mut increments = DMatrix::zeros(n, m);
    let mut path = DMatrix::zeros(n + 1, m);
    for i in 0..n {
        for k in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            increments[(i, k)] = sqrt_dt * z;
            path[(i + 1, k)] = path[(i, k)] + increments[(i, k)];
        }
    }
    Ok(WienerPath {
        times,
        increments,
        path,
        seed,
        stream,
    })
}

/// A path with every increment forced to zero, on the same uniform time grid
/// as [`generate_wiener`]. Running the scheme along it isolates the
/// deterministic drift: useful for degenerate-sweep checks and for coupling
/// against the noise-free branch of a closed-form solution.
pub fn zero_wiener(n: usize, m: usize, horizon: f64) -> Result<WienerPath> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "need at least one step and one noise, got n = {n}, m = {m}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time horizon must be positive, got {horizon}"
        )));
    }
    let dt = horizon / n as f64;
    Ok(WienerPath {
        times: (0..=n).map(|i| i as f64 * dt).collect(),
        increments: DMatrix::zeros(n, m),
        path: DMatrix::zeros(n + 1, m),
        seed: 0,
        stream: 0,
    })
}

/// One Euler step: `u + (P_0 u)Δt + Σ_k (P_k u)ΔW_k`, all mat-vecs taken from
/// the same previous state.
pub fn step(u_prev: &DVector<f64>, props: &Propagators, dt: f64, dw: &[f64]) -> DVector<f64> {
    debug_assert!(dt > 0.0);
    debug_assert_eq!(dw.len(), props.noise_dim());
    let mut next = u_prev.clone();
    next.axpy(dt, &(&props.on_grid[0] * u_prev), 1.0);
    for (k, &dw_k) in dw.iter().enumerate() {
        next.axpy(dw_k, &(&props.on_grid[k + 1] * u_prev), 1.0);
    }
    next
}

/// A complete trajectory of the scheme along one Wiener path.
#[derive(Debug, Clone)]
pub struct SolverRun {
    /// (n+1)×N values on the grid, row = time index.
    grid_values: DMatrix<f64>,
    /// (n+1)×M values at the off-grid evaluation points, when any were built.
    eval_values: Option<DMatrix<f64>>,
    path: WienerPath,
    overflow: bool,
}

impl SolverRun {
    pub fn times(&self) -> &[f64] {
        self.path.times()
    }

    /// `u^h(t_i, x_j)`, row = time index.
    pub fn grid_values(&self) -> &DMatrix<f64> {
        &self.grid_values
    }

    /// Values at the off-grid evaluation points, same layout.
    pub fn eval_values(&self) -> Option<&DMatrix<f64>> {
        self.eval_values.as_ref()
    }

    /// The driving Wiener path, for coupling with reference solutions.
    pub fn path(&self) -> &WienerPath {
        &self.path
    }

    /// True when any produced value exceeded [`OVERFLOW_LIMIT`] or turned
    /// non-finite during the run.
    pub fn overflow(&self) -> bool {
        self.overflow
    }
}

/// Advance explicit initial data along a given path. The workhorse behind
/// [`run_with_path`]; exposed for linearity checks and oracle substitutions.
pub fn run_from(
    grid_start: &[f64],
    eval_start: Option<&[f64]>,
    props: &Propagators,
    path: &WienerPath,
) -> Result<SolverRun> {
    let n = path.steps();
    let n_grid = props.len();
    if grid_start.len() != n_grid {
        return Err(Error::InvalidParameter(format!(
            "initial data has {} entries for {n_grid} grid points",
            grid_start.len()
        )));
    }
    if path.noise_dim() != props.noise_dim() {
        return Err(Error::InvalidParameter(format!(
            "path drives {} noises, propagators expect {}",
            path.noise_dim(),
            props.noise_dim()
        )));
    }
    let eval_mats = props.off_grid.as_ref().map(EvalOperators::matrices);
    let eval_start = match (&props.off_grid, eval_start) {
        (None, None) => None,
        (Some(off_grid), Some(values)) => {
            let m_points = off_grid.points().len();
            if values.len() != m_points {
                return Err(Error::InvalidParameter(format!(
                    "initial evaluation data has {} entries for {m_points} points",
                    values.len()
                )));
            }
            Some(values)
        }
        (None, Some(_)) => {
            return Err(Error::InvalidParameter(
                "initial evaluation data given, but the propagators hold no evaluation points"
                    .into(),
            ))
        }
        (Some(_), None) => {
            return Err(Error::InvalidParameter(
                "propagators hold evaluation points but no initial evaluation data was given"
                    .into(),
            ))
        }
    };

    let dt = path.dt();
    let mut grid_values = DMatrix::zeros(n + 1, n_grid);
    let mut overflow = false;
    let mut current = DVector::from_column_slice(grid_start);
    let write_row = |mat: &mut DMatrix<f64>, i: usize, v: &DVector<f64>| {
        for (j, &value) in v.iter().enumerate() {
            mat[(i, j)] = value;
        }
    };
    write_row(&mut grid_values, 0, &current);

    let mut eval_values = eval_start.map(|values| {
        let mut mat = DMatrix::zeros(n + 1, values.len());
        for (j, &value) in values.iter().enumerate() {
            mat[(0, j)] = value;
        }
        mat
    });

    for i in 1..=n {
        let dw: Vec<f64> = (0..props.noise_dim())
            .map(|k| path.increment(i, k))
            .collect();
        // Off-grid points advance from the same previous grid state.
        if let (Some(mats), Some(values)) = (eval_mats, eval_values.as_mut()) {
            let mut drift = &mats[0] * &current;
            drift *= dt;
            for (k, &dw_k) in dw.iter().enumerate() {
                drift.axpy(dw_k, &(&mats[k + 1] * &current), 1.0);
            }
            for j in 0..drift.len() {
                values[(i, j)] = values[(i - 1, j)] + drift[j];
            }
        }
        current = step(&current, props, dt, &dw);
        overflow = overflow
            || current
                .iter()
                .any(|v| !v.is_finite() || v.abs() > OVERFLOW_LIMIT);
        write_row(&mut grid_values, i, &current);
    }
    if let Some(values) = &eval_values {
        overflow = overflow
            || values
                .iter()
                .any(|v| !v.is_finite() || v.abs() > OVERFLOW_LIMIT);
    }

    Ok(SolverRun {
        grid_values,
        eval_values,
        path: path.clone(),
        overflow,
    })
}

/// Run the scheme from the model's initial datum along a given path.
pub fn run_with_path(
    model: &impl ZakaiModel,
    sys: &InterpolationSystem,
    props: &Propagators,
    path: &WienerPath,
) -> Result<SolverRun> {
    let grid_start: Vec<f64> = sys
        .grid()
        .points()
        .iter()
        .map(|p| model.initial(p))
        .collect();
    let eval_start: Option<Vec<f64>> = props
        .off_grid
        .as_ref()
        .map(|off_grid| off_grid.points().iter().map(|p| model.initial(p)).collect());
    run_from(&grid_start, eval_start.as_deref(), props, path)
}

/// Run the scheme from the model's initial datum over `n` uniform steps on
/// `[0, horizon]`, drawing the Wiener path from `seed`.
pub fn run(
    model: &impl ZakaiModel,
    sys: &InterpolationSystem,
    props: &Propagators,
    n: usize,
    horizon: f64,
    seed: u64,
) -> Result<SolverRun> {
    let path = generate_wiener(n, model.noise_dim(), horizon, seed)?;
    run_with_path(model, sys, props, &path)
}

/// The re-interpolation reading of off-grid evaluation: interpolate the grid
/// values and evaluate `I(u)` at the points. Provided for comparison with the
/// recursion-based `eval_values`; the solver itself never uses it.
pub fn reinterpolate(
    sys: &InterpolationSystem,
    grid_values: &[f64],
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let interp = sys.interpolate(grid_values)?;
    points.iter().map(|p| interp.value(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::uniform_grid_1d;
    use crate::interpolation::build_system;
    use crate::kernels::generate_wendland;
    use crate::models::{DifferentiableField, TestModel};
    use approx::assert_abs_diff_eq;

    /// Constant-coefficient model with every coefficient zero except where the
    /// constructor says otherwise; initial datum is a centered bump.
    struct Flat {
        beta: f64,
    }

    impl ZakaiModel for Flat {
        fn state_dim(&self) -> usize {
            1
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn diffusion(&self, _: usize, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn diffusion_d1(&self, _: usize, _: usize, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn diffusion_d2(&self, _: usize, _: usize, _: usize, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn drift(&self, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn drift_d1(&self, _: usize, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn observation(&self, _: usize, _: &[f64]) -> f64 {
            self.beta
        }
        fn coupling(&self, _: usize, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn coupling_d1(&self, _: usize, _: usize, _: usize, _: &[f64]) -> f64 {
            0.0
        }
        fn initial(&self, x: &[f64]) -> f64 {
            (-x[0] * x[0]).exp()
        }
    }

    fn test_system(n: usize, r: f64) -> crate::interpolation::InterpolationSystem {
        let kernel = generate_wendland(1, 4).unwrap().with_scale(0.6).unwrap();
        build_system(kernel, uniform_grid_1d(n, r).unwrap()).unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_propagators() {
        let sys = test_system(6, 1.0);
        let props = build_propagators(&Flat { beta: 0.0 }, &sys, None).unwrap();
        for k in 0..=1 {
            assert!(
                props.on_grid(k).iter().all(|&v| v.abs() < 1e-13),
                "P_{k} should vanish"
            );
        }
    }

    #[test]
    fn unit_observation_gives_identity_noise_propagator() {
        let sys = test_system(6, 1.0);
        let props = build_propagators(&Flat { beta: 1.0 }, &sys, None).unwrap();
        let identity = DMatrix::<f64>::identity(6, 6);
        for j in 0..6 {
            for l in 0..6 {
                assert_abs_diff_eq!(props.on_grid(1)[(j, l)], identity[(j, l)], epsilon = 1e-12);
            }
        }
        assert!(!props.low_smoothness());
    }

    #[test]
    fn low_smoothness_is_flagged_not_rejected() {
        let kernel = generate_wendland(1, 2).unwrap().with_scale(0.6).unwrap();
        let sys = build_system(kernel, uniform_grid_1d(6, 1.0).unwrap()).unwrap();
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        assert!(props.low_smoothness());
    }

    #[test]
    fn propagator_rows_match_interpolate_then_differentiate() {
        // (P_k f|_Γ)_j must equal L_k I(f)(x_j) computed the long way.
        for n in [8usize, 32] {
            let sys = test_system(n, 2.0);
            let props = build_propagators(&TestModel, &sys, None).unwrap();
            let coords = sys.grid().coords_1d().unwrap();
            let values: Vec<f64> = coords.iter().map(|&x| (-x * x).exp() * (1.0 + x)).collect();
            let interp = sys.interpolate(&values).unwrap();
            let v = DVector::from_column_slice(&values);
            for k in 0..=1 {
                let via_matrix = props.on_grid(k) * &v;
                for (j, &x) in coords.iter().enumerate() {
                    let direct = if k == 0 {
                        crate::models::apply_l0(&TestModel, &interp, &[x])
                    } else {
                        crate::models::apply_lk(&TestModel, k, &interp, &[x]).unwrap()
                    };
                    assert!(
                        (via_matrix[j] - direct).abs() <= 1e-8 * direct.abs().max(1.0),
                        "k = {k}, N = {n}, node {j}: {} vs {direct}",
                        via_matrix[j]
                    );
                }
            }
        }
    }

    #[test]
    fn wiener_paths_are_deterministic_and_telescoping() {
        let a = generate_wiener(256, 2, 1.0, 777).unwrap();
        let b = generate_wiener(256, 2, 1.0, 777).unwrap();
        assert_eq!(a.increments, b.increments);
        assert_eq!(a.path, b.path);
        let c = generate_wiener(256, 2, 1.0, 778).unwrap();
        assert_ne!(a.increments, c.increments);
        for k in 0..2 {
            let total: f64 = (1..=256).map(|i| a.increment(i, k)).sum();
            assert!((a.value(256, k) - total).abs() < 1e-12);
        }
        assert_eq!(a.times().len(), 257);
        assert_abs_diff_eq!(a.times()[256], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn substreams_differ_and_are_reproducible() {
        let s0 = generate_wiener_stream(32, 1, 1.0, 9, 0).unwrap();
        let s1 = generate_wiener_stream(32, 1, 1.0, 9, 1).unwrap();
        let s1_again = generate_wiener_stream(32, 1, 1.0, 9, 1).unwrap();
        assert_ne!(s0.increments, s1.increments);
        assert_eq!(s1.increments, s1_again.increments);
        assert_eq!(
            generate_wiener(32, 1, 1.0, 9).unwrap().increments,
            s0.increments
        );
    }

    #[test]
    fn increment_sample_mean_is_within_clt_bound() {
        let n = 1_000_000;
        let path = generate_wiener(n, 1, 1.0, 4242).unwrap();
        let dt = 1.0 / n as f64;
        let mean: f64 = (1..=n).map(|i| path.increment(i, 0)).sum::<f64>() / n as f64;
        assert!(
            mean.abs() < 4.0 * dt.sqrt() / 1e3,
            "sample mean {mean} outside the 4σ band"
        );
    }

    #[test]
    fn step_trivial_cases() {
        let sys = test_system(4, 1.0);
        let zero_props = build_propagators(&Flat { beta: 0.0 }, &sys, None).unwrap();
        let u = DVector::from_column_slice(&[1.0, -2.0, 3.0, 0.5]);
        // All propagators zero → state unchanged.
        assert_eq!(step(&u, &zero_props, 0.01, &[0.3]), u);
        // Zero state stays zero.
        let zero = DVector::zeros(4);
        assert_eq!(step(&zero, &zero_props, 0.01, &[0.3]), zero);
        // P_1 = I, P_0 ≈ 0 → multiplication by (1 + ΔW).
        let unit_props = build_propagators(&Flat { beta: 1.0 }, &sys, None).unwrap();
        let stepped = step(&u, &unit_props, 0.01, &[0.1]);
        for j in 0..4 {
            assert_abs_diff_eq!(stepped[j], u[j] * 1.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let sys = test_system(8, 2.0);
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        let path = generate_wiener(16, 1, 1.0, 3).unwrap();
        let run = run_from(&[0.0; 8], None, &props, &path).unwrap();
        assert!(run.grid_values().iter().all(|&v| v == 0.0));
        assert!(!run.overflow());
    }

    #[test]
    fn single_step_run_equals_step() {
        let sys = test_system(8, 2.0);
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        let path = generate_wiener(1, 1, 0.25, 17).unwrap();
        let run = run_with_path(&TestModel, &sys, &props, &path).unwrap();
        let u0: Vec<f64> = sys
            .grid()
            .points()
            .iter()
            .map(|p| TestModel.initial(p))
            .collect();
        let manual = step(
            &DVector::from_column_slice(&u0),
            &props,
            0.25,
            &[path.increment(1, 0)],
        );
        for j in 0..8 {
            assert_eq!(run.grid_values()[(0, j)], u0[j]);
            assert_eq!(run.grid_values()[(1, j)], manual[j]);
        }
    }

    #[test]
    fn run_is_linear_in_the_initial_data() {
        let sys = test_system(10, 2.0);
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        let path = generate_wiener(64, 1, 1.0, 21).unwrap();
        let coords = sys.grid().coords_1d().unwrap();
        let f: Vec<f64> = coords.iter().map(|&x| (-x * x).exp()).collect();
        let g: Vec<f64> = coords.iter().map(|&x| x.sin()).collect();
        let (alpha, beta) = (1.7, -0.4);
        let combo: Vec<f64> = f
            .iter()
            .zip(&g)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let run_f = run_from(&f, None, &props, &path).unwrap();
        let run_g = run_from(&g, None, &props, &path).unwrap();
        let run_combo = run_from(&combo, None, &props, &path).unwrap();
        for i in [0usize, 13, 64] {
            for j in 0..10 {
                let expected =
                    alpha * run_f.grid_values()[(i, j)] + beta * run_g.grid_values()[(i, j)];
                let got = run_combo.grid_values()[(i, j)];
                assert!(
                    (got - expected).abs() <= 1e-10 * expected.abs().max(1.0),
                    "linearity broken at ({i},{j}): {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn off_grid_recursion_agrees_with_grid_at_shared_points() {
        let sys = test_system(12, 2.0);
        let coords = sys.grid().coords_1d().unwrap();
        // The ξ list mixes two grid points with genuine off-grid points.
        let eval_points = vec![vec![coords[3]], vec![0.123], vec![coords[8]], vec![-1.456]];
        let props = build_propagators(&TestModel, &sys, Some(&eval_points)).unwrap();
        let path = generate_wiener(128, 1, 1.0, 5).unwrap();
        let run = run_with_path(&TestModel, &sys, &props, &path).unwrap();
        let eval = run.eval_values().unwrap();
        for i in 0..=128 {
            for (col, j) in [(0usize, 3usize), (2, 8)] {
                assert!(
                    (eval[(i, col)] - run.grid_values()[(i, j)]).abs() < 1e-12,
                    "shared point diverged at step {i}"
                );
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let sys = test_system(8, 2.0);
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        let a = run(&TestModel, &sys, &props, 32, 1.0, 99).unwrap();
        let b = run(&TestModel, &sys, &props, 32, 1.0, 99).unwrap();
        assert_eq!(a.grid_values(), b.grid_values());
    }

    #[test]
    fn single_path_against_closed_form_stays_in_expected_band() {
        // One fixed-seed trajectory at experiment scale: errors of order 1e-2.
        let model = TestModel;
        let r = crate::grid::radius_schedule(32, 4).unwrap();
        let sys = test_system(32, r);
        let props = build_propagators(&model, &sys, None).unwrap();
        let run = run(&model, &sys, &props, 1024, 1.0, 2718).unwrap();
        assert!(!run.overflow());
        let coords = sys.grid().coords_1d().unwrap();
        let w_final = run.path().value(1024, 0);
        let mut max_err = 0.0f64;
        let mut bulk_positive = true;
        for (j, &x) in coords.iter().enumerate() {
            let approx = run.grid_values()[(1024, j)];
            assert!(approx.is_finite());
            if x.abs() < 2.0 && approx <= 0.0 {
                bulk_positive = false;
            }
            max_err = max_err.max((approx - model.closed_form_solution(1.0, x, w_final)).abs());
        }
        assert!(bulk_positive, "final values non-positive in the bulk");
        assert!(
            max_err < 0.1,
            "final-time error {max_err} far above the expected 1e-2 order"
        );
        assert!(
            max_err > 1e-4,
            "error {max_err} implausibly small for Δt = 1/1024"
        );
    }

    #[test]
    fn reinterpolation_reproduces_grid_values_at_nodes() {
        let sys = test_system(10, 2.0);
        let coords = sys.grid().coords_1d().unwrap();
        let values: Vec<f64> = coords.iter().map(|&x| x.cos()).collect();
        let points: Vec<Vec<f64>> = coords.iter().map(|&x| vec![x]).collect();
        let back = reinterpolate(&sys, &values, &points).unwrap();
        for (a, b) in back.iter().zip(&values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let sys = test_system(6, 1.0);
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        let path = generate_wiener(8, 1, 1.0, 1).unwrap();
        assert!(run_from(&[0.0; 5], None, &props, &path).is_err());
        assert!(run_from(&[0.0; 6], Some(&[0.0]), &props, &path).is_err());
        let two_noise = generate_wiener(8, 2, 1.0, 1).unwrap();
        assert!(run_from(&[0.0; 6], None, &props, &two_noise).is_err());
        assert!(generate_wiener(0, 1, 1.0, 1).is_err());
        assert!(generate_wiener(8, 1, 0.0, 1).is_err());
        let bad_eval = vec![vec![0.1, 0.2]];
        assert!(build_propagators(&TestModel, &sys, Some(&bad_eval)).is_err());
    }

    #[test]
    fn zero_path_runs_the_pure_drift_recursion() {
        let path = zero_wiener(16, 1, 0.5).unwrap();
        assert_eq!(path.steps(), 16);
        assert!(path.increments.iter().all(|&v| v == 0.0));
        let sys = test_system(8, 2.0);
        let props = build_propagators(&TestModel, &sys, None).unwrap();
        let run = run_with_path(&TestModel, &sys, &props, &path).unwrap();
        // Same trajectory as stepping with P_0 alone.
        let coords = sys.grid().coords_1d().unwrap();
        let mut u = DVector::from_iterator(8, coords.iter().map(|&x| TestModel.initial(&[x])));
        let dt = path.dt();
        for i in 1..=16 {
            u = &u + (props.on_grid(0) * &u) * dt;
            for j in 0..8 {
                assert_abs_diff_eq!(run.grid_values()[(i, j)], u[j], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn interpolant_field_adapter_matches_row_solves() {
        // The DifferentiableField view of an interpolant must agree with the
        // cardinal-row evaluation path.
        let sys = test_system(9, 1.5);
        let coords = sys.grid().coords_1d().unwrap();
        let values: Vec<f64> = coords.iter().map(|&x| (x * 1.3).sin()).collect();
        let interp = sys.interpolate(&values).unwrap();
        let v = DVector::from_column_slice(&values);
        for &x in &[0.17, -0.93, 1.2] {
            let row0 = sys.cardinal_derivative_row(&[0], &[x]).unwrap();
            let row1 = sys.cardinal_derivative_row(&[1], &[x]).unwrap();
            let row2 = sys.cardinal_derivative_row(&[2], &[x]).unwrap();
            assert_abs_diff_eq!(interp.value(&[x]).unwrap(), row0.dot(&v), epsilon = 1e-11);
            assert_abs_diff_eq!(
                DifferentiableField::gradient(&interp, 0, &[x]),
                row1.dot(&v),
                epsilon = 1e-11
            );
            assert_abs_diff_eq!(
                DifferentiableField::hessian(&interp, 0, 0, &[x]),
                row2.dot(&v),
                epsilon = 1e-10
            );
        }
    }
}
