//! Implicit-Euler finite differences on `[-R, R]` — the comparison scheme the
//! collocation solver is measured against.
//!
//! The grid is the N interior points `x_j = -R + jΔx`, `Δx = 2R/(N+1)`, with
//! zero Dirichlet values pinned at `±R`. The drift generator is discretized by
//! central differences,
//!
//! ```text
//! (L̃u)_j = a(x_j)·(u_{j+1} - 2u_j + u_{j-1})/(2Δx²)
//!        + (b(x_{j+1})u_{j+1} - b(x_{j-1})u_{j-1})/(2Δx),
//! ```
//!
//! and one time step solves `(I - Δt·L̃)ũ_{i+1} = ũ_i + (B̃ũ_i)ΔW(t_{i+1})`,
//! where `B̃` discretizes the observation operator the same way (for a model
//! with unit observation and no coupling, the right-hand side is the familiar
//! `ũ_i(1 + ΔW)`). The implicit matrix is tridiagonal and diagonally dominant
//! for the configurations exercised here, so a dedicated O(N) elimination
//! solves each step without pivoting.
//!
//! Restricted to one state dimension and one noise; that is the setting the
//! scheme is quoted in, and higher-dimensional stencils are out of scope.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::ZakaiModel;
use crate::solver::{WienerPath, OVERFLOW_LIMIT};

/// A tridiagonal operator on the interior grid. `lower[0]` and
/// `upper[len-1]` are unused (those neighbors are the zero boundary values).
#[derive(Debug, Clone)]
struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|j| {
                let mut v = self.diag[j] * u[j];
                if j > 0 {
                    v += self.lower[j] * u[j - 1];
                }
                if j + 1 < n {
                    v += self.upper[j] * u[j + 1];
                }
                v
            })
            .collect()
    }
}

/// Precomputed LU factors of a tridiagonal matrix (Thomas elimination without
/// pivoting; pivot magnitudes checked at factorization time).
#[derive(Debug, Clone)]
struct TridiagonalFactors {
    /// Row multipliers `w_j = lower_j / pivot_{j-1}`.
    multipliers: Vec<f64>,
    /// Modified diagonal (the pivots).
    pivots: Vec<f64>,
    /// The unchanged superdiagonal.
    upper: Vec<f64>,
}

impl TridiagonalFactors {
    fn new(matrix: &Tridiagonal) -> Result<Self> {
        let n = matrix.diag.len();
        let mut multipliers = vec![0.0; n];
        let mut pivots = vec![0.0; n];
        pivots[0] = matrix.diag[0];
        for j in 1..n {
            if pivots[j - 1].abs() < 1e-300 {
                return Err(Error::SolveFailed(format!(
                    "tridiagonal pivot {} vanished at row {}",
                    pivots[j - 1],
                    j - 1
                )));
            }
            multipliers[j] = matrix.lower[j] / pivots[j - 1];
            pivots[j] = matrix.diag[j] - multipliers[j] * matrix.upper[j - 1];
        }
        if pivots[n - 1].abs() < 1e-300 {
            return Err(Error::SolveFailed(format!(
                "tridiagonal pivot {} vanished at row {}",
                pivots[n - 1],
                n - 1
            )));
        }
        Ok(TridiagonalFactors {
            multipliers,
            pivots,
            upper: matrix.upper.clone(),
        })
    }

    /// Solve in place: forward-eliminate, then back-substitute.
    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for j in 1..n {
            rhs[j] -= self.multipliers[j] * rhs[j - 1];
        }
        rhs[n - 1] /= self.pivots[n - 1];
        for j in (0..n - 1).rev() {
            rhs[j] = (rhs[j] - self.upper[j] * rhs[j + 1]) / self.pivots[j];
        }
    }
}

/// The spatial discretization: grid, drift generator `L̃`, and noise
/// generator `B̃`. Immutable once built; concurrent runs share it.
#[derive(Debug, Clone)]
pub struct FdScheme {
    coords: Vec<f64>,
    spacing: f64,
    half_width: f64,
    drift: Tridiagonal,
    noise: Tridiagonal,
}

/// Discretize a one-dimensional, single-noise model on the N interior points
/// of `[-r, r]`.
pub fn build_fd(model: &impl ZakaiModel, n: usize, r: f64) -> Result<FdScheme> {
    if model.state_dim() != 1 || model.noise_dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "finite-difference scheme covers d = 1, m = 1 models only, got d = {}, m = {}",
            model.state_dim(),
            model.noise_dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "need at least one interior grid point".into(),
        ));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "domain half-width must be positive, got {r}"
        )));
    }
    let dx = 2.0 * r / (n + 1) as f64;
    let coords: Vec<f64> = (1..=n).map(|j| -r + j as f64 * dx).collect();

    let mut drift = Tridiagonal::zeros(n);
    let mut noise = Tridiagonal::zeros(n);
    for j in 0..n {
        let x = [coords[j]];
        let a = model.diffusion(0, 0, &x);
        drift.diag[j] = -a / (dx * dx);
        noise.diag[j] = model.observation(0, &x);
        // Neighbor terms carry the divergence-form drift and coupling,
        // evaluated at the neighbor; rows touching the boundary drop the
        // outside term because the boundary value is pinned to zero.
        if j > 0 {
            let left = [coords[j - 1]];
            drift.lower[j] = 0.5 * a / (dx * dx) - model.drift(0, &left) / (2.0 * dx);
            noise.lower[j] = -model.coupling(0, 0, &left) / (2.0 * dx);
        }
        if j + 1 < n {
            let right = [coords[j + 1]];
            drift.upper[j] = 0.5 * a / (dx * dx) + model.drift(0, &right) / (2.0 * dx);
            noise.upper[j] = model.coupling(0, 0, &right) / (2.0 * dx);
        }
    }

    Ok(FdScheme {
        coords,
        spacing: dx,
        half_width: r,
        drift,
        noise,
    })
}

impl FdScheme {
    /// Interior grid coordinates, ascending.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Grid spacing `Δx = 2R/(N+1)`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `L̃u` on the interior grid.
    pub fn apply_drift(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.len());
        self.drift.apply(u)
    }

    /// `B̃u` on the interior grid.
    pub fn apply_noise(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.len());
        self.noise.apply(u)
    }

    /// Factor `I - Δt·L̃` for the given step size.
    fn implicit_factors(&self, dt: f64) -> Result<TridiagonalFactors> {
        let n = self.len();
        let mut matrix = Tridiagonal::zeros(n);
        for j in 0..n {
            matrix.diag[j] = 1.0 - dt * self.drift.diag[j];
            matrix.lower[j] = -dt * self.drift.lower[j];
            matrix.upper[j] = -dt * self.drift.upper[j];
        }
        TridiagonalFactors::new(&matrix)
    }
}

/// A finite-difference trajectory along one Wiener path.
#[derive(Debug, Clone)]
pub struct FdRun {
    times: Vec<f64>,
    /// (n+1)×N values on the interior grid, row = time index.
    values: DMatrix<f64>,
    overflow: bool,
}

impl FdRun {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `ũ(t_i, x_j)`, row = time index — same layout as the collocation run.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// True when any value exceeded [`OVERFLOW_LIMIT`] or turned non-finite.
    pub fn overflow(&self) -> bool {
        self.overflow
    }
}

/// Advance initial grid values by implicit Euler along the given path. The
/// path is the same object the collocation solver consumes, so paired-sample
/// comparisons couple both methods to identical increments.
pub fn fd_run(scheme: &FdScheme, u0: &[f64], path: &WienerPath) -> Result<FdRun> {
    let n_grid = scheme.len();
    if u0.len() != n_grid {
        return Err(Error::InvalidParameter(format!(
            "initial data has {} entries for {n_grid} grid points",
            u0.len()
        )));
    }
    if path.noise_dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "finite-difference run drives exactly one noise, path carries {}",
            path.noise_dim()
        )));
    }
    let n = path.steps();
    let dt = path.dt();
    let factors = scheme.implicit_factors(dt)?;

    let mut values = DMatrix::zeros(n + 1, n_grid);
    let mut current = u0.to_vec();
    let mut overflow = false;
    for (j, &v) in current.iter().enumerate() {
        values[(0, j)] = v;
    }
    for i in 1..=n {
        let dw = path.increment(i, 0);
        let noise_term = scheme.apply_noise(&current);
        let mut rhs: Vec<f64> = current
            .iter()
            .zip(&noise_term)
            .map(|(&u, &bu)| u + bu * dw)
            .collect();
        factors.solve(&mut rhs);
        current = rhs;
        for (j, &v) in current.iter().enumerate() {
            overflow = overflow || !v.is_finite() || v.abs() > OVERFLOW_LIMIT;
            values[(i, j)] = v;
        }
    }

    Ok(FdRun {
        times: path.times().to_vec(),
        values,
        overflow,
    })
}

/// Run from the model's own initial datum sampled on the scheme's grid.
pub fn fd_run_from_model(
    model: &impl ZakaiModel,
    scheme: &FdScheme,
    path: &WienerPath,
) -> Result<FdRun> {
    let u0: Vec<f64> = scheme.coords.iter().map(|&x| model.initial(&[x])).collect();
    fd_run(scheme, &u0, path)
}
