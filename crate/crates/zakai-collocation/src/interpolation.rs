//! Symmetric kernel interpolation on a collocation grid.
//!
//! For a grid Γ = {x_1, …, x_N} and kernel Φ, the Gram matrix
//! `A = {Φ(x_j - x_ℓ)}` is symmetric positive definite, and a function sampled
//! on Γ is interpolated by
//!
//! ```text
//! I(f)(x) = Σ_j (A⁻¹ f|_Γ)_j Φ(x - x_j).
//! ```
//!
//! The same data define the cardinal functions
//! `Q_j(x) = Σ_i (A⁻¹)_{ij} Φ(x - x_i)` with `Q_j(x_i) = δ_{ij}`; rows of their
//! derivatives drive both the time stepper and the stability diagnostics. The
//! system also exposes ι, a sparsity measure of `A⁻¹`: the maximum over rows of
//! the number of entries exceeding `c₁·(Δ₂x)^d/N` in absolute value. Bounded
//! growth of ι underpins the stability of the time-stepping scheme, and the
//! experiment suite checks it against the reference bound `5/Δ₂x`.
//!
//! Everything is dense: the factorization is a Cholesky decomposition computed
//! once at build time, and ι recovers `A⁻¹` explicitly through N solves. That is
//! deliberate — the experiments run at desk scale (N ≤ ~1024), where dense
//! factorizations are fast and numerically transparent.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::grid::CollocationGrid;
use crate::kernels::PiecewiseKernel;

/// A factorized kernel collocation system on a grid.
///
/// Immutable after construction; the cached factorization is read-only, so
/// concurrent solves from multiple threads are safe.
#[derive(Debug, Clone)]
pub struct InterpolationSystem {
    kernel: PiecewiseKernel,
    grid: CollocationGrid,
    matrix: DMatrix<f64>,
    factorization: Cholesky<f64, Dyn>,
}

/// Assemble `A = {Φ(x_j - x_ℓ)}` and factorize it.
///
/// Fails with [`Error::NotPositiveDefinite`] when the Cholesky factorization
/// breaks down (near-coincident points or an extreme kernel scale); the caller
/// must change the scale or the grid — the matrix is never regularized, since
/// a masked near-singularity would corrupt every diagnostic built on `A⁻¹`.
pub fn build_system(kernel: PiecewiseKernel, grid: CollocationGrid) -> Result<InterpolationSystem> {
    if kernel.dim() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "kernel dimension {} does not match grid dimension {}",
            kernel.dim(),
            grid.dim()
        )));
    }
    let n = grid.len();
    let points = grid.points();
    let mut matrix = DMatrix::zeros(n, n);
    for j in 0..n {
        matrix[(j, j)] = 1.0;
        for l in 0..j {
            let v = kernel.eval(&points[j], &points[l]);
            // Mirrored assignment keeps A symmetric to the bit.
            matrix[(j, l)] = v;
            matrix[(l, j)] = v;
        }
    }
    let factorization = Cholesky::new(matrix.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite(format!(
            "Cholesky factorization failed for N = {n}, scale = {}",
            kernel.scale()
        ))
    })?;
    Ok(InterpolationSystem {
        kernel,
        grid,
        matrix,
        factorization,
    })
}

impl InterpolationSystem {
    pub fn kernel(&self) -> &PiecewiseKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &CollocationGrid {
        &self.grid
    }

    /// The Gram matrix `A`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of collocation points `N`.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Solve `A z = rhs` against the cached factorization.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factorization.solve(rhs)
    }

    /// Solve `A Z = Rhs` column-by-column against the cached factorization.
    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.factorization.solve(rhs)
    }

    /// `A⁻¹`, computed explicitly from the factorization.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.factorization.inverse()
    }

    /// Interpolate values sampled on the grid.
    pub fn interpolate(&self, values: &[f64]) -> Result<Interpolant<'_>> {
        if values.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "got {} values for {} grid points",
                values.len(),
                self.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "interpolation values must be finite".into(),
            ));
        }
        let coeffs = self.solve(&DVector::from_column_slice(values));
        Ok(Interpolant { sys: self, coeffs })
    }

    /// The row `(D^α Q_1(x), …, D^α Q_N(x))` of cardinal-function derivatives,
    /// for a multi-index with `|α|₁ ≤ 2`.
    ///
    /// Computed as `A⁻¹ v` with `v_i = D^α Φ(x - x_i)`, which equals the row by
    /// symmetry of `A`. For `α = 0` and `x = x_i` the result is the `i`-th unit
    /// vector (cardinality).
    pub fn cardinal_derivative_row(&self, alpha: &[usize], x: &[f64]) -> Result<DVector<f64>> {
        let v = self.kernel_column(alpha, x)?;
        Ok(self.solve(&v))
    }

    /// `v_i = D^α Φ(x - x_i)` for all grid points; the raw column entering
    /// [`Self::cardinal_derivative_row`].
    pub fn kernel_column(&self, alpha: &[usize], x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "evaluation point has dimension {}, expected {}",
                x.len(),
                self.grid.dim()
            )));
        }
        let points = self.grid.points();
        let mut v = DVector::zeros(self.len());
        for (i, p) in points.iter().enumerate() {
            v[i] = self.kernel.derivative(alpha, x, p)?;
        }
        Ok(v)
    }

    /// The inverse-decay diagnostic ι: compute `A⁻¹` explicitly, count per-row
    /// entries with `|(A⁻¹)_{ij}| > c₁·(Δ₂x)^d/N`, and return the maximum row
    /// count. Rejected for a single-point grid, whose separation distance is
    /// undefined.
    pub fn iota_diagnostic(&self, c1: f64) -> Result<usize> {
        if self.len() < 2 {
            return Err(Error::InvalidParameter(
                "ι is undefined for fewer than 2 points (no separation distance)".into(),
            ));
        }
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ι threshold constant must be positive, got {c1}"
            )));
        }
        let n = self.len();
        let threshold = c1 * self.grid.sep().powi(self.grid.dim() as i32) / n as f64;
        let inverse = self.inverse();
        let max_row_count = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| inverse[(i, j)].abs() > threshold)
                    .count()
            })
            .max()
            .unwrap_or(0);
        Ok(max_row_count)
    }

    /// Smallest eigenvalue and 2-norm condition number of `A`, from a dense
    /// symmetric eigensolve. Diagnostic only; desk scale.
    pub fn conditioning_report(&self) -> (f64, f64) {
        let eigen = self.matrix.clone().symmetric_eigenvalues();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in eigen.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi / lo)
    }
}

/// A function interpolated on the grid: holds `c = A⁻¹ f|_Γ` and evaluates
/// `I(f)` and its derivatives anywhere.
#[derive(Debug, Clone)]
pub struct Interpolant<'a> {
    sys: &'a InterpolationSystem,
    coeffs: DVector<f64>,
}

impl Interpolant<'_> {
    /// The coefficient vector `c = A⁻¹ f|_Γ`.
    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    /// `I(f)(x) = Σ_j c_j Φ(x - x_j)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.derivative(&vec![0; self.sys.grid.dim()], x)
    }

    /// `D^α I(f)(x)` for `|α|₁ ≤ 2`.
    pub fn derivative(&self, alpha: &[usize], x: &[f64]) -> Result<f64> {
        let v = self.sys.kernel_column(alpha, x)?;
        Ok(self.coeffs.dot(&v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{uniform_grid_1d, CollocationGrid};
    use crate::kernels::generate_wendland;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn system_1d(n: usize, r: f64, scale: f64) -> InterpolationSystem {
        let kernel = generate_wendland(1, 4).unwrap().with_scale(scale).unwrap();
        build_system(kernel, uniform_grid_1d(n, r).unwrap()).unwrap()
    }

    #[test]
    fn single_point_system_is_identity() {
        let kernel = generate_wendland(1, 4).unwrap();
        let grid = CollocationGrid::from_points(vec![vec![0.25]], 1.0).unwrap();
        let sys = build_system(kernel, grid).unwrap();
        assert_eq!(sys.matrix().nrows(), 1);
        assert_eq!(sys.matrix()[(0, 0)], 1.0);
        let z = sys.solve(&DVector::from_column_slice(&[3.5]));
        assert_eq!(z[0], 3.5);
        // ι needs a separation distance.
        assert!(sys.iota_diagnostic(1.0).is_err());
    }

    #[test]
    fn three_point_system_matches_direct_evaluation() {
        let kernel = generate_wendland(1, 4).unwrap();
        let points = [-0.5, 0.0, 0.5];
        let grid =
            CollocationGrid::from_points(points.iter().map(|&x| vec![x]).collect(), 1.0).unwrap();
        let sys = build_system(kernel.clone(), grid).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                assert_eq!(
                    sys.matrix()[(j, l)],
                    kernel.eval(&[points[j]], &[points[l]]),
                    "assembled entry ({j},{l}) differs from direct evaluation"
                );
            }
        }
        let product = sys.inverse() * sys.matrix();
        for j in 0..3 {
            for l in 0..3 {
                let expected = if j == l { 1.0 } else { 0.0 };
                assert!(
                    (product[(j, l)] - expected).abs() < 1e-12,
                    "A⁻¹A deviates from identity at ({j},{l}): {}",
                    product[(j, l)]
                );
            }
        }
    }

    #[test]
    fn cardinal_row_matches_cofactor_inverse_oracle() {
        // Independent 3×3 inversion via the adjugate.
        let kernel = generate_wendland(1, 4).unwrap();
        let points = [-0.5, 0.0, 0.5];
        let grid =
            CollocationGrid::from_points(points.iter().map(|&x| vec![x]).collect(), 1.0).unwrap();
        let sys = build_system(kernel.clone(), grid).unwrap();
        let a = sys.matrix();
        let det = a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
            - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
            + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
        let cofactor = |i: usize, j: usize| {
            let (r1, r2) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c1, c2) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = a[(r1, c1)] * a[(r2, c2)] - a[(r1, c2)] * a[(r2, c1)];
            if (i + j).is_multiple_of(2) {
                minor
            } else {
                -minor
            }
        };
        let mut inv = [[0.0f64; 3]; 3];
        for (j, inv_row) in inv.iter_mut().enumerate() {
            for (i, entry) in inv_row.iter_mut().enumerate() {
                *entry = cofactor(i, j) / det;
            }
        }
        let x = [0.37];
        let row = sys.cardinal_derivative_row(&[0], &x).unwrap();
        for j in 0..3 {
            let direct: f64 = (0..3)
                .map(|i| inv[i][j] * kernel.eval(&x, &[points[i]]))
                .sum();
            assert_abs_diff_eq!(row[j], direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn far_separated_points_give_identity_gram_matrix() {
        let kernel = generate_wendland(1, 4).unwrap().with_scale(0.1).unwrap();
        let sys = build_system(kernel, uniform_grid_1d(5, 1.0).unwrap()).unwrap();
        assert_eq!(sys.matrix(), &DMatrix::identity(5, 5));
        assert_eq!(sys.iota_diagnostic(1.0).unwrap(), 1);
        let (lambda_min, cond) = sys.conditioning_report();
        assert_abs_diff_eq!(lambda_min, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cond, 1.0, epsilon = 1e-12);
        // Beyond the support of every translate the cardinal row vanishes
        // (grid spacing 1/3, so the midpoint 1/6 is over 0.1 from every node).
        let row = sys.cardinal_derivative_row(&[0], &[1.0 / 6.0]).unwrap();
        assert!(row.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_point_conditioning_matches_closed_form() {
        let kernel = generate_wendland(1, 4).unwrap();
        let points = vec![vec![-0.2], vec![0.2]];
        let grid = CollocationGrid::from_points(points, 1.0).unwrap();
        let sys = build_system(kernel.clone(), grid).unwrap();
        let a = kernel.eval(&[-0.2], &[0.2]);
        assert!(a > 0.0 && a < 1.0);
        let (lambda_min, cond) = sys.conditioning_report();
        assert_abs_diff_eq!(lambda_min, 1.0 - a, epsilon = 1e-12);
        assert_abs_diff_eq!(cond, (1.0 + a) / (1.0 - a), epsilon = 1e-12);
    }

    #[test]
    fn interpolation_reproduces_samples() {
        let sys = system_1d(24, 2.0, 1.0);
        let coords = sys.grid().coords_1d().unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for _ in 0..50 {
            let values: Vec<f64> = (0..24).map(|_| rng.random_range(-3.0..3.0)).collect();
            let interp = sys.interpolate(&values).unwrap();
            for (j, &x) in coords.iter().enumerate() {
                let reproduced = interp.value(&[x]).unwrap();
                assert!(
                    (reproduced - values[j]).abs() / (1.0 + values[j].abs()) < 1e-8,
                    "reproduction failed at node {j}: {reproduced} vs {}",
                    values[j]
                );
            }
        }
    }

    #[test]
    fn zero_values_interpolate_to_zero_everywhere() {
        let sys = system_1d(8, 1.0, 1.0);
        let interp = sys.interpolate(&[0.0; 8]).unwrap();
        for i in 0..50 {
            let x = -1.0 + i as f64 * 0.04;
            assert_eq!(interp.value(&[x]).unwrap(), 0.0);
            assert_eq!(interp.derivative(&[1], &[x]).unwrap(), 0.0);
            assert_eq!(interp.derivative(&[2], &[x]).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_translate_samples_recover_unit_coefficients() {
        let sys = system_1d(12, 1.5, 1.0);
        let coords = sys.grid().coords_1d().unwrap();
        let values: Vec<f64> = coords
            .iter()
            .map(|&x| sys.kernel().eval(&[x], &[coords[0]]))
            .collect();
        let interp = sys.interpolate(&values).unwrap();
        for (j, &c) in interp.coeffs().iter().enumerate() {
            let expected = if j == 0 { 1.0 } else { 0.0 };
            assert!(
                (c - expected).abs() < 1e-10,
                "coefficient {j} should be {expected}, got {c}"
            );
        }
    }

    #[test]
    fn cardinality_holds_up_to_64_points() {
        let sys = system_1d(64, 4.0, 1.0);
        let coords = sys.grid().coords_1d().unwrap();
        for (i, &x) in coords.iter().enumerate() {
            let row = sys.cardinal_derivative_row(&[0], &[x]).unwrap();
            for j in 0..64 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (row[j] - expected).abs() < 1e-8,
                    "Q_{j}(x_{i}) = {} deviates from {expected}",
                    row[j]
                );
            }
        }
    }

    #[test]
    fn interpolant_derivatives_match_finite_differences() {
        let sys = system_1d(20, 2.0, 1.0);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2024);
        let values: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let interp = sys.interpolate(&values).unwrap();
        for _ in 0..20 {
            let x = rng.random_range(-1.9..1.9);
            let v = |t: f64| interp.value(&[t]).unwrap();
            let d1_fd = (v(x + 1e-5) - v(x - 1e-5)) / 2e-5;
            let d1 = interp.derivative(&[1], &[x]).unwrap();
            assert!(
                (d1 - d1_fd).abs() <= (1e-5 * d1.abs()).max(1e-7),
                "first derivative {d1} vs finite difference {d1_fd} at x = {x}"
            );
            let h = 1e-4;
            let d2_fd = (v(x + h) - 2.0 * v(x) + v(x - h)) / (h * h);
            let d2 = interp.derivative(&[2], &[x]).unwrap();
            assert!(
                (d2 - d2_fd).abs() <= (1e-5 * d2.abs()).max(1e-4),
                "second derivative {d2} vs finite difference {d2_fd} at x = {x}"
            );
        }
    }

    #[test]
    fn iota_matches_brute_force_recount() {
        for n in [4usize, 16, 32] {
            let sys = system_1d(n, 1.0 + n as f64 / 10.0, 1.0);
            // Independent inverse through LU decomposition.
            let inverse = sys.matrix().clone().try_inverse().unwrap();
            let threshold = sys.grid().sep() / n as f64;
            let brute = (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| inverse[(i, j)].abs() > threshold)
                        .count()
                })
                .max()
                .unwrap();
            assert_eq!(
                sys.iota_diagnostic(1.0).unwrap(),
                brute,
                "ι mismatch at N = {n}"
            );
        }
    }

    #[test]
    fn stability_proxy_stays_bounded_under_refinement() {
        // sup over 401 sample points of Σ_j |D^α Q_j(x)| under the scheduled
        // radius. Bounded growth requires a moderate kernel scale relative to
        // the ~0.2 grid spacing; the shipped experiment default is validated
        // separately in the acceptance suite.
        let mut sups = Vec::new();
        for n in [16usize, 32, 64, 128] {
            let r = crate::grid::radius_schedule(n, 4).unwrap();
            let sys = system_1d(n, r, 0.6);
            let mut sup = [0.0f64; 3];
            for s in 0..401 {
                let x = -r + 2.0 * r * s as f64 / 400.0;
                if x.abs() >= r {
                    continue;
                }
                for (order, sup_entry) in sup.iter_mut().enumerate() {
                    let row = sys.cardinal_derivative_row(&[order], &[x]).unwrap();
                    *sup_entry = sup_entry.max(row.iter().map(|v| v.abs()).sum());
                }
            }
            sups.push(sup);
        }
        for (order, (last, first)) in sups[3].iter().zip(&sups[0]).enumerate() {
            assert!(
                *last < 2.0 * first,
                "order-{order} row sums grew from {first} to {last}"
            );
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let kernel = generate_wendland(2, 4).unwrap();
        let grid = uniform_grid_1d(4, 1.0).unwrap();
        assert!(build_system(kernel, grid).is_err());
        let sys = system_1d(4, 1.0, 1.0);
        assert!(sys.interpolate(&[1.0, 2.0]).is_err());
        assert!(sys.interpolate(&[f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(sys.cardinal_derivative_row(&[0, 0], &[0.1, 0.2]).is_err());
        assert!(sys.iota_diagnostic(0.0).is_err());
    }
}
