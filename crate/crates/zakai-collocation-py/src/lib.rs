//! Python bindings for the core types and operations of `zakai-collocation`:
//! kernel generation, the collocation system with its interpolation and
//! stability diagnostics, the benchmark filtering model, the pathwise solver,
//! and the paired accuracy experiments.
//!
//! The compiled module imports as `zakai_collocation`; `python/smoke_test.py`
//! at the repository root shows the intended usage end to end.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zakai_collocation::experiments::{
    run_iota, run_rmse, CellOutcome, ExperimentConfig, PathSource, RadiusSpec, ReferenceSolution,
};
use zakai_collocation::grid::{radius_schedule, uniform_grid_1d, CollocationGrid};
use zakai_collocation::interpolation::{build_system, InterpolationSystem};
use zakai_collocation::kernels::{generate_wendland, PiecewiseKernel};
use zakai_collocation::models::{apply_l0, apply_lk, TestModel, ZakaiModel};
use zakai_collocation::solver::{build_propagators, generate_wiener, run_from};

fn to_py(e: zakai_collocation::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// A compactly supported piecewise-polynomial kernel, generated exactly from
/// its dimension and smoothness order and normalized to one at the origin.
#[pyclass(name = "Kernel", frozen)]
struct PyKernel {
    inner: PiecewiseKernel,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (dim, smoothness, scale = 1.0))]
    fn new(dim: usize, smoothness: usize, scale: f64) -> PyResult<Self> {
        let kernel = generate_wendland(dim, smoothness)
            .map_err(to_py)?
            .with_scale(scale)
            .map_err(to_py)?;
        Ok(PyKernel { inner: kernel })
    }

    /// A copy of this kernel with a different support radius.
    fn with_scale(&self, scale: f64) -> PyResult<Self> {
        Ok(PyKernel {
            inner: self.inner.with_scale(scale).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn smoothness(&self) -> usize {
        self.inner.tau()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    /// The radial profile φ(r) on the unit support.
    fn profile(&self, r: f64) -> f64 {
        self.inner.profile(r)
    }

    fn profile_d1(&self, r: f64) -> f64 {
        self.inner.profile_d1(r)
    }

    fn profile_d2(&self, r: f64) -> f64 {
        self.inner.profile_d2(r)
    }

    /// Φ(x - y) for points of the kernel's dimension.
    fn eval(&self, x: Vec<f64>, y: Vec<f64>) -> f64 {
        self.inner.eval(&x, &y)
    }

    /// ∂Φ/∂x_i at x - y.
    fn eval_d1(&self, i: usize, x: Vec<f64>, y: Vec<f64>) -> f64 {
        self.inner.eval_d1(i, &x, &y)
    }

    /// ∂²Φ/∂x_i∂x_j at x - y.
    fn eval_d2(&self, i: usize, j: usize, x: Vec<f64>, y: Vec<f64>) -> f64 {
        self.inner.eval_d2(i, j, &x, &y)
    }

    /// D^α Φ(x - y) for a multi-index with |α|₁ ≤ 2.
    fn derivative(&self, orders: Vec<usize>, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.derivative(&orders, &x, &y).map_err(to_py)
    }

    /// The polynomial coefficients of the unit-support profile, lowest power
    /// first, as `(power, exact, value)` with `exact` the rational in lowest
    /// terms.
    fn coefficients(&self) -> Vec<(usize, String, f64)> {
        self.inner
            .rational_coeffs()
            .iter()
            .enumerate()
            .map(|(power, c)| {
                let value = c.numer().to_string().parse::<f64>().unwrap_or(f64::NAN)
                    / c.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
                (power, format!("{}/{}", c.numer(), c.denom()), value)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel(dim={}, smoothness={}, scale={})",
            self.inner.dim(),
            self.inner.tau(),
            self.inner.scale()
        )
    }
}

/// A symmetric collocation system: a kernel, a point set, and the factored
/// interpolation matrix, with interpolation and diagnostics on top.
#[pyclass(name = "CollocationSystem", frozen)]
struct PySystem {
    inner: InterpolationSystem,
}

fn build_py_system(kernel: &PyKernel, grid: CollocationGrid) -> PyResult<PySystem> {
    let sys = build_system(kernel.inner.clone(), grid).map_err(to_py)?;
    Ok(PySystem { inner: sys })
}

#[pymethods]
impl PySystem {
    /// A uniform one-dimensional interior grid of `grid_size` points on
    /// `(-radius, radius)`; `radius` defaults to the accuracy study's growth
    /// schedule for the kernel's smoothness.
    #[new]
    #[pyo3(signature = (kernel, grid_size, radius = None))]
    fn new(kernel: &PyKernel, grid_size: usize, radius: Option<f64>) -> PyResult<Self> {
        let r = match radius {
            Some(r) => r,
            None => radius_schedule(grid_size, kernel.inner.tau()).map_err(to_py)?,
        };
        build_py_system(kernel, uniform_grid_1d(grid_size, r).map_err(to_py)?)
    }

    /// A system over an explicit point set (any dimension the kernel supports).
    #[staticmethod]
    fn from_points(kernel: &PyKernel, points: Vec<Vec<f64>>, radius: f64) -> PyResult<Self> {
        build_py_system(
            kernel,
            CollocationGrid::from_points(points, radius).map_err(to_py)?,
        )
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.grid().half_width()
    }

    /// Half the minimal pairwise distance.
    #[getter]
    fn separation(&self) -> f64 {
        self.inner.grid().sep()
    }

    /// The fill distance of the point set in its domain.
    #[getter]
    fn fill(&self) -> f64 {
        self.inner.grid().fill()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.grid().points().to_vec()
    }

    /// Interpolate grid data; the result evaluates anywhere in the domain.
    fn interpolate(slf: &Bound<'_, Self>, values: Vec<f64>) -> PyResult<PyInterpolant> {
        let interp = slf.get().inner.interpolate(&values).map_err(to_py)?;
        let coeffs = interp.coeffs().clone();
        Ok(PyInterpolant {
            system: slf.clone().unbind(),
            values,
            coeffs,
        })
    }

    /// The row of cardinal-function derivatives `(D^α Q_1(x), …, D^α Q_N(x))`.
    fn cardinal_derivative_row(&self, orders: Vec<usize>, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let row = self
            .inner
            .cardinal_derivative_row(&orders, &x)
            .map_err(to_py)?;
        Ok(row.iter().copied().collect())
    }

    /// The inverse-decay diagnostic: the maximal per-row count of entries of
    /// `A⁻¹` above `c1·(Δ₂x)^d/N`.
    #[pyo3(signature = (c1 = 1.0))]
    fn iota(&self, c1: f64) -> PyResult<usize> {
        self.inner.iota_diagnostic(c1).map_err(to_py)
    }

    /// `(smallest eigenvalue, 2-norm condition number)` of the interpolation
    /// matrix.
    fn conditioning(&self) -> (f64, f64) {
        self.inner.conditioning_report()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "CollocationSystem(size={}, radius={:.6}, scale={})",
            self.inner.len(),
            self.inner.grid().half_width(),
            self.inner.kernel().scale()
        )
    }
}

/// A function interpolated on a collocation system's grid; evaluates itself
/// and its derivatives anywhere in the domain.
#[pyclass(name = "Interpolant", frozen)]
struct PyInterpolant {
    system: Py<PySystem>,
    values: Vec<f64>,
    coeffs: DVector<f64>,
}

impl PyInterpolant {
    fn derivative_impl(&self, orders: &[usize], x: &[f64]) -> PyResult<f64> {
        let sys = &self.system.get().inner;
        let col = sys.kernel_column(orders, x).map_err(to_py)?;
        Ok(self.coeffs.dot(&col))
    }
}

#[pymethods]
impl PyInterpolant {
    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        let dim = self.system.get().inner.grid().dim();
        self.derivative_impl(&vec![0; dim], &x)
    }

    /// D^α I(f)(x) for a multi-index with |α|₁ ≤ 2.
    fn derivative(&self, orders: Vec<usize>, x: Vec<f64>) -> PyResult<f64> {
        self.derivative_impl(&orders, &x)
    }

    /// The grid data the interpolant was fitted to.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// The coefficient vector `c = A⁻¹ f|_Γ`.
    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().copied().collect()
    }
}

/// The one-dimensional benchmark filtering model with a closed-form solution:
/// unit diffusion, hyperbolic-tangent drift, a constant unit observation.
#[pyclass(name = "TestModel", frozen)]
struct PyTestModel {
    inner: TestModel,
}

#[pymethods]
impl PyTestModel {
    #[new]
    fn new() -> Self {
        PyTestModel { inner: TestModel }
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    #[getter]
    fn noise_dim(&self) -> usize {
        self.inner.noise_dim()
    }

    /// The initial density.
    fn initial(&self, x: Vec<f64>) -> f64 {
        self.inner.initial(&x)
    }

    /// The exact solution at time `t`, point `x`, given the Wiener values
    /// `w = (W_1(t), …, W_m(t))`.
    fn reference(&self, t: f64, x: Vec<f64>, w: Vec<f64>) -> f64 {
        self.inner.reference(t, &x, &w)
    }

    fn __repr__(&self) -> String {
        "TestModel()".into()
    }
}

/// `R(N) = 0.2·N^(1 - 1/(2·smoothness - 2))`, the domain growth schedule of
/// the accuracy study.
#[pyfunction]
fn domain_schedule(grid_size: usize, smoothness: usize) -> PyResult<f64> {
    radius_schedule(grid_size, smoothness).map_err(to_py)
}

/// `L₀ I(f)(x)`: the drift operator applied to an interpolant.
#[pyfunction]
fn apply_generator(model: &PyTestModel, interpolant: &PyInterpolant, x: Vec<f64>) -> PyResult<f64> {
    let sys = &interpolant.system.get().inner;
    let interp = sys.interpolate(&interpolant.values).map_err(to_py)?;
    Ok(apply_l0(&model.inner, &interp, &x))
}

/// `L_k I(f)(x)` for `k` in `1..=noise_dim`: a noise operator applied to an
/// interpolant.
#[pyfunction]
fn apply_noise_operator(
    model: &PyTestModel,
    k: usize,
    interpolant: &PyInterpolant,
    x: Vec<f64>,
) -> PyResult<f64> {
    let sys = &interpolant.system.get().inner;
    let interp = sys.interpolate(&interpolant.values).map_err(to_py)?;
    apply_lk(&model.inner, k, &interp, &x).map_err(to_py)
}

/// Run the explicit pathwise recursion from the model's initial datum over
/// `steps` uniform steps on `[0, horizon]`, drawing the Brownian path from
/// `seed`. Returns a dict with the time line, the grid trajectory, the
/// off-grid trajectory (when `eval_points` is given), the driving Wiener
/// values, and an overflow flag.
#[pyfunction]
#[pyo3(signature = (model, system, steps, horizon = 1.0, seed = 0, eval_points = None))]
fn simulate(
    py: Python<'_>,
    model: &PyTestModel,
    system: &PySystem,
    steps: usize,
    horizon: f64,
    seed: u64,
    eval_points: Option<Vec<Vec<f64>>>,
) -> PyResult<Py<PyDict>> {
    let sys = &system.inner;
    let props = build_propagators(&model.inner, sys, eval_points.as_deref()).map_err(to_py)?;
    let path = generate_wiener(steps, model.inner.noise_dim(), horizon, seed).map_err(to_py)?;
    let grid_start: Vec<f64> = sys
        .grid()
        .points()
        .iter()
        .map(|p| model.inner.initial(p))
        .collect();
    let eval_start: Option<Vec<f64>> = eval_points
        .as_ref()
        .map(|pts| pts.iter().map(|p| model.inner.initial(p)).collect());
    let run = run_from(&grid_start, eval_start.as_deref(), &props, &path).map_err(to_py)?;

    let wiener: Vec<Vec<f64>> = (0..=steps)
        .map(|i| (0..path.noise_dim()).map(|k| path.value(i, k)).collect())
        .collect();
    let out = PyDict::new(py);
    out.set_item("times", run.times().to_vec())?;
    out.set_item("grid_points", sys.grid().points().to_vec())?;
    out.set_item("grid_values", matrix_rows(run.grid_values()))?;
    out.set_item("eval_values", run.eval_values().map(matrix_rows))?;
    out.set_item("wiener", wiener)?;
    out.set_item("overflow", run.overflow())?;
    Ok(out.unbind())
}

/// One cell of the paired accuracy experiment: `samples` coupled Brownian
/// paths drive the exact solution, the collocation scheme, and the
/// finite-difference baseline; terminal-time RMSEs and their standard errors
/// come back in a dict.
#[pyfunction]
#[pyo3(signature = (grid_size, steps, samples, seed = 190737, scale = None,
                    eval_interval = (-2.0, 2.0), eval_count = 41, horizon = 1.0))]
#[allow(clippy::too_many_arguments)]
fn rmse_cell(
    py: Python<'_>,
    grid_size: usize,
    steps: usize,
    samples: usize,
    seed: u64,
    scale: Option<f64>,
    eval_interval: (f64, f64),
    eval_count: usize,
    horizon: f64,
) -> PyResult<Py<PyDict>> {
    let mut cfg = ExperimentConfig::default();
    if let Some(s) = scale {
        cfg.kernel.scale = s;
    }
    cfg.grid.sizes = vec![grid_size];
    cfg.grid.radius = RadiusSpec::Schedule;
    cfg.time.steps = vec![steps];
    cfg.time.horizon = horizon;
    cfg.monte_carlo.samples = samples;
    cfg.monte_carlo.seed = seed;
    cfg.evaluation.count = eval_count;
    cfg.evaluation.interval = [eval_interval.0, eval_interval.1];
    cfg.validate().map_err(to_py)?;
    let table = run_rmse(&TestModel, &cfg, PathSource::Substreams { seed }).map_err(to_py)?;
    let cell = table
        .cell(grid_size, steps)
        .ok_or_else(|| PyValueError::new_err("experiment produced no matching cell"))?;
    let out = PyDict::new(py);
    out.set_item("grid_size", cell.grid_size)?;
    out.set_item("radius", cell.radius)?;
    out.set_item("fill_power", cell.fill_power)?;
    out.set_item("steps", cell.steps)?;
    out.set_item("sqrt_dt", cell.sqrt_dt)?;
    match &cell.outcome {
        CellOutcome::Done(stats) => {
            out.set_item("rmse", stats.rmse)?;
            out.set_item("rmse_std_error", stats.rmse_std_error)?;
            out.set_item("rmse_fd", stats.rmse_fd)?;
            out.set_item("rmse_fd_std_error", stats.rmse_fd_std_error)?;
            out.set_item("samples", stats.samples)?;
        }
        CellOutcome::Failed(message) => {
            out.set_item("failed", message)?;
        }
    }
    Ok(out.unbind())
}

/// The inverse-decay diagnostic swept over grid sizes `2..=n_max` under the
/// shipped configuration (optionally at a different kernel scale). Each row
/// reports the diagnostic next to its theoretical bound.
#[pyfunction]
#[pyo3(signature = (n_max, scale = None))]
fn iota_sweep(py: Python<'_>, n_max: usize, scale: Option<f64>) -> PyResult<Vec<Py<PyDict>>> {
    let mut cfg = ExperimentConfig::default();
    if let Some(s) = scale {
        cfg.kernel.scale = s;
    }
    let rows = run_iota(&cfg, n_max).map_err(to_py)?;
    rows.iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("grid_size", row.grid_size)?;
            d.set_item("radius", row.radius)?;
            d.set_item("separation", row.sep)?;
            d.set_item("iota", row.iota)?;
            d.set_item("bound", row.bound)?;
            d.set_item("within_bound", row.within_bound())?;
            if let Some(e) = &row.error {
                d.set_item("error", e)?;
            }
            Ok(d.unbind())
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "zakai_collocation")]
fn zakai_collocation_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyInterpolant>()?;
    m.add_class::<PyTestModel>()?;
    m.add_function(wrap_pyfunction!(domain_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(apply_generator, m)?)?;
    m.add_function(wrap_pyfunction!(apply_noise_operator, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(rmse_cell, m)?)?;
    m.add_function(wrap_pyfunction!(iota_sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
