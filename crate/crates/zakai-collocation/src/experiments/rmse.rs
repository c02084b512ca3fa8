//! The accuracy sweep: coupled root-mean-square errors of the collocation
//! solver and the finite-difference baseline against the exact solution.
//!
//! For every `(N, n)` pair in the configuration, `S` Monte Carlo samples are
//! drawn; within a sample the same Wiener path drives the exact solution,
//! the collocation run, and the finite-difference run, so the comparison is
//! pathwise. The collocation error is measured at the configured evaluation
//! points, the baseline's at its own grid (the natural set for a boundary-
//! pinned scheme). Per-cell aggregation is a sorted compensated mean over
//! per-sample mean squares, which makes the result exactly invariant under
//! permutation of Monte Carlo sample indices and independent of thread
//! scheduling.

use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::csv_io::{self, Field};
use super::{PathSource, ReferenceSolution};
use crate::error::{Error, Result};
use crate::fd_baseline::{build_fd, fd_run_from_model};
use crate::grid::uniform_grid_1d;
use crate::interpolation::build_system;
use crate::kernels::generate_wendland;
use crate::solver::{build_propagators, run_with_path};

/// Aggregate statistics for one `(N, n)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    /// RMSE of the collocation solver at the evaluation points.
    pub rmse: f64,
    /// Delta-method standard error of `rmse` over the sample spread.
    pub rmse_std_error: f64,
    /// RMSE of the finite-difference baseline on its own grid.
    pub rmse_fd: f64,
    pub rmse_fd_std_error: f64,
    /// Number of Monte Carlo samples aggregated.
    pub samples: usize,
}

/// How a cell ended: statistics, or the error that stopped it. A failed cell
/// is recorded as failed — never interpolated or invented.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done(CellStats),
    Failed(String),
}

/// One row of the accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseCell {
    pub grid_size: usize,
    pub radius: f64,
    /// `fill^{τ - 3/2}`, the spatial convergence-rate column.
    pub fill_power: f64,
    pub steps: usize,
    pub sqrt_dt: f64,
    pub outcome: CellOutcome,
}

/// The full sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseTable {
    pub rows: Vec<RmseCell>,
}

impl RmseTable {
    /// Find a cell by its `(N, n)` key.
    pub fn cell(&self, grid_size: usize, steps: usize) -> Option<&RmseCell> {
        self.rows
            .iter()
            .find(|row| row.grid_size == grid_size && row.steps == steps)
    }

    /// Write the table as CSV; failed cells leave their numeric columns
    /// empty and carry the error in `status`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header = [
            "grid_size",
            "radius",
            "fill_power",
            "steps",
            "sqrt_dt",
            "rmse",
            "rmse_fd",
            "rmse_std_error",
            "rmse_fd_std_error",
            "samples",
            "status",
        ];
        let rows: Vec<Vec<Field>> = self
            .rows
            .iter()
            .map(|row| {
                let mut cells = vec![
                    Field::Int(row.grid_size as u64),
                    Field::Float(row.radius),
                    Field::Float(row.fill_power),
                    Field::Int(row.steps as u64),
                    Field::Float(row.sqrt_dt),
                ];
                match &row.outcome {
                    CellOutcome::Done(stats) => {
                        cells.push(Field::Float(stats.rmse));
                        cells.push(Field::Float(stats.rmse_fd));
                        cells.push(Field::Float(stats.rmse_std_error));
                        cells.push(Field::Float(stats.rmse_fd_std_error));
                        cells.push(Field::Int(stats.samples as u64));
                        cells.push(Field::Text("ok".into()));
                    }
                    CellOutcome::Failed(message) => {
                        cells.extend([Field::Empty, Field::Empty, Field::Empty, Field::Empty]);
                        cells.push(Field::Int(0));
                        cells.push(Field::Text(sanitize(message)));
                    }
                }
                cells
            })
            .collect();
        csv_io::write_csv(path, &header, &rows)
    }
}

fn sanitize(message: &str) -> String {
    message
        .chars()
        .map(|c| {
            if c == ',' || c == '\n' || c == '\r' {
                ';'
            } else {
                c
            }
        })
        .collect()
}

/// Mean of `values` by sorted compensated summation: exactly symmetric in
/// the order of its inputs, so sample permutations cannot change the result.
pub(crate) fn symmetric_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for &v in &sorted {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    (sum + compensation) / sorted.len() as f64
}

/// Turn per-sample mean squares into an RMSE and its delta-method standard
/// error. Exact zeros stay exact: a solver that reproduces the reference
/// pathwise reports RMSE = 0.
pub(crate) fn aggregate(per_sample_mean_squares: &[f64]) -> (f64, f64) {
    let mean = symmetric_mean(per_sample_mean_squares);
    let rmse = mean.sqrt();
    let s = per_sample_mean_squares.len();
    if s < 2 || rmse == 0.0 {
        return (rmse, 0.0);
    }
    let variance = per_sample_mean_squares
        .iter()
        .map(|&m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (s - 1) as f64;
    let mean_std_error = (variance / s as f64).sqrt();
    (rmse, mean_std_error / (2.0 * rmse))
}

fn run_cell<M: ReferenceSolution>(
    model: &M,
    cfg: &ExperimentConfig,
    grid_size: usize,
    radius: f64,
    steps: usize,
    source: PathSource,
) -> Result<CellStats> {
    let kernel =
        generate_wendland(cfg.kernel.dim, cfg.kernel.smoothness)?.with_scale(cfg.kernel.scale)?;
    let sys = build_system(kernel, uniform_grid_1d(grid_size, radius)?)?;
    let eval_points = cfg.eval_points();
    let props = build_propagators(model, &sys, Some(&eval_points))?;
    let scheme = build_fd(model, grid_size, radius)?;
    let horizon = cfg.time.horizon;
    let samples = cfg.monte_carlo.samples;

    // Per-sample mean squares, computed concurrently; `collect` preserves
    // index order, and the aggregation below is order-insensitive anyway.
    let partials: Vec<Result<(f64, f64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|index| {
            let path = source.sample_path(steps, model.noise_dim(), horizon, index)?;
            let run = run_with_path(model, &sys, &props, &path)?;
            if run.overflow() {
                return Err(Error::SolveFailed(format!(
                    "collocation trajectory overflowed in sample {index}"
                )));
            }
            let fd = fd_run_from_model(model, &scheme, &path)?;
            if fd.overflow() {
                return Err(Error::SolveFailed(format!(
                    "finite-difference trajectory overflowed in sample {index}"
                )));
            }
            let eval = run
                .eval_values()
                .expect("propagators were built with evaluation points");

            let mut sum_sq = 0.0f64;
            for i in 0..=steps {
                let t = path.times()[i];
                let w = [path.value(i, 0)];
                for (j, point) in eval_points.iter().enumerate() {
                    let diff = eval[(i, j)] - model.reference(t, point, &w);
                    sum_sq += diff * diff;
                }
            }
            let coll_mean = sum_sq / (eval_points.len() * (steps + 1)) as f64;

            let mut sum_sq_fd = 0.0f64;
            for i in 0..=steps {
                let t = path.times()[i];
                let w = [path.value(i, 0)];
                for (j, &x) in scheme.coords().iter().enumerate() {
                    let diff = fd.values()[(i, j)] - model.reference(t, &[x], &w);
                    sum_sq_fd += diff * diff;
                }
            }
            let fd_mean = sum_sq_fd / (scheme.len() * (steps + 1)) as f64;

            Ok((coll_mean, fd_mean))
        })
        .collect();

    let mut coll_means = Vec::with_capacity(samples);
    let mut fd_means = Vec::with_capacity(samples);
    for partial in partials {
        let (c, f) = partial?;
        coll_means.push(c);
        fd_means.push(f);
    }
    let (rmse, rmse_std_error) = aggregate(&coll_means);
    let (rmse_fd, rmse_fd_std_error) = aggregate(&fd_means);
    Ok(CellStats {
        rmse,
        rmse_std_error,
        rmse_fd,
        rmse_fd_std_error,
        samples,
    })
}

/// Run the full accuracy sweep: the cross product of configured grid sizes
/// and step counts. A failure inside one cell marks that cell failed and the
/// sweep continues; configuration-level errors abort.
pub fn run_rmse<M: ReferenceSolution>(
    model: &M,
    cfg: &ExperimentConfig,
    source: PathSource,
) -> Result<RmseTable> {
    cfg.validate()?;
    if cfg.kernel.dim != 1 || model.state_dim() != 1 || model.noise_dim() != 1 {
        return Err(Error::InvalidParameter(
            "the accuracy sweep covers the one-dimensional, single-noise study".into(),
        ));
    }
    let tau = cfg.kernel.smoothness as f64;
    let mut rows = Vec::new();
    for &grid_size in &cfg.grid.sizes {
        let radius = cfg.resolved_radius(grid_size)?;
        let fill = uniform_grid_1d(grid_size, radius)?.fill();
        for &steps in &cfg.time.steps {
            let sqrt_dt = (cfg.time.horizon / steps as f64).sqrt();
            let outcome = match run_cell(model, cfg, grid_size, radius, steps, source) {
                Ok(stats) => CellOutcome::Done(stats),
                Err(e) => CellOutcome::Failed(e.to_string()),
            };
            rows.push(RmseCell {
                grid_size,
                radius,
                fill_power: fill.powf(tau - 1.5),
                steps,
                sqrt_dt,
                outcome,
            });
        }
    }
    Ok(RmseTable { rows })
}
