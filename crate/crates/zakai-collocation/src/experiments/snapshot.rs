//! Trajectory snapshots: paired exact/approximate values along one driving
//! path, as fixed-position time series and fixed-time space profiles, in
//! plot-ready CSV.

use std::path::Path;

use super::config::ExperimentConfig;
use super::csv_io::{self, Field};
use super::{PathSource, ReferenceSolution};
use crate::error::{Error, Result};
use crate::grid::uniform_grid_1d;
use crate::interpolation::build_system;
use crate::kernels::generate_wendland;
use crate::solver::{build_propagators, run_with_path};

/// `u` and `u^h` over time at one fixed position; rows are `(t, exact, approx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub position: f64,
    pub rows: Vec<(f64, f64, f64)>,
}

/// `u` and `u^h` over the evaluation grid at one fixed time; rows are
/// `(x, exact, approx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub step_index: usize,
    pub time: f64,
    pub rows: Vec<(f64, f64, f64)>,
}

/// A complete snapshot run along a single path.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub series: Vec<TimeSeries>,
    pub profiles: Vec<Profile>,
    /// The seed the driving path was drawn from (0 for the zero override).
    pub seed: u64,
}

impl Snapshot {
    /// Largest |exact − approx| over every emitted row.
    pub fn max_gap(&self) -> f64 {
        let series_gap = self
            .series
            .iter()
            .flat_map(|s| s.rows.iter())
            .map(|&(_, e, a)| (e - a).abs())
            .fold(0.0f64, f64::max);
        self.profiles
            .iter()
            .flat_map(|p| p.rows.iter())
            .map(|&(_, e, a)| (e - a).abs())
            .fold(series_gap, f64::max)
    }
}

/// Run one trajectory at the finest configured resolution (largest grid
/// size, largest step count) and extract the configured snapshot positions
/// and times. The same path drives the scheme and the exact reference, so
/// the two columns are pathwise comparable.
pub fn run_snapshot<M: ReferenceSolution>(
    model: &M,
    cfg: &ExperimentConfig,
    source: PathSource,
) -> Result<Snapshot> {
    cfg.validate()?;
    if cfg.kernel.dim != 1 || model.state_dim() != 1 || model.noise_dim() != 1 {
        return Err(Error::InvalidParameter(
            "snapshots cover the one-dimensional, single-noise study".into(),
        ));
    }
    let grid_size = *cfg.grid.sizes.iter().max().expect("validated nonempty");
    let steps = *cfg.time.steps.iter().max().expect("validated nonempty");
    for &index in &cfg.snapshot.step_indices {
        if index > steps {
            return Err(Error::InvalidParameter(format!(
                "snapshot step index {index} exceeds the run's {steps} steps"
            )));
        }
    }

    let radius = cfg.resolved_radius(grid_size)?;
    let kernel =
        generate_wendland(cfg.kernel.dim, cfg.kernel.smoothness)?.with_scale(cfg.kernel.scale)?;
    let sys = build_system(kernel, uniform_grid_1d(grid_size, radius)?)?;
    // Profile points first, snapshot positions appended after them, so both
    // views advance in one off-grid recursion.
    let profile_points = cfg.eval_points();
    let mut eval_points = profile_points.clone();
    eval_points.extend(cfg.snapshot.positions.iter().map(|&x| vec![x]));
    let props = build_propagators(model, &sys, Some(&eval_points))?;

    let path = source.sample_path(steps, model.noise_dim(), cfg.time.horizon, 0)?;
    let run = run_with_path(model, &sys, &props, &path)?;
    if run.overflow() {
        return Err(Error::SolveFailed("snapshot trajectory overflowed".into()));
    }
    let eval = run
        .eval_values()
        .expect("propagators were built with evaluation points");

    let series = cfg
        .snapshot
        .positions
        .iter()
        .enumerate()
        .map(|(k, &position)| {
            let column = profile_points.len() + k;
            let rows = (0..=steps)
                .map(|i| {
                    let t = path.times()[i];
                    let w = [path.value(i, 0)];
                    (t, model.reference(t, &[position], &w), eval[(i, column)])
                })
                .collect();
            TimeSeries { position, rows }
        })
        .collect();

    let profiles = cfg
        .snapshot
        .step_indices
        .iter()
        .map(|&step_index| {
            let t = path.times()[step_index];
            let w = [path.value(step_index, 0)];
            let rows = profile_points
                .iter()
                .enumerate()
                .map(|(j, point)| {
                    (
                        point[0],
                        model.reference(t, point, &w),
                        eval[(step_index, j)],
                    )
                })
                .collect();
            Profile {
                step_index,
                time: t,
                rows,
            }
        })
        .collect();

    Ok(Snapshot {
        series,
        profiles,
        seed: source.seed(),
    })
}

/// Write one CSV per time series (`snapshot_x_<position>.csv`, columns
/// `t,exact,approx`) and one per profile (`snapshot_t_<step>.csv`, columns
/// `x,exact,approx`). Returns the file names written.
pub fn write_snapshot_csvs(dir: &Path, snapshot: &Snapshot) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for series in &snapshot.series {
        let name = format!("snapshot_x_{}.csv", series.position);
        let rows: Vec<Vec<Field>> = series
            .rows
            .iter()
            .map(|&(t, e, a)| vec![Field::Float(t), Field::Float(e), Field::Float(a)])
            .collect();
        csv_io::write_csv(&dir.join(&name), &["t", "exact", "approx"], &rows)?;
        names.push(name);
    }
    for profile in &snapshot.profiles {
        let name = format!("snapshot_t_{}.csv", profile.step_index);
        let rows: Vec<Vec<Field>> = profile
            .rows
            .iter()
            .map(|&(x, e, a)| vec![Field::Float(x), Field::Float(e), Field::Float(a)])
            .collect();
        csv_io::write_csv(&dir.join(&name), &["x", "exact", "approx"], &rows)?;
        names.push(name);
    }
    Ok(names)
}
