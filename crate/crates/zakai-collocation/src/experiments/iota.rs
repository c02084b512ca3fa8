//! The inverse-decay sweep: the diagnostic ι(N) against its conjectured
//! bound `5/Δ₂x` across grid sizes.

use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::csv_io::{self, Field};
use crate::error::{Error, Result};
use crate::grid::uniform_grid_1d;
use crate::interpolation::build_system;
use crate::kernels::generate_wendland;

/// Threshold constant in the diagnostic's entry cutoff `c₁·(Δ₂x)^d/N`.
pub const IOTA_C1: f64 = 1.0;

/// One grid size's diagnostic outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct IotaRow {
    pub grid_size: usize,
    pub radius: f64,
    /// Separation distance `Δ₂x` of the grid.
    pub sep: f64,
    /// `ι(N)`; absent when the build or factorization failed for this size.
    pub iota: Option<usize>,
    /// The conjectured bound `5/Δ₂x`.
    pub bound: f64,
    pub error: Option<String>,
}

impl IotaRow {
    /// Whether the diagnostic sits strictly below its bound.
    pub fn within_bound(&self) -> bool {
        self.iota
            .map(|iota| (iota as f64) < self.bound)
            .unwrap_or(false)
    }
}

/// Compute ι(N) for every `N = 2..=n_max` with the configuration's kernel
/// and radius rule. Per-size failures are recorded in their row; the sweep
/// continues past them.
pub fn run_iota(cfg: &ExperimentConfig, n_max: usize) -> Result<Vec<IotaRow>> {
    cfg.validate()?;
    if cfg.kernel.dim != 1 {
        return Err(Error::InvalidParameter(
            "the diagnostic sweep covers the one-dimensional study".into(),
        ));
    }
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "sweep needs n_max of at least 2, got {n_max}"
        )));
    }
    let kernel =
        generate_wendland(cfg.kernel.dim, cfg.kernel.smoothness)?.with_scale(cfg.kernel.scale)?;
    (2..=n_max)
        .into_par_iter()
        .map(|grid_size| {
            let radius = cfg.resolved_radius(grid_size)?;
            let grid = uniform_grid_1d(grid_size, radius)?;
            let sep = grid.sep();
            let bound = 5.0 / sep;
            let (iota, error) = match build_system(kernel.clone(), grid)
                .and_then(|sys| sys.iota_diagnostic(IOTA_C1))
            {
                Ok(iota) => (Some(iota), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(IotaRow {
                grid_size,
                radius,
                sep,
                iota,
                bound,
                error,
            })
        })
        .collect()
}

/// Write the sweep as CSV (`grid_size,radius,sep,iota,bound,status`).
pub fn write_iota_csv(path: &Path, rows: &[IotaRow]) -> Result<()> {
    let header = ["grid_size", "radius", "sep", "iota", "bound", "status"];
    let cells: Vec<Vec<Field>> = rows
        .iter()
        .map(|row| {
            vec![
                Field::Int(row.grid_size as u64),
                Field::Float(row.radius),
                Field::Float(row.sep),
                row.iota
                    .map(|i| Field::Int(i as u64))
                    .unwrap_or(Field::Empty),
                Field::Float(row.bound),
                Field::Text(row.error.clone().unwrap_or_else(|| "ok".into())),
            ]
        })
        .collect();
    csv_io::write_csv(path, &header, &cells)
}
