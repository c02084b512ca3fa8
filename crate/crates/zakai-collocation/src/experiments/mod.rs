//! Experiment orchestration: the accuracy sweep, the inverse-decay
//! diagnostic sweep, and trajectory snapshots, all driven by one JSON
//! configuration and emitted as CSV plus a manifest recording the exact run.
//!
//! The functions here own no I/O policy beyond "one CSV file per table, one
//! `manifest.json` per invocation, everything under the configured output
//! directory". Rendering is out of scope — the CSV files are the contract,
//! and any plotting tool can consume them.

pub mod config;
pub mod csv_io;
mod iota;
mod rmse;
mod snapshot;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::kernels::PiecewiseKernel;
use crate::models::ZakaiModel;
use crate::solver::{generate_wiener_stream, zero_wiener, WienerPath};

pub use config::{default_config, load_config, ExperimentConfig, LoadedConfig, RadiusSpec};
pub use iota::{run_iota, write_iota_csv, IotaRow, IOTA_C1};
pub use rmse::{run_rmse, CellOutcome, CellStats, RmseCell, RmseTable};
pub use snapshot::{run_snapshot, write_snapshot_csvs, Profile, Snapshot, TimeSeries};

/// A model whose exact solution is available pathwise, so a simulated
/// trajectory can be scored against it under the same noise.
pub trait ReferenceSolution: ZakaiModel {
    /// The exact solution at time `t`, point `x`, given the Wiener values
    /// `w = (W_1(t), …, W_m(t))` of the driving path.
    fn reference(&self, t: f64, x: &[f64], w: &[f64]) -> f64;
}

impl ReferenceSolution for crate::models::TestModel {
    fn reference(&self, t: f64, x: &[f64], w: &[f64]) -> f64 {
        self.closed_form_solution(t, x[0], w[0])
    }
}

/// Where Monte Carlo paths come from.
#[derive(Debug, Clone, Copy)]
pub enum PathSource {
    /// Sample `s` draws from substream `s` of the base seed, so samples are
    /// individually reproducible and indifferent to evaluation order.
    Substreams { seed: u64 },
    /// Every increment forced to zero — isolates the deterministic drift.
    Zero,
}

impl PathSource {
    /// The path for Monte Carlo sample `index`.
    pub fn sample_path(
        &self,
        steps: usize,
        noise_dim: usize,
        horizon: f64,
        index: u64,
    ) -> Result<WienerPath> {
        match *self {
            PathSource::Substreams { seed } => {
                generate_wiener_stream(steps, noise_dim, horizon, seed, index)
            }
            PathSource::Zero => zero_wiener(steps, noise_dim, horizon),
        }
    }

    /// The base seed recorded in the manifest (0 for the zero override).
    pub fn seed(&self) -> u64 {
        match *self {
            PathSource::Substreams { seed } => seed,
            PathSource::Zero => 0,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    warnings: &'a [String],
    outputs: &'a [String],
}

/// Write `manifest.json` next to the experiment outputs: config hash and the
/// resolved configuration itself, the seed actually used, the tool version,
/// and the list of files the run produced.
pub fn write_manifest(
    dir: &Path,
    experiment: &str,
    loaded: &LoadedConfig,
    seed: u64,
    warnings: &[String],
    outputs: &[String],
) -> Result<PathBuf> {
    let manifest = Manifest {
        experiment,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: &loaded.sha256,
        seed,
        config: &loaded.config,
        warnings,
        outputs,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Ensure the output directory exists and return it.
pub fn prepare_output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(cfg.output_dir.clone())
}

/// Dump a generated kernel's polynomial coefficients — exact rationals plus
/// their floating-point values — for inspection.
pub fn kernel_coefficient_rows(kernel: &PiecewiseKernel) -> Vec<(usize, String, f64)> {
    use num::ToPrimitive;
    kernel
        .rational_coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            (
                k,
                format!("{}/{}", c.numer(), c.denom()),
                c.to_f64().unwrap_or(f64::NAN),
            )
        })
        .collect()
}

/// Write the kernel dump CSV (`power,exact,value`) into `dir`.
pub fn write_kernel_dump(dir: &Path, kernel: &PiecewiseKernel) -> Result<PathBuf> {
    use csv_io::Field;
    let rows: Vec<Vec<Field>> = kernel_coefficient_rows(kernel)
        .into_iter()
        .map(|(k, exact, value)| {
            vec![
                Field::Int(k as u64),
                Field::Text(exact),
                Field::Float(value),
            ]
        })
        .collect();
    let path = dir.join("kernel_coefficients.csv");
    csv_io::write_csv(&path, &["power", "exact", "value"], &rows)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::generate_wendland;
    use crate::models::TestModel;

    #[test]
    fn reference_solution_agrees_with_the_closed_form() {
        let model = TestModel;
        let (t, x, w) = (0.7, -0.3, 0.42);
        assert_eq!(
            model.reference(t, &[x], &[w]),
            model.closed_form_solution(t, x, w)
        );
    }

    #[test]
    fn path_sources_produce_the_advertised_paths() {
        let seeded = PathSource::Substreams { seed: 5 };
        let a = seeded.sample_path(8, 1, 1.0, 3).unwrap();
        let b = seeded.sample_path(8, 1, 1.0, 3).unwrap();
        assert_eq!(a.increment(1, 0), b.increment(1, 0));
        assert_eq!(a.stream(), 3);
        let zero = PathSource::Zero.sample_path(8, 1, 1.0, 99).unwrap();
        assert!((1..=8).all(|i| zero.increment(i, 0) == 0.0));
        assert_eq!(seeded.seed(), 5);
        assert_eq!(PathSource::Zero.seed(), 0);
    }

    #[test]
    fn kernel_dump_rows_reproduce_the_float_coefficients() {
        let kernel = generate_wendland(1, 4).unwrap();
        let rows = kernel_coefficient_rows(&kernel);
        assert_eq!(rows.len(), kernel.rational_coeffs().len());
        assert_eq!(rows[0].0, 0);
        // The constant term is φ(0) = 1 under the normalization here.
        assert_eq!(rows[0].1, "1/1");
        assert_eq!(rows[0].2, 1.0);
        for (_, exact, value) in &rows {
            assert!(exact.contains('/'));
            assert!(value.is_finite());
        }
    }

    #[test]
    fn manifest_records_hash_seed_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let (loaded, warnings) = default_config();
        let path = write_manifest(
            dir.path(),
            "rmse",
            &loaded,
            190_737,
            &warnings,
            &["rmse.csv".into()],
        )
        .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["experiment"], "rmse");
        assert_eq!(value["config_sha256"], serde_json::json!(loaded.sha256));
        assert_eq!(value["seed"], 190_737);
        assert_eq!(value["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(value["outputs"][0], "rmse.csv");
        // The embedded config documents the kernel scale the run used.
        assert!(value["config"]["kernel"]["scale"].is_number());
    }
}
