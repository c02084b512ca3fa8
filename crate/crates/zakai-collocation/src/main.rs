//! Experiment runner: accuracy sweep, inverse-decay diagnostic sweep,
//! single-trajectory snapshots, and kernel coefficient dumps, each emitting
//! CSV plus a `manifest.json` under the configured output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use zakai_collocation::experiments::{
    default_config, load_config, run_iota, run_rmse, run_snapshot, write_iota_csv,
    write_kernel_dump, write_manifest, write_snapshot_csvs, CellOutcome, LoadedConfig, PathSource,
};
use zakai_collocation::kernels::generate_wendland;
use zakai_collocation::models::TestModel;

#[derive(Parser)]
#[command(
    name = "zakai-collocation",
    version,
    about = "Meshfree collocation experiments for Zakai stochastic PDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides the configured one).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Base seed for the Monte Carlo substreams (overrides the configured one).
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo sample count (overrides the configured one).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the grid-size × step-count accuracy sweep against the exact
    /// solution, with the finite-difference baseline on the same paths.
    Rmse(CommonArgs),

    /// Sweep the inverse-decay diagnostic ι(N) against its stability bound.
    Iota {
        #[command(flatten)]
        common: CommonArgs,

        /// Largest grid size in the sweep. The dense inverse behind ι costs
        /// O(N³) per size, so the default stops at a desk-scale cap.
        #[arg(long, default_value_t = 512)]
        n_max: usize,
    },

    /// Record paired exact/approximate values along one trajectory as
    /// time series at fixed positions and space profiles at fixed steps.
    Snapshot(CommonArgs),

    /// Dump the generated kernel's polynomial coefficients (exact rationals
    /// and their floating-point values).
    KernelDump(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One machine-readable line on stderr, then a nonzero exit.
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}

/// Load the configuration, apply command-line overrides, and surface the
/// validation warnings on stderr.
fn resolve(common: &CommonArgs) -> anyhow::Result<(LoadedConfig, Vec<String>)> {
    let (mut loaded, mut warnings) = match &common.config {
        Some(path) => {
            load_config(path).with_context(|| format!("loading config {}", path.display()))?
        }
        None => default_config(),
    };
    if let Some(out) = &common.out {
        loaded.config.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        loaded.config.monte_carlo.seed = seed;
    }
    if let Some(samples) = common.samples {
        loaded.config.monte_carlo.samples = samples;
    }
    warnings.extend(loaded.config.validate().context("invalid configuration")?);
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    Ok((loaded, warnings))
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Rmse(common) => {
            let (loaded, warnings) = resolve(&common)?;
            let cfg = &loaded.config;
            let dir = zakai_collocation::experiments::prepare_output_dir(cfg)?;
            let source = PathSource::Substreams {
                seed: cfg.monte_carlo.seed,
            };
            let table = run_rmse(&TestModel, cfg, source).context("accuracy sweep failed")?;
            let csv = dir.join("rmse.csv");
            table.write_csv(&csv)?;
            let failed = table
                .rows
                .iter()
                .filter(|r| matches!(r.outcome, CellOutcome::Failed(_)))
                .count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} cells failed", table.rows.len());
            }
            let outputs = vec!["rmse.csv".to_string()];
            write_manifest(&dir, "rmse", &loaded, source.seed(), &warnings, &outputs)?;
            println!(
                "wrote {} ({} cells) and manifest.json",
                csv.display(),
                table.rows.len()
            );
        }
        Command::Iota { common, n_max } => {
            let (loaded, warnings) = resolve(&common)?;
            let cfg = &loaded.config;
            let dir = zakai_collocation::experiments::prepare_output_dir(cfg)?;
            let rows = run_iota(cfg, n_max).context("diagnostic sweep failed")?;
            let csv = dir.join("iota.csv");
            write_iota_csv(&csv, &rows)?;
            let breaches = rows.iter().filter(|r| !r.within_bound()).count();
            if breaches > 0 {
                eprintln!("warning: ι reached its bound at {breaches} grid sizes");
            }
            let outputs = vec!["iota.csv".to_string()];
            write_manifest(
                &dir,
                "iota",
                &loaded,
                cfg.monte_carlo.seed,
                &warnings,
                &outputs,
            )?;
            println!(
                "wrote {} ({} grid sizes) and manifest.json",
                csv.display(),
                rows.len()
            );
        }
        Command::Snapshot(common) => {
            let (loaded, warnings) = resolve(&common)?;
            let cfg = &loaded.config;
            let dir = zakai_collocation::experiments::prepare_output_dir(cfg)?;
            let source = PathSource::Substreams {
                seed: cfg.monte_carlo.seed,
            };
            let snapshot =
                run_snapshot(&TestModel, cfg, source).context("snapshot trajectory failed")?;
            let outputs = write_snapshot_csvs(&dir, &snapshot)?;
            write_manifest(
                &dir,
                "snapshot",
                &loaded,
                source.seed(),
                &warnings,
                &outputs,
            )?;
            println!(
                "wrote {} snapshot files and manifest.json under {}",
                outputs.len(),
                dir.display()
            );
        }
        Command::KernelDump(common) => {
            let (loaded, warnings) = resolve(&common)?;
            let cfg = &loaded.config;
            let dir = zakai_collocation::experiments::prepare_output_dir(cfg)?;
            let kernel = generate_wendland(cfg.kernel.dim, cfg.kernel.smoothness)?;
            let csv = write_kernel_dump(&dir, &kernel)?;
            let outputs = vec!["kernel_coefficients.csv".to_string()];
            write_manifest(
                &dir,
                "kernel-dump",
                &loaded,
                cfg.monte_carlo.seed,
                &warnings,
                &outputs,
            )?;
            println!("wrote {} and manifest.json", csv.display());
        }
    }
    Ok(())
}
