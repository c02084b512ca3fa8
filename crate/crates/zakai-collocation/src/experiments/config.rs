//! JSON experiment configuration.
//!
//! A single strict document drives every experiment; unknown keys are
//! rejected so a typo in a sweep definition fails loudly instead of silently
//! running the defaults. Scalar fields that are conceptually sweeps (`sizes`,
//! `steps`) accept either one number or a list.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::radius_schedule;

/// Kernel selection: dimension, smoothness parameter, and spatial scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub dim: usize,
    pub smoothness: usize,
    pub scale: f64,
}

/// Domain half-width: either the built-in growth schedule or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusSpec {
    /// `R(N) = 0.2·N^{1 - 1/(2τ-2)}`, the schedule the accuracy study uses.
    Schedule,
    Fixed(f64),
}

impl Serialize for RadiusSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RadiusSpec::Schedule => serializer.serialize_str("schedule"),
            RadiusSpec::Fixed(r) => serializer.serialize_f64(*r),
        }
    }
}

impl<'de> Deserialize<'de> for RadiusSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(r) => Ok(RadiusSpec::Fixed(r)),
            Raw::Text(s) if s == "schedule" => Ok(RadiusSpec::Schedule),
            Raw::Text(s) => Err(D::Error::custom(format!(
                "radius must be a number or the string \"schedule\", got \"{s}\""
            ))),
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match Raw::deserialize(deserializer)? {
        Raw::One(v) => vec![v],
        Raw::Many(vs) => vs,
    })
}

/// Spatial sweep: grid sizes and the domain half-width rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_radius")]
    pub radius: RadiusSpec,
}

fn default_radius() -> RadiusSpec {
    RadiusSpec::Schedule
}

/// Temporal sweep: step counts and the horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub steps: Vec<usize>,
    pub horizon: f64,
}

/// Monte Carlo control: sample count and the base seed; sample `s` draws its
/// path from substream `s` of the base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
}

/// Where the error is measured: equispaced points on a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub count: usize,
    pub interval: [f64; 2],
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            count: 41,
            interval: [-2.0, 2.0],
        }
    }
}

/// Snapshot selection: fixed positions for time series, and step indices
/// (multiples of Δt) for space profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapshotConfig {
    pub positions: Vec<f64>,
    pub step_indices: Vec<usize>,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        SnapshotConfig {
            positions: vec![-1.0, -0.5, 0.5, 1.0],
            step_indices: vec![2, 8, 32, 128],
        }
    }
}

/// The complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub snapshot: SnapshotConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    /// The shipped defaults: the three-by-three accuracy sweep with the
    /// calibrated kernel scale. `configs/default.json` mirrors this value
    /// exactly (a test pins the two together).
    fn default() -> Self {
        ExperimentConfig {
            kernel: KernelConfig {
                dim: 1,
                smoothness: 4,
                scale: 0.8,
            },
            grid: GridConfig {
                sizes: vec![16, 32, 64],
                radius: RadiusSpec::Schedule,
            },
            time: TimeConfig {
                steps: vec![64, 256, 1024],
                horizon: 1.0,
            },
            monte_carlo: MonteCarloConfig {
                samples: 500,
                seed: 190_737,
            },
            evaluation: EvaluationConfig::default(),
            snapshot: SnapshotConfig::default(),
            output_dir: default_output_dir(),
        }
    }
}

impl ExperimentConfig {
    /// Check internal consistency. Hard violations are errors; conditions
    /// that only void accuracy guarantees (low kernel smoothness) come back
    /// as warnings for the caller to surface.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let k = &self.kernel;
        if k.dim == 0 {
            return Err(Error::Config("kernel dimension must be at least 1".into()));
        }
        if k.smoothness < 2 {
            return Err(Error::Config(
                "kernel smoothness parameter must be at least 2".into(),
            ));
        }
        if k.smoothness < 3 {
            warnings.push(format!(
                "kernel smoothness {} is below the 3 the convergence theory assumes; \
                 accuracy guarantees are off",
                k.smoothness
            ));
        }
        if !(k.scale.is_finite() && k.scale > 0.0) {
            return Err(Error::Config(format!(
                "kernel scale must be positive, got {}",
                k.scale
            )));
        }
        if self.grid.sizes.is_empty() {
            return Err(Error::Config("grid.sizes must not be empty".into()));
        }
        if let Some(&bad) = self.grid.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!(
                "grid sizes need at least 2 points, got {bad}"
            )));
        }
        if let RadiusSpec::Fixed(r) = self.grid.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config(format!(
                    "fixed radius must be positive, got {r}"
                )));
            }
        }
        if self.time.steps.is_empty() {
            return Err(Error::Config("time.steps must not be empty".into()));
        }
        if self.time.steps.contains(&0) {
            return Err(Error::Config("time step counts must be positive".into()));
        }
        if !(self.time.horizon.is_finite() && self.time.horizon > 0.0) {
            return Err(Error::Config(format!(
                "time horizon must be positive, got {}",
                self.time.horizon
            )));
        }
        if self.monte_carlo.samples == 0 {
            return Err(Error::Config("need at least one Monte Carlo sample".into()));
        }
        let [a, b] = self.evaluation.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!(
                "evaluation interval [{a}, {b}] is not a proper interval"
            )));
        }
        if self.evaluation.count < 2 {
            return Err(Error::Config(
                "evaluation grid needs at least 2 points".into(),
            ));
        }
        // Every point the solver is asked to evaluate must sit strictly
        // inside every domain in the sweep.
        for &n in &self.grid.sizes {
            let r = self.resolved_radius(n)?;
            let mut extremes: Vec<f64> = vec![a, b];
            extremes.extend_from_slice(&self.snapshot.positions);
            for &x in &extremes {
                if x.abs() >= r {
                    return Err(Error::Config(format!(
                        "evaluation point {x} is outside the open domain (-{r}, {r}) \
                         for grid size {n}"
                    )));
                }
            }
        }
        Ok(warnings)
    }

    /// The domain half-width for a given grid size under this configuration.
    pub fn resolved_radius(&self, n: usize) -> Result<f64> {
        match self.grid.radius {
            RadiusSpec::Schedule => radius_schedule(n, self.kernel.smoothness),
            RadiusSpec::Fixed(r) => Ok(r),
        }
    }

    /// The equispaced evaluation points (as 1-vectors, ready for the solver).
    pub fn eval_points(&self) -> Vec<Vec<f64>> {
        let [a, b] = self.evaluation.interval;
        let count = self.evaluation.count;
        (0..count)
            .map(|j| vec![a + (b - a) * j as f64 / (count - 1) as f64])
            .collect()
    }

    /// Canonical pretty-printed JSON form (the form the default config file
    /// stores and the manifest embeds).
    pub fn canonical_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}

/// A parsed configuration together with the SHA-256 of the bytes it came
/// from, recorded in the output manifest.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Read, parse, and validate a configuration file. Returned warnings are the
/// validation warnings; hard violations fail the load.
pub fn load_config(path: &Path) -> Result<(LoadedConfig, Vec<String>)> {
    let bytes = fs::read(path)?;
    let config: ExperimentConfig = serde_json::from_slice(&bytes)?;
    let warnings = config.validate()?;
    Ok((
        LoadedConfig {
            config,
            sha256: sha256_hex(&bytes),
        },
        warnings,
    ))
}

/// The built-in default configuration, hashed over its canonical JSON so the
/// manifest records the same identity whether it came from the shipped file
/// or from this fallback.
pub fn default_config() -> (LoadedConfig, Vec<String>) {
    let config = ExperimentConfig::default();
    let sha256 = sha256_hex(config.canonical_json().as_bytes());
    (LoadedConfig { config, sha256 }, Vec::new())
}
