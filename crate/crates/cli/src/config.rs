//! Experiment file schema (TOML). Every section is optional; missing keys
//! take the defaults below.

use std::path::{Path, PathBuf};

use roadcache_core::simcore::{PolicyConfig, SimulationConfig};
use roadcache_core::trace::{SyntheticTraceSpec, DEFAULT_FAST_SLOW_BOUNDARY};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seed of `generate-trace`, and of every run when the sweep lists none.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub trace: TraceSource,
    pub simulation: SimulationConfig,
    pub sweep: SweepConfig,
    pub optimize: OptimizeConfig,
    pub plan: PlanConfig,
    pub analysis: AnalysisConfig,
}

/// Where the mobility trace comes from: a coverage-event file, or the
/// synthetic generator seeded with the run's seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSource {
    pub file: Option<PathBuf>,
    pub synthetic: Option<SyntheticTraceSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Empty means the policy of `[simulation]`.
    pub policies: Vec<PolicyConfig>,
    /// Normalized cache sizes; empty means `simulation.cache_chunks`.
    pub c_hat: Vec<f64>,
    /// Empty means the top-level seed.
    pub seeds: Vec<u64>,
    /// Mean dwell-time errors, s; empty means no dwell error.
    pub dwell_mu: Vec<f64>,
    pub dwell_sigma: f64,
    /// Path-skip fractions; empty means no path error.
    pub path_skip: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    HitProb,
    Utility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    /// Candidate values of every threshold.
    pub grid: Vec<f64>,
    /// Number of path positions with their own threshold.
    pub dims: usize,
    /// Normalized cache size of the search; `None` keeps `simulation.cache_chunks`.
    pub c_hat: Option<f64>,
    /// The objective is averaged over these seeds; empty means the top-level seed.
    pub seeds: Vec<u64>,
    pub objective: Objective,
    pub keep_partial_on_failure: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            dims: 2,
            c_hat: None,
            seeds: Vec::new(),
            objective: Objective::HitProb,
            keep_partial_on_failure: false,
        }
    }
}

/// Law of the number of chunks a car downloads at one EN of the planned path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CountLaw {
    /// Symmetric triangular law with integer mean.
    Triangular {
        mean: usize,
    },
    PointMass {
        chunks: usize,
    },
    /// Weights of `0, 1, 2, ...` chunks, normalized.
    Weights {
        weights: Vec<f64>,
    },
    /// Mixture of point masses, e.g. fast and slow cars.
    Mixture {
        chunks: Vec<usize>,
        weights: Vec<f64>,
    },
    /// Derived from the dwell times of an EN in the trace, through the
    /// radio and catalog settings of `[simulation]`.
    FromTrace {
        en: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConfig {
    /// One law per EN, in path order.
    pub laws: Vec<CountLaw>,
    pub n_chunks: usize,
    /// Per-EN cache capacity in chunks; `None` means no truncation.
    pub capacity: Option<usize>,
    pub taus: Vec<f64>,
    /// Chunks the car already holds.
    pub delivered: usize,
    pub keep_partial_on_failure: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            laws: vec![CountLaw::Triangular { mean: 10 }; 4],
            n_chunks: 60,
            capacity: None,
            taus: vec![0.8],
            delivered: 0,
            keep_partial_on_failure: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub bin_width_s: f64,
    pub fast_slow_boundary_s: f64,
    pub path_len: usize,
    pub min_cars: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_width_s: 1.0,
            fast_slow_boundary_s: DEFAULT_FAST_SLOW_BOUNDARY,
            path_len: 3,
            min_cars: 45,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`; relative trace paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let (Some(file), Some(dir)) = (&config.trace.file, path.parent()) {
            if file.is_relative() {
                config.trace.file = Some(dir.join(file));
            }
        }
        Ok(config)
    }
}
