use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::UtilityParams;
use crate::policy::ThresholdProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    /// Effective EN bandwidth shared by the cars it serves, bit/s.
    pub bandwidth_bps: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth_bps: 5.2e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackhaulConfig {
    /// Data Store to EN link rate, bit/s.
    pub datastore_rate_bps: f64,
    /// One-way Data Store to EN propagation delay, s.
    pub datastore_delay_s: f64,
    /// One-way EN to Prefetcher propagation delay, s.
    pub prefetcher_delay_s: f64,
}

impl Default for BackhaulConfig {
    fn default() -> Self {
        Self {
            datastore_rate_bps: 100e6,
            datastore_delay_s: 2e-3,
            prefetcher_delay_s: 10e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentCatalog {
    pub n_contents: usize,
    pub chunks_per_content: usize,
    pub chunk_size_bits: f64,
}

impl Default for ContentCatalog {
    fn default() -> Self {
        Self {
            n_contents: 10,
            chunks_per_content: 2600,
            chunk_size_bits: 520_000.0,
        }
    }
}

impl ContentCatalog {
    pub fn total_chunks(&self) -> usize {
        self.n_contents * self.chunks_per_content
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZipfSpec {
    pub alpha: f64,
}

impl Default for ZipfSpec {
    fn default() -> Self {
        Self { alpha: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Rich {
        /// One threshold per path position (the last one repeats).
        taus: ThresholdProfile,
        #[serde(default)]
        keep_partial_on_failure: bool,
    },
    #[serde(rename = "netpredict")]
    NetPredict,
    Pop,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig::Rich {
            taus: ThresholdProfile::single(0.8, 1).expect("valid threshold"),
            keep_partial_on_failure: false,
        }
    }
}

impl PolicyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::Rich { .. } => "rich",
            PolicyConfig::NetPredict => "netpredict",
            PolicyConfig::Pop => "pop",
        }
    }

    pub fn rich(taus: Vec<f64>) -> Result<Self> {
        Ok(PolicyConfig::Rich {
            taus: ThresholdProfile::new(taus)?,
            keep_partial_on_failure: false,
        })
    }

    /// Whether the policy computes per-car plans.
    pub fn plans_per_car(&self) -> bool {
        !matches!(self, PolicyConfig::Pop)
    }
}

/// Gaussian error added to every dwell time of the simulated trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwellError {
    pub mu: f64,
    #[serde(default)]
    pub sigma: f64,
}

/// Fraction of cars that skip the second EN of their path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSkip {
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModels {
    pub dwell: Option<DwellError>,
    pub path_skip: Option<PathSkip>,
}

/// Restricts the simulation to cars on frequently travelled EN sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignificantFilter {
    pub path_len: usize,
    pub min_cars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Known EN ids; empty means every EN seen in the trace.
    pub edge_nodes: Vec<String>,
    /// Per-EN cache capacity in chunks.
    pub cache_chunks: usize,
    pub radio: RadioConfig,
    pub backhaul: BackhaulConfig,
    pub catalog: ContentCatalog,
    pub workload: ZipfSpec,
    pub policy: PolicyConfig,
    /// Number of path positions covered by one plan.
    pub plan_horizon: usize,
    /// Leading visits of each car whose requests enter the metrics.
    pub eval_positions: usize,
    pub seed: u64,
    pub errors: ErrorModels,
    /// Chunks requested ahead during data recovery; derived from the round
    /// trip time when absent.
    pub recovery_margin: Option<usize>,
    /// Dwell-time histogram bin width used by the Prefetcher, s.
    pub bin_width_s: f64,
    /// Keep recovered chunks in the standard partition of the cache.
    pub standard_cache: bool,
    pub significant_paths: Option<SignificantFilter>,
    pub utility: UtilityParams,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            edge_nodes: Vec::new(),
            cache_chunks: 2600,
            radio: RadioConfig::default(),
            backhaul: BackhaulConfig::default(),
            catalog: ContentCatalog::default(),
            workload: ZipfSpec::default(),
            policy: PolicyConfig::default(),
            plan_horizon: 2,
            eval_positions: 2,
            seed: 0,
            errors: ErrorModels::default(),
            recovery_margin: None,
            bin_width_s: 1.0,
            standard_cache: false,
            significant_paths: None,
            utility: UtilityParams::default(),
        }
    }
}

fn positive(value: f64, what: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_config(format!(
            "{what} must be positive, got {value}"
        )))
    }
}

fn non_negative(value: f64, what: &str) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_config(format!(
            "{what} must be non-negative, got {value}"
        )))
    }
}

impl SimulationConfig {
    /// Capacity giving the normalized cache size `c_hat`.
    pub fn capacity_for_c_hat(&self, c_hat: f64) -> usize {
        (c_hat * self.catalog.total_chunks() as f64)
            .round()
            .max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.radio.bandwidth_bps, "radio bandwidth")?;
        positive(self.backhaul.datastore_rate_bps, "Data Store rate")?;
        non_negative(self.backhaul.datastore_delay_s, "Data Store delay")?;
        non_negative(self.backhaul.prefetcher_delay_s, "Prefetcher delay")?;
        if self.catalog.n_contents == 0 || self.catalog.chunks_per_content == 0 {
            return Err(Error::invalid_config(
                "catalog must hold at least one chunk",
            ));
        }
        if self.catalog.chunks_per_content > u32::MAX as usize
            || self.catalog.n_contents > u32::MAX as usize
        {
            return Err(Error::invalid_config("catalog too large"));
        }
        positive(self.catalog.chunk_size_bits, "chunk size")?;
        non_negative(self.workload.alpha, "Zipf exponent")?;
        if self.plan_horizon == 0 {
            return Err(Error::invalid_config("plan horizon must be at least 1"));
        }
        positive(self.bin_width_s, "dwell bin width")?;
        if let Some(d) = self.errors.dwell {
            if !d.mu.is_finite() {
                return Err(Error::invalid_config("dwell error mean must be finite"));
            }
            non_negative(d.sigma, "dwell error deviation")?;
        }
        if let Some(s) = self.errors.path_skip {
            if !(0.0..=1.0).contains(&s.fraction) {
                return Err(Error::invalid_config(format!(
                    "path skip fraction {} outside [0, 1]",
                    s.fraction
                )));
            }
        }
        if self.recovery_margin == Some(0) {
            return Err(Error::invalid_config("recovery margin must be at least 1"));
        }
        non_negative(self.utility.a_user, "user utility constant")?;
        non_negative(self.utility.b_op, "operator utility constant")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimulationConfig::default();
        c.validate().unwrap();
        assert_eq!(c.catalog.total_chunks(), 26_000);
        assert_eq!(c.capacity_for_c_hat(0.1), 2600);
    }

    #[test]
    fn policy_json_forms() {
        let p: PolicyConfig = serde_json::from_str(r#"{"kind":"rich","taus":[0.8,0.7]}"#).unwrap();
        assert_eq!(p.name(), "rich");
        let p: PolicyConfig = serde_json::from_str(r#"{"kind":"netpredict"}"#).unwrap();
        assert_eq!(p, PolicyConfig::NetPredict);
        assert!(serde_json::from_str::<PolicyConfig>(r#"{"kind":"rich","taus":[1.5]}"#).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = SimulationConfig::default();
        c.errors.path_skip = Some(PathSkip { fraction: 1.5 });
        assert!(c.validate().is_err());
        let c = SimulationConfig {
            plan_horizon: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = SimulationConfig::default();
        c.backhaul.datastore_delay_s = -1.0;
        assert!(c.validate().is_err());
    }
}
