//! Subcommand bodies, independent of argument parsing and file output.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use roadcache_core::metrics::MetricsReport;
use roadcache_core::policy::{
    optimize_thresholds, rich_plan_with, PrefetchPlan, RichOptions, ThresholdProfile,
    ThresholdSearch,
};
use roadcache_core::probmodel::{
    estimate_chunk_count_dist, phi_general, shift_phi, truncate_to_cache, DiscretePdf, PhiMatrix,
    RadioParams,
};
use roadcache_core::simcore::{run, DwellError, PathSkip, PolicyConfig, SimulationConfig};
use roadcache_core::trace::{
    avg_concurrent_users, empirical_dwell_dist, flatten_paths, generate_synthetic_trace,
    group_paths, load_coverage_events, significant_paths, CarPath, CoverageEvent, DwellStats,
    SignificantPath,
};
use serde::Serialize;

use crate::config::{AnalysisConfig, CountLaw, ExperimentConfig, Objective, TraceSource};
use crate::error::{CliError, CliResult};

/// Reads a coverage-event CSV; a blank file is an empty trace.
pub fn read_coverage_file(path: &Path) -> CliResult<Vec<CoverageEvent>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    load_coverage_events(text.as_bytes()).map_err(|e| CliError::input(path, e))
}

/// The trace of a run seeded with `seed`: the configured file, or a fresh
/// synthetic realization.
pub fn trace_for_seed(source: &TraceSource, seed: u64) -> CliResult<Vec<CarPath>> {
    if let Some(path) = &source.file {
        let events = read_coverage_file(path)?;
        return group_paths(&events).map_err(|e| CliError::input(path, e));
    }
    match &source.synthetic {
        Some(spec) => Ok(generate_synthetic_trace(spec, seed)?),
        None => Err(CliError::Usage(
            "no trace: set trace.file or trace.synthetic in the config, or pass --trace".into(),
        )),
    }
}

/// Traces keyed by seed; a file trace is read once and shared.
fn traces_for_seeds(source: &TraceSource, seeds: &[u64]) -> CliResult<BTreeMap<u64, Vec<CarPath>>> {
    let mut out = BTreeMap::new();
    if source.file.is_some() {
        let trace = trace_for_seed(source, 0)?;
        for &s in seeds {
            out.insert(s, trace.clone());
        }
    } else {
        for &s in seeds {
            if let std::collections::btree_map::Entry::Vacant(slot) = out.entry(s) {
                slot.insert(trace_for_seed(source, s)?);
            }
        }
    }
    Ok(out)
}

pub fn generate_trace(config: &ExperimentConfig, seed: u64) -> CliResult<Vec<CoverageEvent>> {
    let spec = config.trace.synthetic.as_ref().ok_or_else(|| {
        CliError::Usage("generate-trace needs a [trace.synthetic] section".into())
    })?;
    Ok(flatten_paths(&generate_synthetic_trace(spec, seed)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceAnalysis {
    pub edge_nodes: Vec<DwellStats>,
    pub significant_paths: Vec<SignificantPath>,
    pub car_count: usize,
}

pub fn analyze_trace(
    events: &[CoverageEvent],
    settings: &AnalysisConfig,
) -> CliResult<TraceAnalysis> {
    let paths = group_paths(events)?;
    let mut ens: Vec<&str> = events.iter().map(|e| e.en_id.as_str()).collect();
    ens.sort_unstable();
    ens.dedup();
    let edge_nodes = ens
        .iter()
        .map(|en| {
            empirical_dwell_dist(
                events,
                en,
                settings.bin_width_s,
                settings.fast_slow_boundary_s,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TraceAnalysis {
        edge_nodes,
        significant_paths: significant_paths(&paths, settings.path_len, settings.min_cars),
        car_count: paths.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    /// Chunk-count law of every EN, after cache truncation.
    pub laws: Vec<DiscretePdf>,
    pub phi: PhiMatrix,
    pub plan: PrefetchPlan,
}

fn count_law(
    law: &CountLaw,
    position: usize,
    config: &ExperimentConfig,
    trace: &mut Option<Vec<CoverageEvent>>,
) -> CliResult<DiscretePdf> {
    Ok(match law {
        CountLaw::Triangular { mean } => DiscretePdf::triangular(*mean)?,
        CountLaw::PointMass { chunks } => DiscretePdf::point_mass(*chunks),
        CountLaw::Weights { weights } => DiscretePdf::from_weights(weights.clone())?,
        CountLaw::Mixture { chunks, weights } => {
            if chunks.len() != weights.len() || chunks.is_empty() {
                return Err(CliError::Usage(format!(
                    "mixture law at position {}: {} chunk counts but {} weights",
                    position + 1,
                    chunks.len(),
                    weights.len()
                )));
            }
            let mut w = vec![0.0; chunks.iter().max().copied().unwrap_or(0) + 1];
            for (&c, &p) in chunks.iter().zip(weights) {
                w[c] += p;
            }
            DiscretePdf::from_weights(w)?
        }
        CountLaw::FromTrace { en } => {
            if trace.is_none() {
                *trace = Some(flatten_paths(&trace_for_seed(&config.trace, config.seed)?));
            }
            let events = trace.as_deref().expect("loaded above");
            let sim = &config.simulation;
            let stats = empirical_dwell_dist(
                events,
                en,
                sim.bin_width_s,
                config.analysis.fast_slow_boundary_s,
            )?;
            let radio = RadioParams {
                bandwidth_bps: sim.radio.bandwidth_bps,
                chunk_size_bits: sim.catalog.chunk_size_bits,
                avg_users: vec![avg_concurrent_users(events, en)?],
            };
            estimate_chunk_count_dist(&stats.dwell_pdf, sim.bin_width_s, &radio, 0)?
        }
    })
}

pub fn plan(config: &ExperimentConfig) -> CliResult<PlanOutput> {
    let settings = &config.plan;
    if settings.laws.is_empty() {
        return Err(CliError::Usage("plan needs at least one count law".into()));
    }
    let profile = ThresholdProfile::new(settings.taus.clone())?;
    let mut trace = None;
    let laws = settings
        .laws
        .iter()
        .enumerate()
        .map(|(i, law)| {
            let x = count_law(law, i, config, &mut trace)?;
            Ok(match settings.capacity {
                Some(m) => truncate_to_cache(&x, m),
                None => x,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let phi = shift_phi(&phi_general(&laws, settings.n_chunks)?, settings.delivered)?;
    let plan = rich_plan_with(
        &phi,
        &profile,
        RichOptions {
            keep_partial_on_failure: settings.keep_partial_on_failure,
            position_offset: 0,
        },
    );
    Ok(PlanOutput { laws, phi, plan })
}

/// Coordinates of one run within a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepKey {
    pub policy: PolicyConfig,
    pub c_hat: Option<f64>,
    pub dwell_mu: Option<f64>,
    pub path_skip: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub key: SweepKey,
    pub report: MetricsReport,
}

fn or_single<T: Clone>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

fn with_none<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

/// Every combination of the sweep axes, ordered by policy (as listed), cache
/// size, dwell error, path error and seed.
pub fn sweep_keys(config: &ExperimentConfig) -> Vec<SweepKey> {
    let sweep = &config.sweep;
    let mut keys = Vec::new();
    for policy in or_single(&sweep.policies, config.simulation.policy.clone()) {
        for &c_hat in &with_none(&sweep.c_hat) {
            for &dwell_mu in &with_none(&sweep.dwell_mu) {
                for &path_skip in &with_none(&sweep.path_skip) {
                    for &seed in &or_single(&sweep.seeds, config.seed) {
                        keys.push(SweepKey {
                            policy: policy.clone(),
                            c_hat,
                            dwell_mu,
                            path_skip,
                            seed,
                        });
                    }
                }
            }
        }
    }
    keys
}

fn run_config(config: &ExperimentConfig, key: &SweepKey) -> SimulationConfig {
    let mut sim = config.simulation.clone();
    sim.policy = key.policy.clone();
    sim.seed = key.seed;
    if let Some(c) = key.c_hat {
        sim.cache_chunks = sim.capacity_for_c_hat(c);
    }
    if let Some(mu) = key.dwell_mu {
        sim.errors.dwell = Some(DwellError {
            mu,
            sigma: config.sweep.dwell_sigma,
        });
    }
    if let Some(fraction) = key.path_skip {
        sim.errors.path_skip = Some(PathSkip { fraction });
    }
    sim
}

pub fn simulate(config: &ExperimentConfig) -> CliResult<Vec<SweepRun>> {
    let keys = sweep_keys(config);
    for c in keys.iter().filter_map(|k| k.c_hat) {
        if !(0.0..=1.0).contains(&c) {
            return Err(CliError::Usage(format!(
                "normalized cache size {c} outside [0, 1]"
            )));
        }
    }
    let seeds: Vec<u64> = keys.iter().map(|k| k.seed).collect();
    let traces = traces_for_seeds(&config.trace, &seeds)?;
    keys.into_par_iter()
        .map(|key| {
            log::info!("running {} seed {}", key.policy.name(), key.seed);
            let report = run(&run_config(config, &key), &traces[&key.seed])?;
            Ok(SweepRun { key, report })
        })
        .collect()
}

/// Exhaustive search over per-position RICH thresholds; the objective is
/// averaged over the configured seeds.
pub fn optimize(config: &ExperimentConfig) -> CliResult<ThresholdSearch> {
    let settings = &config.optimize;
    if settings.grid.is_empty() {
        return Err(CliError::Usage("optimization grid is empty".into()));
    }
    let seeds = or_single(&settings.seeds, config.seed);
    let traces = traces_for_seeds(&config.trace, &seeds)?;
    let mut base = config.simulation.clone();
    if let Some(c) = settings.c_hat {
        base.cache_chunks = base.capacity_for_c_hat(c);
    }
    let search = optimize_thresholds(&settings.grid, settings.dims, |profile| {
        let mut total = 0.0;
        for &seed in &seeds {
            let mut sim = base.clone();
            sim.seed = seed;
            sim.policy = PolicyConfig::Rich {
                taus: profile.clone(),
                keep_partial_on_failure: settings.keep_partial_on_failure,
            };
            let report = run(&sim, &traces[&seed])?;
            total += match settings.objective {
                Objective::HitProb => report.hit_prob,
                Objective::Utility => report.utility,
            };
        }
        log::info!(
            "thresholds {:?}: {}",
            profile.taus(),
            total / seeds.len() as f64
        );
        Ok(total / seeds.len() as f64)
    })?;
    Ok(search)
}
