use std::collections::HashMap;

use super::config::{PolicyConfig, SimulationConfig};
use crate::error::Result;
use crate::policy::{netpredict_plan, rich_plan_with, RichOptions};
use crate::probmodel::{
    estimate_chunk_count_dist, phi_general, shift_phi, truncate_to_cache, DiscretePdf, PhiMatrix,
    RadioParams,
};
use crate::trace::{
    avg_concurrent_users, empirical_dwell_dist, CoverageEvent, DEFAULT_FAST_SLOW_BOUNDARY,
};

/// Store chunk `chunk` at path position `position` with download
/// probability `prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Instruction {
    pub position: usize,
    pub chunk: u32,
    pub prob: f64,
}

/// Centralized planner: knows the historical dwell statistics of every EN
/// and each car's expected EN sequence.
pub(crate) struct Prefetcher {
    chunk_counts: Vec<DiscretePdf>,
    means: Vec<f64>,
    n_chunks: usize,
    policy: PolicyConfig,
    base_phi: HashMap<Vec<usize>, PhiMatrix>,
    avg_users: Vec<f64>,
    pub plans_computed: u64,
}

impl Prefetcher {
    /// `history` holds the unperturbed coverage events; `en_ids` is indexed
    /// like the simulator's EN table.
    pub fn new(
        config: &SimulationConfig,
        history: &[CoverageEvent],
        en_ids: &[String],
    ) -> Result<Self> {
        let mut users = Vec::with_capacity(en_ids.len());
        for en in en_ids {
            users.push(if history.iter().any(|e| &e.en_id == en) {
                avg_concurrent_users(history, en)?
            } else {
                1.0
            });
        }
        let radio = RadioParams {
            bandwidth_bps: config.radio.bandwidth_bps,
            chunk_size_bits: config.catalog.chunk_size_bits,
            avg_users: users.clone(),
        };
        let mut chunk_counts = Vec::with_capacity(en_ids.len());
        for (i, en) in en_ids.iter().enumerate() {
            let x = if history.iter().any(|e| &e.en_id == en) {
                let stats = empirical_dwell_dist(
                    history,
                    en,
                    config.bin_width_s,
                    DEFAULT_FAST_SLOW_BOUNDARY,
                )?;
                estimate_chunk_count_dist(&stats.dwell_pdf, config.bin_width_s, &radio, i)?
            } else {
                DiscretePdf::point_mass(0)
            };
            chunk_counts.push(truncate_to_cache(&x, config.cache_chunks));
        }
        Ok(Self {
            means: chunk_counts.iter().map(DiscretePdf::mean).collect(),
            chunk_counts,
            n_chunks: config.catalog.chunks_per_content,
            policy: config.policy.clone(),
            base_phi: HashMap::new(),
            avg_users: users,
            plans_computed: 0,
        })
    }

    /// Average number of cars sharing EN `en`, at least one.
    pub fn avg_users(&self, en: usize) -> f64 {
        self.avg_users[en].max(1.0)
    }

    /// Instructions for a car expected to visit `path[start..start + horizon]`
    /// holding `delivered` chunks.
    pub fn plan(
        &mut self,
        path: &[usize],
        start: usize,
        horizon: usize,
        delivered: usize,
    ) -> Result<Vec<Instruction>> {
        let end = (start + horizon).min(path.len());
        if start >= end || delivered >= self.n_chunks {
            return Ok(Vec::new());
        }
        self.plans_computed += 1;
        let ens = &path[start..end];
        let mut out = Vec::new();
        match &self.policy {
            PolicyConfig::Rich {
                taus,
                keep_partial_on_failure,
            } => {
                if !self.base_phi.contains_key(ens) {
                    let laws: Vec<DiscretePdf> =
                        ens.iter().map(|&e| self.chunk_counts[e].clone()).collect();
                    self.base_phi
                        .insert(ens.to_vec(), phi_general(&laws, self.n_chunks)?);
                }
                let phi = shift_phi(&self.base_phi[ens], delivered)?;
                let plan = rich_plan_with(
                    &phi,
                    taus,
                    RichOptions {
                        keep_partial_on_failure: *keep_partial_on_failure,
                        position_offset: start,
                    },
                );
                for a in &plan.chunks {
                    for &p in &a.positions {
                        out.push(Instruction {
                            position: start + p,
                            chunk: a.chunk as u32,
                            prob: phi.get(p, a.chunk),
                        });
                    }
                }
            }
            PolicyConfig::NetPredict => {
                let means: Vec<f64> = ens.iter().map(|&e| self.means[e]).collect();
                let plan = netpredict_plan(&means, delivered + 1, self.n_chunks);
                for a in &plan.chunks {
                    out.push(Instruction {
                        position: start + a.positions[0],
                        chunk: a.chunk as u32,
                        prob: 1.0,
                    });
                }
            }
            PolicyConfig::Pop => {}
        }
        Ok(out)
    }
}
