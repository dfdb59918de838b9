use super::{ChunkAssignment, PrefetchPlan, ThresholdProfile};
use crate::probmodel::PhiMatrix;

/// Slack for deciding that candidates exhausted exactly at the threshold
/// reached it (a column summing to one rarely adds up to exactly 1.0).
const EXHAUSTED_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RichOptions {
    /// Keep the copies placed for a chunk whose accumulated probability never
    /// passed its threshold instead of dropping them.
    pub keep_partial_on_failure: bool,
    /// Path position of the matrix's first row, used to pick thresholds.
    pub position_offset: usize,
}

/// Owner of each chunk (index `k - 1`): the earliest row maximizing
/// `phi(i, k)`. Chunks with no positive entry belong to the last row.
pub fn assign_chunk_owners(phi: &PhiMatrix) -> Vec<usize> {
    let last = phi.n_ens() - 1;
    (1..=phi.n_chunks())
        .map(|k| {
            let mut best = (last, 0.0);
            for i in 0..phi.n_ens() {
                let p = phi.get(i, k);
                if p > best.1 {
                    best = (i, p);
                }
            }
            best.0
        })
        .collect()
}

pub fn rich_plan(phi: &PhiMatrix, profile: &ThresholdProfile) -> PrefetchPlan {
    rich_plan_with(phi, profile, RichOptions::default())
}

/// Greedy placement: for every chunk, ENs are added in decreasing order of
/// download probability while the accumulated probability has not passed
/// the owner's threshold.
pub fn rich_plan_with(
    phi: &PhiMatrix,
    profile: &ThresholdProfile,
    options: RichOptions,
) -> PrefetchPlan {
    let owners = assign_chunk_owners(phi);
    let mut chunks = Vec::new();
    let mut candidates: Vec<(usize, f64)> = Vec::with_capacity(phi.n_ens());
    for k in 1..=phi.n_chunks() {
        candidates.clear();
        candidates.extend(
            (0..phi.n_ens())
                .map(|i| (i, phi.get(i, k)))
                .filter(|(_, p)| *p > 0.0),
        );
        if candidates.is_empty() {
            continue;
        }
        // stable: equal probabilities keep the earlier EN first
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
        let tau = profile.tau(options.position_offset + owners[k - 1]);
        let mut positions = Vec::new();
        let mut p = 0.0;
        for &(i, phi_ik) in &candidates {
            if p > tau {
                break;
            }
            positions.push(i);
            p += phi_ik;
        }
        let exhausted = positions.len() == candidates.len();
        let reached = p > tau || (exhausted && p >= tau - EXHAUSTED_SLACK);
        if !reached && !options.keep_partial_on_failure {
            continue;
        }
        positions.sort_unstable();
        chunks.push(ChunkAssignment {
            chunk: k,
            positions,
            achieved_prob: p,
        });
    }
    PrefetchPlan {
        car_id: String::new(),
        content_id: 0,
        horizon: phi.n_ens(),
        chunks,
    }
}
