use serde::{Deserialize, Serialize};

use super::{ChunkAssignment, PrefetchPlan};
use crate::cache::ChunkKey;

/// Inclusive chunk range; empty when `last < first`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRange {
    pub first: usize,
    pub last: usize,
}

impl ChunkRange {
    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.last - self.first + 1
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.first..=self.last
    }
}

/// Consecutive ranges sized by the rounded (half up) mean chunk count of
/// each EN, starting at `start_chunk` and capped at `n_chunks`.
pub fn netpredict_ranges(
    mean_chunks: &[f64],
    start_chunk: usize,
    n_chunks: usize,
) -> Vec<ChunkRange> {
    let mut last = start_chunk.max(1) - 1;
    mean_chunks
        .iter()
        .map(|m| {
            let count = (m.max(0.0) + 0.5).floor() as usize;
            let first = last + 1;
            last = (last + count).min(n_chunks.max(last));
            ChunkRange { first, last }
        })
        .collect()
}

/// The ranges of [`netpredict_ranges`] as a plan where every stored chunk
/// counts as certain.
pub fn netpredict_plan(mean_chunks: &[f64], start_chunk: usize, n_chunks: usize) -> PrefetchPlan {
    let chunks = netpredict_ranges(mean_chunks, start_chunk, n_chunks)
        .into_iter()
        .enumerate()
        .flat_map(|(i, r)| {
            r.iter().map(move |k| ChunkAssignment {
                chunk: k,
                positions: vec![i],
                achieved_prob: 1.0,
            })
        })
        .collect();
    PrefetchPlan {
        car_id: String::new(),
        content_id: 0,
        horizon: mean_chunks.len(),
        chunks,
    }
}

/// Popularity-based static placement shared by every EN: whole contents in
/// rank order, then the leading chunks of the first content that does not
/// fit.
pub fn pop_plan(
    ranked_contents: &[u32],
    chunks_per_content: usize,
    capacity: usize,
) -> Vec<ChunkKey> {
    let mut out = Vec::with_capacity(capacity.min(ranked_contents.len() * chunks_per_content));
    for &content in ranked_contents {
        let room = capacity - out.len();
        if room == 0 {
            break;
        }
        let take = room.min(chunks_per_content);
        out.extend((1..=take).map(|k| ChunkKey::new(content, k as u32)));
    }
    out
}
