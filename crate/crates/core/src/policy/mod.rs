//! Prefetch planning: the probability-threshold planner, the mean-based and
//! popularity-based baselines, and the exhaustive threshold search.

mod baselines;
mod optimize;
mod rich;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baselines::{netpredict_plan, netpredict_ranges, pop_plan, ChunkRange};
pub use optimize::{optimize_thresholds, GridPoint, ThresholdSearch};
pub use rich::{assign_chunk_owners, rich_plan, rich_plan_with, RichOptions};

/// One download-probability threshold per path position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdProfile {
    taus: Vec<f64>,
}

impl ThresholdProfile {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::invalid_arg("threshold profile is empty"));
        }
        if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::invalid_arg(format!("threshold {t} outside [0, 1]")));
        }
        Ok(Self { taus })
    }

    /// The same threshold at `positions` path positions.
    pub fn single(tau: f64, positions: usize) -> Result<Self> {
        Self::new(vec![tau; positions.max(1)])
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// Threshold of path position `position`; positions past the end of the
    /// profile reuse its last value.
    pub fn tau(&self, position: usize) -> f64 {
        self.taus[position.min(self.taus.len() - 1)]
    }
}

impl TryFrom<Vec<f64>> for ThresholdProfile {
    type Error = Error;

    fn try_from(taus: Vec<f64>) -> Result<Self> {
        Self::new(taus)
    }
}

impl From<ThresholdProfile> for Vec<f64> {
    fn from(p: ThresholdProfile) -> Self {
        p.taus
    }
}

/// Placement of one chunk: the path positions (0-based) storing a copy and
/// the probability that the car downloads it at one of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkAssignment {
    pub chunk: usize,
    pub positions: Vec<usize>,
    pub achieved_prob: f64,
}

/// Prefetch instructions for one car over `horizon` consecutive ENs of its
/// path. Chunks without any copy are omitted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrefetchPlan {
    pub car_id: String,
    pub content_id: u32,
    pub horizon: usize,
    pub chunks: Vec<ChunkAssignment>,
}

#[derive(Serialize)]
struct PlanDump<'a> {
    car_id: &'a str,
    content_id: u32,
    chunks: Vec<ChunkDump>,
}

#[derive(Serialize)]
struct ChunkDump {
    k: usize,
    ens: Vec<usize>,
    p_k: f64,
}

impl PrefetchPlan {
    pub fn for_request(mut self, car_id: impl Into<String>, content_id: u32) -> Self {
        self.car_id = car_id.into();
        self.content_id = content_id;
        self
    }

    /// Copies stored for chunk `k`.
    pub fn copies(&self, k: usize) -> usize {
        self.assignment(k).map_or(0, |a| a.positions.len())
    }

    pub fn assignment(&self, k: usize) -> Option<&ChunkAssignment> {
        self.chunks
            .binary_search_by_key(&k, |a| a.chunk)
            .ok()
            .map(|i| &self.chunks[i])
    }

    /// Chunks assigned to path position `position`, ascending.
    pub fn chunks_at(&self, position: usize) -> Vec<usize> {
        self.chunks
            .iter()
            .filter(|a| a.positions.contains(&position))
            .map(|a| a.chunk)
            .collect()
    }

    /// JSON dump with 1-based EN positions.
    pub fn to_json(&self) -> Result<String> {
        let dump = PlanDump {
            car_id: &self.car_id,
            content_id: self.content_id,
            chunks: self
                .chunks
                .iter()
                .map(|a| ChunkDump {
                    k: a.chunk,
                    ens: a.positions.iter().map(|p| p + 1).collect(),
                    p_k: a.achieved_prob,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&dump)?)
    }
}

/// Whether a car about to reach path position `next_position` needs a new
/// plan, given a plan covering positions `plan_start..plan_start + horizon`.
pub fn refresh_decision(next_position: usize, plan_start: usize, horizon: usize) -> bool {
    next_position < plan_start || next_position >= plan_start + horizon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_validation() {
        assert!(ThresholdProfile::new(vec![]).is_err());
        assert!(ThresholdProfile::new(vec![0.5, 1.2]).is_err());
        assert!(ThresholdProfile::new(vec![-0.1]).is_err());
        let p = ThresholdProfile::new(vec![0.2, 0.4]).unwrap();
        assert_eq!(p.tau(0), 0.2);
        assert_eq!(p.tau(5), 0.4);
        let parsed: ThresholdProfile = serde_json::from_str("[0.1,0.9]").unwrap();
        assert_eq!(parsed.taus(), &[0.1, 0.9]);
        assert!(serde_json::from_str::<ThresholdProfile>("[2.0]").is_err());
    }

    #[test]
    fn refresh_at_horizon_edge() {
        assert!(!refresh_decision(1, 0, 3));
        assert!(refresh_decision(3, 0, 3));
        assert!(!refresh_decision(3, 2, 2));
    }

    #[test]
    fn plan_dump_is_one_based() {
        let plan = PrefetchPlan {
            car_id: String::new(),
            content_id: 0,
            horizon: 2,
            chunks: vec![ChunkAssignment {
                chunk: 3,
                positions: vec![0, 1],
                achieved_prob: 0.75,
            }],
        }
        .for_request("car7", 2);
        assert_eq!(
            plan.to_json().unwrap(),
            r#"{"car_id":"car7","content_id":2,"chunks":[{"k":3,"ens":[1,2],"p_k":0.75}]}"#
        );
        assert_eq!(plan.copies(3), 2);
        assert_eq!(plan.copies(4), 0);
        assert_eq!(plan.chunks_at(1), vec![3]);
    }
}
