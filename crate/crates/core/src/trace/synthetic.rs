//! Synthetic mobility traces built from per-EN dwell-time mixtures.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{CarPath, CoverageEvent};
use crate::error::{Error, Result};

/// Dwell-time law of one mixture component, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DwellLaw {
    Fixed { secs: f64 },
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { mean: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub law: DwellLaw,
}

/// A route and the number of cars travelling it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub ens: Vec<String>,
    pub cars: usize,
}

fn default_arrival_rate() -> f64 {
    0.5
}

fn default_transit() -> f64 {
    5.0
}

fn default_min_dwell() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTraceSpec {
    pub paths: Vec<PathSpec>,
    /// Dwell mixture of every EN appearing in `paths`.
    pub dwell: BTreeMap<String, Vec<DwellComponent>>,
    /// Poisson arrival rate of cars, per second.
    #[serde(default = "default_arrival_rate")]
    pub arrival_rate: f64,
    /// Travel time between the coverage areas of consecutive ENs.
    #[serde(default = "default_transit")]
    pub transit_s: f64,
    #[serde(default)]
    pub start_time: f64,
    /// Sampled dwell times are clamped from below to this value.
    #[serde(default = "default_min_dwell")]
    pub min_dwell_s: f64,
}

impl SyntheticTraceSpec {
    pub fn car_count(&self) -> usize {
        self.paths.iter().map(|p| p.cars).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.car_count() == 0 {
            return Err(Error::invalid_config(
                "synthetic trace needs at least one car",
            ));
        }
        if self.paths.iter().any(|p| p.ens.is_empty()) {
            return Err(Error::invalid_config("synthetic path with no ENs"));
        }
        if !(self.arrival_rate > 0.0) || self.transit_s < 0.0 || !(self.min_dwell_s > 0.0) {
            return Err(Error::invalid_config(
                "arrival rate and minimum dwell must be positive, transit non-negative",
            ));
        }
        for en in self.paths.iter().flat_map(|p| &p.ens) {
            let mix = self
                .dwell
                .get(en)
                .ok_or_else(|| Error::invalid_config(format!("no dwell law for edge node {en}")))?;
            if mix.is_empty()
                || mix.iter().any(|c| !(c.weight >= 0.0))
                || mix.iter().all(|c| c.weight == 0.0)
            {
                return Err(Error::invalid_config(format!(
                    "bad dwell mixture for edge node {en}"
                )));
            }
            for c in mix {
                let ok = match c.law {
                    DwellLaw::Fixed { secs } => secs > 0.0,
                    DwellLaw::Uniform { lo, hi } => lo >= 0.0 && hi > lo,
                    DwellLaw::Normal { mean, sd } => mean > 0.0 && sd >= 0.0,
                    DwellLaw::Exponential { mean } => mean > 0.0,
                };
                if !ok {
                    return Err(Error::invalid_config(format!(
                        "bad dwell law for edge node {en}"
                    )));
                }
            }
        }
        Ok(())
    }
}

struct Sampler {
    index: WeightedIndex<f64>,
    laws: Vec<DwellLaw>,
}

impl Sampler {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.laws[self.index.sample(rng)] {
            DwellLaw::Fixed { secs } => secs,
            DwellLaw::Uniform { lo, hi } => rng.random_range(lo..hi),
            DwellLaw::Normal { mean, sd } => {
                if sd == 0.0 {
                    mean
                } else {
                    Normal::new(mean, sd).expect("validated").sample(rng)
                }
            }
            DwellLaw::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
        }
    }
}

/// Generates a trace from `spec`; identical seeds give identical traces.
///
/// Cars are assigned to routes with the exact per-route counts, in a random
/// order, and arrive as a Poisson process.
pub fn generate_synthetic_trace(spec: &SyntheticTraceSpec, seed: u64) -> Result<Vec<CarPath>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samplers: BTreeMap<&str, Sampler> = spec
        .dwell
        .iter()
        .map(|(en, mix)| {
            let index = WeightedIndex::new(mix.iter().map(|c| c.weight))
                .map_err(|e| Error::invalid_config(format!("dwell mixture of {en}: {e}")))?;
            Ok((
                en.as_str(),
                Sampler {
                    index,
                    laws: mix.iter().map(|c| c.law.clone()).collect(),
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut routes: Vec<usize> = spec
        .paths
        .iter()
        .enumerate()
        .flat_map(|(i, p)| std::iter::repeat_n(i, p.cars))
        .collect();
    routes.shuffle(&mut rng);

    let inter_arrival = Exp::new(spec.arrival_rate).expect("validated");
    let width = routes.len().to_string().len().max(4);
    let mut t = spec.start_time;
    let mut out = Vec::with_capacity(routes.len());
    for (n, route) in routes.into_iter().enumerate() {
        t += inter_arrival.sample(&mut rng);
        let car_id = format!("car{n:0width$}");
        let mut clock = t;
        let mut events = Vec::with_capacity(spec.paths[route].ens.len());
        for en in &spec.paths[route].ens {
            let dwell = samplers[en.as_str()].sample(&mut rng).max(spec.min_dwell_s);
            events.push(CoverageEvent::new(
                car_id.clone(),
                en.clone(),
                clock,
                clock + dwell,
            ));
            clock += dwell + spec.transit_s;
        }
        out.push(CarPath { car_id, events });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(cars: usize) -> SyntheticTraceSpec {
        let mut dwell = BTreeMap::new();
        for en in ["A", "B", "C"] {
            dwell.insert(
                en.to_string(),
                vec![
                    DwellComponent {
                        weight: 0.8,
                        law: DwellLaw::Fixed { secs: 1.0 },
                    },
                    DwellComponent {
                        weight: 0.2,
                        law: DwellLaw::Fixed { secs: 10.0 },
                    },
                ],
            );
        }
        SyntheticTraceSpec {
            paths: vec![PathSpec {
                ens: vec!["A".into(), "B".into(), "C".into()],
                cars,
            }],
            dwell,
            arrival_rate: 0.1,
            transit_s: 2.0,
            start_time: 0.0,
            min_dwell_s: 0.5,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_synthetic_trace(&spec(20), 7).unwrap();
        let b = generate_synthetic_trace(&spec(20), 7).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_trace(&spec(20), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_car_three_events() {
        let trace = generate_synthetic_trace(&spec(1), 1).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].events.len(), 3);
        assert_eq!(trace[0].en_sequence(), vec!["A", "B", "C"]);
        crate::trace::validate_paths(&trace).unwrap();
    }

    #[test]
    fn mixture_weights_converge() {
        let trace = generate_synthetic_trace(&spec(1000), 3).unwrap();
        let slow = trace.iter().filter(|p| p.events[0].dwell() > 5.0).count() as f64 / 1000.0;
        assert!((slow - 0.2).abs() <= 0.03, "slow fraction {slow}");
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_synthetic_trace(&spec(0), 1).is_err());
        let mut s = spec(3);
        s.paths[0].ens.clear();
        assert!(generate_synthetic_trace(&s, 1).is_err());
        let mut s = spec(3);
        s.dwell.remove("B");
        assert!(generate_synthetic_trace(&s, 1).is_err());
    }

    #[test]
    fn law_tag_parses() {
        let c: DwellComponent =
            serde_json::from_str(r#"{"weight":0.3,"law":"uniform","lo":1.0,"hi":2.0}"#).unwrap();
        assert_eq!(c.law, DwellLaw::Uniform { lo: 1.0, hi: 2.0 });
    }
}
