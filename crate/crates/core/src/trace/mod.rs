//! Mobility input: coverage events, per-EN dwell statistics and significant
//! paths.
//!
//! The canonical input is a list of [`CoverageEvent`]s, one per car visit
//! to an EN. Raw position samples can be converted with
//! [`derive_coverage_from_positions`]; synthetic traces come from
//! [`generate_synthetic_trace`].

mod io;
mod positions;
mod stats;
mod synthetic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_coverage_events, write_coverage_events};
pub use positions::{
    derive_coverage_from_positions, load_en_layout, load_positions, EnSite, PositionSample,
};
pub use stats::{
    avg_concurrent_users, empirical_dwell_dist, moments, significant_paths, DwellStats,
    SampleMoments, SignificantPath, DEFAULT_FAST_SLOW_BOUNDARY,
};
pub use synthetic::{
    generate_synthetic_trace, DwellComponent, DwellLaw, PathSpec, SyntheticTraceSpec,
};

/// One visit of a car to the coverage area of an EN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEvent {
    pub car_id: String,
    pub en_id: String,
    pub t_enter: f64,
    pub t_exit: f64,
}

impl CoverageEvent {
    pub fn new(
        car_id: impl Into<String>,
        en_id: impl Into<String>,
        t_enter: f64,
        t_exit: f64,
    ) -> Self {
        Self {
            car_id: car_id.into(),
            en_id: en_id.into(),
            t_enter,
            t_exit,
        }
    }

    pub fn dwell(&self) -> f64 {
        self.t_exit - self.t_enter
    }
}

/// Time-ordered visits of one car.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarPath {
    pub car_id: String,
    pub events: Vec<CoverageEvent>,
}

impl CarPath {
    pub fn en_sequence(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.en_id.as_str()).collect()
    }

    pub fn first_enter(&self) -> f64 {
        self.events.first().map_or(f64::INFINITY, |e| e.t_enter)
    }
}

/// Groups events per car, sorts each car's visits by entry time and checks
/// that they do not overlap. Cars are ordered by first entry, then id.
pub fn group_paths(events: &[CoverageEvent]) -> Result<Vec<CarPath>> {
    let mut by_car: BTreeMap<&str, Vec<CoverageEvent>> = BTreeMap::new();
    for e in events {
        by_car.entry(&e.car_id).or_default().push(e.clone());
    }
    let mut paths = Vec::with_capacity(by_car.len());
    for (car, mut evs) in by_car {
        evs.sort_by(|a, b| a.t_enter.total_cmp(&b.t_enter));
        check_car_events(&evs)?;
        paths.push(CarPath {
            car_id: car.to_string(),
            events: evs,
        });
    }
    sort_paths(&mut paths);
    Ok(paths)
}

pub(crate) fn sort_paths(paths: &mut [CarPath]) {
    paths.sort_by(|a, b| {
        a.first_enter()
            .total_cmp(&b.first_enter())
            .then_with(|| a.car_id.cmp(&b.car_id))
    });
}

/// Flattens paths back into a single event list (car order preserved).
pub fn flatten_paths(paths: &[CarPath]) -> Vec<CoverageEvent> {
    paths
        .iter()
        .flat_map(|p| p.events.iter().cloned())
        .collect()
}

/// Checks the per-car invariants on every path.
pub fn validate_paths(paths: &[CarPath]) -> Result<()> {
    for p in paths {
        if p.events.iter().any(|e| e.car_id != p.car_id) {
            return Err(Error::invalid_arg(format!(
                "path of car {} holds events of another car",
                p.car_id
            )));
        }
        if p.events.windows(2).any(|w| w[1].t_enter < w[0].t_enter) {
            return Err(Error::invalid_arg(format!(
                "events of car {} are not sorted",
                p.car_id
            )));
        }
        check_car_events(&p.events)?;
    }
    Ok(())
}

fn check_car_events(events: &[CoverageEvent]) -> Result<()> {
    for e in events {
        if !(e.t_exit > e.t_enter) || !e.t_enter.is_finite() || !e.t_exit.is_finite() {
            return Err(Error::invalid_arg(format!(
                "car {} at {}: exit time {} is not after entry time {}",
                e.car_id, e.en_id, e.t_exit, e.t_enter
            )));
        }
    }
    for w in events.windows(2) {
        if w[1].t_enter < w[0].t_exit {
            return Err(Error::OverlappingCoverage {
                line: 0,
                car_id: w[0].car_id.clone(),
                first: w[0].en_id.clone(),
                second: w[1].en_id.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_sorts_and_orders_cars() {
        let events = vec![
            CoverageEvent::new("b", "B", 30.0, 40.0),
            CoverageEvent::new("a", "C", 50.0, 60.0),
            CoverageEvent::new("a", "A", 0.0, 10.0),
            CoverageEvent::new("b", "A", 5.0, 8.0),
        ];
        let paths = group_paths(&events).unwrap();
        assert_eq!(paths[0].car_id, "a");
        assert_eq!(paths[0].en_sequence(), vec!["A", "C"]);
        assert_eq!(paths[1].en_sequence(), vec!["A", "B"]);
        validate_paths(&paths).unwrap();
        assert_eq!(flatten_paths(&paths).len(), 4);
    }

    #[test]
    fn overlap_detected() {
        let events = vec![
            CoverageEvent::new("a", "A", 0.0, 10.0),
            CoverageEvent::new("a", "B", 9.0, 12.0),
        ];
        assert!(matches!(
            group_paths(&events),
            Err(Error::OverlappingCoverage { .. })
        ));
    }

    #[test]
    fn touching_intervals_allowed() {
        let events = vec![
            CoverageEvent::new("a", "A", 0.0, 10.0),
            CoverageEvent::new("a", "B", 10.0, 12.0),
        ];
        assert!(group_paths(&events).is_ok());
    }
}
