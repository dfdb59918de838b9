use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CarPath, CoverageEvent};
use crate::error::{Error, Result};
use crate::probmodel::DiscretePdf;

/// Cars dwelling longer than this many seconds under an EN are "slow".
pub const DEFAULT_FAST_SLOW_BOUNDARY: f64 = 10.0;

const BIN_SLACK: f64 = 1e-9;

/// Dwell-time statistics of one EN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellStats {
    pub en_id: String,
    /// Width in seconds of one dwell bin; bin `j` covers `[j w, (j + 1) w)`.
    pub bin_width: f64,
    pub dwell_pdf: DiscretePdf,
    pub avg_concurrent_users: f64,
    pub sample_count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub fast_slow_boundary: f64,
    pub fast_count: usize,
    pub slow_count: usize,
    pub fast_pdf: Option<DiscretePdf>,
    pub slow_pdf: Option<DiscretePdf>,
}

/// Population moments of a sample; skewness and kurtosis are zero when the
/// variance vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn moments(samples: &[f64]) -> SampleMoments {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return SampleMoments {
            mean: 0.0,
            std_dev: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        };
    }
    let mean = samples.iter().sum::<f64>() / n;
    let central = |p: i32| samples.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let m2 = central(2);
    let std_dev = m2.sqrt();
    // relative threshold: identical samples may leave rounding residue
    if m2 <= (mean.abs() * 1e-12).powi(2) {
        return SampleMoments {
            mean,
            std_dev: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        };
    }
    SampleMoments {
        mean,
        std_dev,
        skewness: central(3) / m2.powf(1.5),
        kurtosis: central(4) / (m2 * m2),
    }
}

fn dwell_bin(dwell: f64, bin_width: f64) -> usize {
    (dwell / bin_width + BIN_SLACK).floor().max(0.0) as usize
}

/// Empirical dwell-time law of `en_id`, with the fast/slow split at
/// `fast_slow_boundary` seconds (slow means strictly longer).
pub fn empirical_dwell_dist(
    events: &[CoverageEvent],
    en_id: &str,
    bin_width: f64,
    fast_slow_boundary: f64,
) -> Result<DwellStats> {
    if !(bin_width > 0.0) {
        return Err(Error::invalid_arg("bin width must be positive"));
    }
    let dwells: Vec<f64> = events
        .iter()
        .filter(|e| e.en_id == en_id)
        .map(CoverageEvent::dwell)
        .collect();
    if dwells.is_empty() {
        return Err(Error::NoEvents(en_id.to_string()));
    }
    let bins = |ds: &[f64]| -> Option<DiscretePdf> {
        if ds.is_empty() {
            None
        } else {
            DiscretePdf::from_samples(ds.iter().map(|&d| dwell_bin(d, bin_width))).ok()
        }
    };
    let (slow, fast): (Vec<f64>, Vec<f64>) = dwells.iter().partition(|&&d| d > fast_slow_boundary);
    let m = moments(&dwells);
    Ok(DwellStats {
        en_id: en_id.to_string(),
        bin_width,
        dwell_pdf: bins(&dwells).expect("non-empty sample"),
        avg_concurrent_users: avg_concurrent_users(events, en_id)?,
        sample_count: dwells.len(),
        mean: m.mean,
        std_dev: m.std_dev,
        skewness: m.skewness,
        kurtosis: m.kurtosis,
        fast_slow_boundary,
        fast_count: fast.len(),
        slow_count: slow.len(),
        fast_pdf: bins(&fast),
        slow_pdf: bins(&slow),
    })
}

/// Time-average number of cars under `en_id`, counting only the time during
/// which at least one car is present.
pub fn avg_concurrent_users(events: &[CoverageEvent], en_id: &str) -> Result<f64> {
    let mut intervals: Vec<(f64, f64)> = events
        .iter()
        .filter(|e| e.en_id == en_id)
        .map(|e| (e.t_enter, e.t_exit))
        .collect();
    if intervals.is_empty() {
        return Err(Error::NoEvents(en_id.to_string()));
    }
    let busy: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    Ok(busy / union_length(&mut intervals))
}

/// Measure of the union of `[start, end]` intervals (sorts in place).
pub(crate) fn union_length(intervals: &mut [(f64, f64)]) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for &(a, b) in intervals.iter() {
        current = match current {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((s, e)) = current {
        total += e - s;
    }
    total
}

/// An EN sequence followed by many cars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificantPath {
    pub en_sequence: Vec<String>,
    pub car_count: usize,
}

/// Distinct EN sequences of exactly `path_len` ENs travelled by at least
/// `min_cars` cars, most travelled first (ties by sequence).
pub fn significant_paths(
    paths: &[CarPath],
    path_len: usize,
    min_cars: usize,
) -> Vec<SignificantPath> {
    let mut counts: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
    for p in paths.iter().filter(|p| p.events.len() == path_len) {
        *counts.entry(p.en_sequence()).or_default() += 1;
    }
    let mut out: Vec<SignificantPath> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_cars && *c > 0)
        .map(|(seq, c)| SignificantPath {
            en_sequence: seq.into_iter().map(String::from).collect(),
            car_count: c,
        })
        .collect();
    out.sort_by(|a, b| {
        b.car_count
            .cmp(&a.car_count)
            .then_with(|| a.en_sequence.cmp(&b.en_sequence))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(car: &str, en: &str, a: f64, b: f64) -> CoverageEvent {
        CoverageEvent::new(car, en, a, b)
    }

    #[test]
    fn point_mass_dwell() {
        let events: Vec<_> = (0..3)
            .map(|i| {
                ev(
                    &format!("c{i}"),
                    "A",
                    100.0 * i as f64,
                    100.0 * i as f64 + 10.0,
                )
            })
            .collect();
        let stats = empirical_dwell_dist(&events, "A", 1.0, 10.0).unwrap();
        assert_eq!(stats.dwell_pdf, DiscretePdf::point_mass(10));
        assert_eq!(stats.skewness, 0.0);
        assert_eq!(stats.kurtosis, 0.0);
        assert_eq!(stats.sample_count, 3);
        // exactly 10 s is not slow
        assert_eq!(stats.slow_count, 0);
        assert!(stats.slow_pdf.is_none());
    }

    #[test]
    fn fast_slow_split() {
        let dwells = [5.0, 5.0, 5.0, 5.0, 50.0];
        let events: Vec<_> = dwells
            .iter()
            .enumerate()
            .map(|(i, d)| {
                ev(
                    &format!("c{i}"),
                    "A",
                    1000.0 * i as f64,
                    1000.0 * i as f64 + d,
                )
            })
            .collect();
        let stats = empirical_dwell_dist(&events, "A", 1.0, 10.0).unwrap();
        assert_eq!(stats.fast_pdf, Some(DiscretePdf::point_mass(5)));
        assert_eq!(stats.slow_pdf, Some(DiscretePdf::point_mass(50)));
        assert_eq!((stats.fast_count, stats.slow_count), (4, 1));
        assert!(stats.skewness > 0.0);
    }

    #[test]
    fn no_events_is_error() {
        assert!(matches!(
            empirical_dwell_dist(&[], "A", 1.0, 10.0),
            Err(Error::NoEvents(_))
        ));
        assert!(avg_concurrent_users(&[ev("c", "B", 0.0, 1.0)], "A").is_err());
    }

    #[test]
    fn concurrent_users_examples() {
        assert_eq!(
            avg_concurrent_users(&[ev("a", "A", 0.0, 10.0)], "A").unwrap(),
            1.0
        );
        let two = [ev("a", "A", 0.0, 10.0), ev("b", "A", 5.0, 15.0)];
        // (5 * 1 + 5 * 2 + 5 * 1) / 15
        assert!((avg_concurrent_users(&two, "A").unwrap() - 20.0 / 15.0).abs() < 1e-12);
        let disjoint = [ev("a", "A", 0.0, 10.0), ev("b", "A", 20.0, 25.0)];
        assert_eq!(avg_concurrent_users(&disjoint, "A").unwrap(), 1.0);
    }

    #[test]
    fn bin_width_scaling() {
        let events = [ev("a", "A", 0.0, 2.5), ev("b", "A", 10.0, 12.0)];
        let stats = empirical_dwell_dist(&events, "A", 0.5, 10.0).unwrap();
        assert_eq!(stats.dwell_pdf.probs()[4], 0.5);
        assert_eq!(stats.dwell_pdf.probs()[5], 0.5);
    }

    #[test]
    fn significant_path_threshold() {
        let mut paths = Vec::new();
        for i in 0..50 {
            paths.push(CarPath {
                car_id: format!("x{i}"),
                events: vec![
                    ev("", "A", 0.0, 1.0),
                    ev("", "B", 2.0, 3.0),
                    ev("", "C", 4.0, 5.0),
                ],
            });
        }
        for i in 0..10 {
            paths.push(CarPath {
                car_id: format!("y{i}"),
                events: vec![
                    ev("", "C", 0.0, 1.0),
                    ev("", "D", 2.0, 3.0),
                    ev("", "E", 4.0, 5.0),
                ],
            });
        }
        let sig = significant_paths(&paths, 3, 45);
        assert_eq!(
            sig,
            vec![SignificantPath {
                en_sequence: vec!["A".into(), "B".into(), "C".into()],
                car_count: 50
            }]
        );
        assert!(significant_paths(&[], 3, 1).is_empty());
    }
}
