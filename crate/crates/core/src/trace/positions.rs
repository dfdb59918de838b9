//! Conversion of raw car positions into coverage events using circular
//! coverage discs.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::io::{check_header, parse_time};
use super::CoverageEvent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSample {
    pub t: f64,
    pub car_id: String,
    pub x: f64,
    pub y: f64,
}

/// An EN location with its coverage radius in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnSite {
    pub en_id: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl EnSite {
    fn covers(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.x, y - self.y);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Builds one coverage event per maximal run of consecutive samples of a car
/// inside the same disc. Entry and exit times are the first and last sample
/// times of the run; runs made of a single sample have no duration and are
/// dropped.
pub fn derive_coverage_from_positions(
    positions: &[PositionSample],
    en_layout: &[EnSite],
) -> Result<Vec<CoverageEvent>> {
    if let Some(site) = en_layout.iter().find(|s| !(s.radius > 0.0)) {
        return Err(Error::invalid_arg(format!(
            "edge node {} has non-positive radius",
            site.en_id
        )));
    }

    let mut order: Vec<&str> = Vec::new();
    let mut by_car: BTreeMap<&str, Vec<&PositionSample>> = BTreeMap::new();
    for s in positions {
        let samples = by_car.entry(&s.car_id).or_insert_with(|| {
            order.push(&s.car_id);
            Vec::new()
        });
        if let Some(last) = samples.last() {
            if s.t < last.t {
                return Err(Error::UnsortedSamples {
                    car_id: s.car_id.clone(),
                    t: s.t,
                });
            }
        }
        samples.push(s);
    }

    let mut events = Vec::new();
    for car in order {
        // (en index, first t, last t)
        let mut run: Option<(usize, f64, f64)> = None;
        for s in &by_car[car] {
            let mut inside = en_layout
                .iter()
                .enumerate()
                .filter(|(_, e)| e.covers(s.x, s.y));
            let here = inside.next().map(|(i, _)| i);
            if let Some((j, other)) = inside.next() {
                return Err(Error::OverlappingDiscs {
                    car_id: car.to_string(),
                    t: s.t,
                    first: en_layout[here.unwrap_or(j)].en_id.clone(),
                    second: other.en_id.clone(),
                });
            }
            match (run, here) {
                (Some((en, start, _)), Some(h)) if en == h => run = Some((en, start, s.t)),
                (prev, now) => {
                    if let Some((en, start, end)) = prev {
                        push_run(&mut events, car, &en_layout[en].en_id, start, end);
                    }
                    run = now.map(|h| (h, s.t, s.t));
                }
            }
        }
        if let Some((en, start, end)) = run {
            push_run(&mut events, car, &en_layout[en].en_id, start, end);
        }
    }
    Ok(events)
}

fn push_run(events: &mut Vec<CoverageEvent>, car: &str, en: &str, start: f64, end: f64) {
    if end > start {
        events.push(CoverageEvent::new(car, en, start, end));
    }
}

/// Reads the `t,car_id,x,y` position CSV.
pub fn load_positions<R: Read>(source: R) -> Result<Vec<PositionSample>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(reader.headers()?, &["t", "car_id", "x", "y"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        out.push(PositionSample {
            t: parse_time(&record[0], "t", line)?,
            car_id: record[1].trim().to_string(),
            x: parse_coord(&record[2], line)?,
            y: parse_coord(&record[3], line)?,
        });
    }
    Ok(out)
}

/// Reads the `en_id,x,y,radius` layout CSV.
pub fn load_en_layout<R: Read>(source: R) -> Result<Vec<EnSite>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(reader.headers()?, &["en_id", "x", "y", "radius"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let radius = parse_coord(&record[3], line)?;
        if !(radius > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("radius {radius} must be positive"),
            });
        }
        out.push(EnSite {
            en_id: record[0].trim().to_string(),
            x: parse_coord(&record[1], line)?,
            y: parse_coord(&record[2], line)?,
            radius,
        });
    }
    Ok(out)
}

fn parse_coord(field: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("cannot parse {field:?} as meters"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(id: &str, x: f64, y: f64, r: f64) -> EnSite {
        EnSite {
            en_id: id.into(),
            x,
            y,
            radius: r,
        }
    }

    fn sample(t: f64, car: &str, x: f64, y: f64) -> PositionSample {
        PositionSample {
            t,
            car_id: car.into(),
            x,
            y,
        }
    }

    #[test]
    fn parked_car_yields_one_event() {
        let samples: Vec<_> = (0..=30).map(|t| sample(t as f64, "c", 5.0, 5.0)).collect();
        let events =
            derive_coverage_from_positions(&samples, &[site("A", 0.0, 0.0, 100.0)]).unwrap();
        assert_eq!(events, vec![CoverageEvent::new("c", "A", 0.0, 30.0)]);
    }

    #[test]
    fn straight_crossing_matches_chord() {
        // 10 m/s through the center of a 100 m disc, sampled every second:
        // the chord is 200 m, i.e. 20 s of coverage
        let samples: Vec<_> = (0..=60)
            .map(|t| sample(t as f64, "c", -300.0 + 10.0 * t as f64, 0.0))
            .collect();
        let events =
            derive_coverage_from_positions(&samples, &[site("A", 0.0, 0.0, 100.0)]).unwrap();
        assert_eq!(events.len(), 1);
        let chord = 2.0 * 100.0_f64;
        assert!((events[0].dwell() - chord / 10.0).abs() < 1e-9);
    }

    #[test]
    fn never_covered() {
        let samples: Vec<_> = (0..10)
            .map(|t| sample(t as f64, "c", 500.0, 500.0))
            .collect();
        let events =
            derive_coverage_from_positions(&samples, &[site("A", 0.0, 0.0, 100.0)]).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn consecutive_discs_split_runs() {
        let layout = [site("A", 0.0, 0.0, 10.0), site("B", 30.0, 0.0, 10.0)];
        let samples: Vec<_> = (0..=40)
            .map(|t| sample(t as f64, "c", t as f64 - 5.0, 0.0))
            .collect();
        let events = derive_coverage_from_positions(&samples, &layout).unwrap();
        assert_eq!(
            events,
            vec![
                CoverageEvent::new("c", "A", 0.0, 15.0),
                CoverageEvent::new("c", "B", 25.0, 40.0)
            ]
        );
    }

    #[test]
    fn unsorted_and_overlap_errors() {
        let layout = [site("A", 0.0, 0.0, 10.0)];
        let samples = vec![sample(2.0, "c", 0.0, 0.0), sample(1.0, "c", 0.0, 0.0)];
        assert!(matches!(
            derive_coverage_from_positions(&samples, &layout),
            Err(Error::UnsortedSamples { .. })
        ));
        let layout = [site("A", 0.0, 0.0, 10.0), site("B", 5.0, 0.0, 10.0)];
        let samples = vec![sample(0.0, "c", 2.0, 0.0)];
        assert!(matches!(
            derive_coverage_from_positions(&samples, &layout),
            Err(Error::OverlappingDiscs { .. })
        ));
    }

    #[test]
    fn csv_readers() {
        let pos = load_positions("t,car_id,x,y\n0,c,1.5,2\n1,c,2,2\n".as_bytes()).unwrap();
        assert_eq!(pos.len(), 2);
        let layout = load_en_layout("en_id,x,y,radius\nA,0,0,100\n".as_bytes()).unwrap();
        assert_eq!(layout[0].radius, 100.0);
        assert!(load_en_layout("en_id,x,y,radius\nA,0,0,0\n".as_bytes()).is_err());
    }
}
