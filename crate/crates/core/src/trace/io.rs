use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::CoverageEvent;
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["car_id", "en_id", "t_enter", "t_exit"];

pub(crate) fn parse_time(field: &str, name: &str, line: u64) -> Result<f64> {
    let t: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("{name}: cannot parse {field:?} as seconds"),
    })?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("{name}: {t} is not a non-negative time"),
        });
    }
    Ok(t)
}

pub(crate) fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

/// Reads the `car_id,en_id,t_enter,t_exit` CSV format.
///
/// The result is grouped per car (cars ordered by first entry time, then
/// id) and time-sorted within each car.
pub fn load_coverage_events<R: Read>(source: R) -> Result<Vec<CoverageEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    check_header(reader.headers()?, &HEADER)?;

    let mut by_car: BTreeMap<String, Vec<(u64, CoverageEvent)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let car_id = record[0].trim().to_string();
        let en_id = record[1].trim().to_string();
        if car_id.is_empty() || en_id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty identifier".into(),
            });
        }
        let t_enter = parse_time(&record[2], "t_enter", line)?;
        let t_exit = parse_time(&record[3], "t_exit", line)?;
        if t_exit <= t_enter {
            return Err(Error::Parse {
                line,
                message: format!("t_exit {t_exit} is not after t_enter {t_enter}"),
            });
        }
        by_car
            .entry(car_id.clone())
            .or_default()
            .push((line, CoverageEvent::new(car_id, en_id, t_enter, t_exit)));
    }

    let mut cars: Vec<Vec<(u64, CoverageEvent)>> = by_car.into_values().collect();
    for evs in &mut cars {
        evs.sort_by(|a, b| a.1.t_enter.total_cmp(&b.1.t_enter).then(a.0.cmp(&b.0)));
        for w in evs.windows(2) {
            if w[1].1.t_enter < w[0].1.t_exit {
                return Err(Error::OverlappingCoverage {
                    line: w[1].0.max(w[0].0),
                    car_id: w[0].1.car_id.clone(),
                    first: w[0].1.en_id.clone(),
                    second: w[1].1.en_id.clone(),
                });
            }
        }
    }
    cars.sort_by(|a, b| {
        a[0].1
            .t_enter
            .total_cmp(&b[0].1.t_enter)
            .then_with(|| a[0].1.car_id.cmp(&b[0].1.car_id))
    });
    Ok(cars
        .into_iter()
        .flat_map(|evs| evs.into_iter().map(|(_, e)| e))
        .collect())
}

pub fn write_coverage_events<W: Write>(sink: W, events: &[CoverageEvent]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(HEADER)?;
    for e in events {
        writer.write_record([
            e.car_id.as_str(),
            e.en_id.as_str(),
            &e.t_enter.to_string(),
            &e.t_exit.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
