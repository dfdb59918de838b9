//! Error injection: dwell-time noise and skipped ENs.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::trace::CarPath;

/// `max(w_min, w + eps)` with `eps ~ N(mu, sigma)`; `sigma = 0` shifts by
/// exactly `mu`.
pub fn perturb_dwell<R: Rng + ?Sized>(w: f64, mu: f64, sigma: f64, w_min: f64, rng: &mut R) -> f64 {
    let eps = if sigma > 0.0 {
        Normal::new(mu, sigma)
            .expect("finite deviation")
            .sample(rng)
    } else {
        mu
    };
    (w + eps).max(w_min)
}

/// Smallest observed dwell of every EN.
pub fn min_dwell_per_en(paths: &[CarPath]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for e in paths.iter().flat_map(|p| &p.events) {
        let m = out.entry(e.en_id.clone()).or_insert(f64::INFINITY);
        *m = m.min(e.dwell());
    }
    out
}

/// Perturbs every dwell time; later visits of the same car move by the
/// accumulated change so the path stays free of overlaps.
pub fn perturb_trace<R: Rng + ?Sized>(
    paths: &[CarPath],
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<CarPath> {
    let w_min = min_dwell_per_en(paths);
    paths
        .iter()
        .map(|p| {
            let mut shift = 0.0;
            let events = p
                .events
                .iter()
                .map(|e| {
                    let w = e.dwell();
                    let w_new = perturb_dwell(w, mu, sigma, w_min[&e.en_id], rng);
                    let mut out = e.clone();
                    out.t_enter += shift;
                    out.t_exit = out.t_enter + w_new;
                    shift += w_new - w;
                    out
                })
                .collect();
            CarPath {
                car_id: p.car_id.clone(),
                events,
            }
        })
        .collect()
}

/// Removes the second visit of exactly `round(fraction * eligible)` cars,
/// chosen uniformly without replacement among the cars with at least two
/// visits.
pub fn apply_path_skip<R: Rng + ?Sized>(
    paths: &[CarPath],
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<CarPath>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid_arg(format!(
            "skip fraction {fraction} outside [0, 1]"
        )));
    }
    let eligible: Vec<usize> = (0..paths.len())
        .filter(|&i| paths[i].events.len() >= 2)
        .collect();
    let count = (fraction * eligible.len() as f64).round() as usize;
    let mut out = paths.to_vec();
    for j in rand::seq::index::sample(rng, eligible.len(), count) {
        out[eligible[j]].events.remove(1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::CoverageEvent;
    use rand_chacha::ChaCha8Rng;

    fn path(id: &str, n: usize) -> CarPath {
        CarPath {
            car_id: id.into(),
            events: (0..n)
                .map(|i| {
                    CoverageEvent::new(id, format!("E{i}"), 20.0 * i as f64, 20.0 * i as f64 + 10.0)
                })
                .collect(),
        }
    }

    #[test]
    fn dwell_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(perturb_dwell(10.0, 0.0, 0.0, 1.0, &mut rng), 10.0);
        assert_eq!(perturb_dwell(10.0, -1000.0, 3.0, 1.0, &mut rng), 1.0);
        assert_eq!(perturb_dwell(10.0, 5.0, 0.0, 1.0, &mut rng), 15.0);
    }

    #[test]
    fn shifts_later_visits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = perturb_trace(&[path("a", 3)], 5.0, 0.0, &mut rng);
        let e = &out[0].events;
        assert_eq!((e[0].t_enter, e[0].t_exit), (0.0, 15.0));
        assert_eq!((e[1].t_enter, e[1].t_exit), (25.0, 40.0));
        assert_eq!((e[2].t_enter, e[2].t_exit), (50.0, 65.0));
        crate::trace::validate_paths(&out).unwrap();
    }

    #[test]
    fn skip_counts() {
        let paths: Vec<_> = (0..1000).map(|i| path(&format!("c{i}"), 3)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(apply_path_skip(&paths, 0.0, &mut rng).unwrap(), paths);
        let all = apply_path_skip(&paths, 1.0, &mut rng).unwrap();
        assert!(all.iter().all(|p| p.en_sequence() == vec!["E0", "E2"]));
        let half = apply_path_skip(&paths, 0.5, &mut rng).unwrap();
        assert_eq!(half.iter().filter(|p| p.events.len() == 2).count(), 500);
        assert!(apply_path_skip(&paths, 1.1, &mut rng).is_err());
    }
}
