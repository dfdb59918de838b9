use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadcache_core::trace::{significant_paths, CarPath, CoverageEvent};

const REFERENCE_PATHS: [(&str, usize); 7] = [
    ("ABC", 54),
    ("ABF", 555),
    ("CDE", 337),
    ("FBA", 810),
    ("FBC", 91),
    ("HDC", 45),
    ("HGA", 161),
];

fn car_on(id: usize, route: &str) -> CarPath {
    let car_id = format!("car{id:05}");
    let t = id as f64;
    CarPath {
        events: route
            .chars()
            .enumerate()
            .map(|(j, en)| {
                let start = t + 30.0 * j as f64;
                CoverageEvent::new(&car_id, en.to_string(), start, start + 10.0)
            })
            .collect(),
        car_id,
    }
}

/// The seven routes plus rarer or shorter ones that must be filtered out.
fn embedded_trace() -> Vec<CarPath> {
    let mut routes: Vec<&str> = Vec::new();
    for (route, cars) in REFERENCE_PATHS {
        routes.extend(std::iter::repeat_n(route, cars));
    }
    routes.extend(std::iter::repeat_n("ABD", 44));
    routes.extend(std::iter::repeat_n("GH", 300));
    routes.extend(std::iter::repeat_n("ABFB", 60));
    routes
        .iter()
        .enumerate()
        .map(|(i, r)| car_on(i, r))
        .collect()
}

fn as_counts(paths: &[CarPath]) -> Vec<(String, usize)> {
    significant_paths(paths, 3, 45)
        .into_iter()
        .map(|p| (p.en_sequence.concat(), p.car_count))
        .collect()
}

#[test]
fn seven_significant_paths() {
    let found = as_counts(&embedded_trace());
    let mut expected: Vec<(String, usize)> = REFERENCE_PATHS
        .iter()
        .map(|(r, c)| (r.to_string(), *c))
        .collect();
    expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    assert_eq!(found, expected);
    assert_eq!(found.iter().map(|(_, c)| c).sum::<usize>(), 2053);
}

proptest! {
    #[test]
    fn order_of_cars_is_irrelevant(seed in any::<u64>()) {
        let mut trace = embedded_trace();
        let reference = as_counts(&trace);
        trace.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(as_counts(&trace), reference);
    }
}
