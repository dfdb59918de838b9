use roadcache_core::simcore::{run, PolicyConfig, Simulation, SimulationConfig};
use roadcache_core::trace::{CarPath, CoverageEvent};
use roadcache_core::Error;

/// 10 chunks per second for a lone car.
fn toy_config(policy: PolicyConfig) -> SimulationConfig {
    let mut c = SimulationConfig::default();
    c.radio.bandwidth_bps = 5.2e6;
    c.catalog.n_contents = 1;
    c.catalog.chunks_per_content = 100;
    c.catalog.chunk_size_bits = 5.2e5;
    c.cache_chunks = 100;
    c.policy = policy;
    c
}

fn car(id: &str, visits: &[(&str, f64, f64)]) -> CarPath {
    CarPath {
        car_id: id.to_string(),
        events: visits
            .iter()
            .map(|(en, a, b)| CoverageEvent::new(id, *en, *a, *b))
            .collect(),
    }
}

/// `fast` cars dwelling 1.05 s and `slow` cars dwelling 10.05 s, one at a time.
fn fast_slow_trace(fast: usize, slow: usize) -> Vec<CarPath> {
    (0..fast + slow)
        .map(|i| {
            let t = 20.0 * i as f64;
            let dwell = if i % 5 == 4 && i / 5 < slow {
                10.05
            } else {
                1.05
            };
            car(&format!("c{i:04}"), &[("A", t, t + dwell)])
        })
        .collect()
}

#[test]
fn fully_provisioned_single_car() {
    let report = run(
        &toy_config(PolicyConfig::NetPredict),
        &[car("a", &[("A", 0.0, 10.05)])],
    )
    .unwrap();
    assert_eq!(report.hit_prob, 1.0);
    assert_eq!(report.hits, 100);
    assert_eq!(report.recovery_bits, 0.0);
    assert_eq!(report.prefetch_bits, 100.0 * 5.2e5);
    assert_eq!(report.overhead, Some(0.0));
}

#[test]
fn no_cache_means_all_recovery() {
    let mut config = toy_config(PolicyConfig::NetPredict);
    config.cache_chunks = 0;
    let report = run(&config, &[car("a", &[("A", 0.0, 10.05)])]).unwrap();
    assert_eq!(report.hit_prob, 0.0);
    assert_eq!(report.misses, 100);
    assert_eq!(report.prefetch_bits, 0.0);
    assert_eq!(report.recovery_bits, report.delivered_bits);
    assert_eq!(report.overhead, Some(0.0));
    assert!((report.backhaul_bps - report.delivered_bits / report.covered_time_s).abs() < 1e-6);
}

#[test]
fn mean_based_plan_on_fast_slow_mix() {
    let trace = fast_slow_trace(800, 200);
    let report = run(&toy_config(PolicyConfig::NetPredict), &trace).unwrap();
    // fast cars: 10 of 10 chunks from the cache; slow cars: 28 of 100
    let expected = (800.0 * 10.0 + 200.0 * 28.0) / (800.0 * 10.0 + 200.0 * 100.0);
    assert!(
        (report.hit_prob - expected).abs() < 1e-9,
        "{}",
        report.hit_prob
    );

    let rich = run(&toy_config(PolicyConfig::rich(vec![0.1]).unwrap()), &trace).unwrap();
    assert_eq!(rich.hit_prob, 1.0);
}

#[test]
fn conservation_and_in_order_delivery() {
    let mut trace = Vec::new();
    for i in 0..30 {
        let t = 3.0 * i as f64;
        trace.push(car(
            &format!("c{i}"),
            &[
                ("A", t, t + 4.0 + (i % 4) as f64),
                ("B", t + 12.0, t + 15.0 + (i % 3) as f64),
            ],
        ));
    }
    let mut config = toy_config(PolicyConfig::rich(vec![0.6]).unwrap());
    config.catalog.n_contents = 3;
    config.cache_chunks = 40;
    let outcome = Simulation::new(&config, &trace)
        .unwrap()
        .run_detailed(None)
        .unwrap();
    let mut total = 0;
    for c in &outcome.cars {
        assert_eq!(c.hits + c.misses, c.chunks_delivered as u64, "{}", c.car_id);
        total += c.hits + c.misses;
    }
    let r = &outcome.report;
    assert_eq!(r.hits + r.misses, total);
    assert_eq!(r.delivered_bits, total as f64 * 5.2e5);
    assert_eq!(r.cache_bits + r.misses as f64 * 5.2e5, r.delivered_bits);
    assert!((r.cache_throughput_bps * r.covered_time_s - r.cache_bits).abs() < 1e-3);
    assert!(r.overhead.unwrap() >= -1.0);
    assert!((0.0..=2.0).contains(&r.occupancy));
}

#[test]
fn deterministic_runs() {
    let trace: Vec<_> = (0..20)
        .map(|i| {
            let t = 2.0 * i as f64;
            car(
                &format!("c{i}"),
                &[
                    ("A", t, t + 3.0),
                    ("B", t + 5.0, t + 9.0),
                    ("C", t + 10.0, t + 12.0),
                ],
            )
        })
        .collect();
    let mut config = toy_config(PolicyConfig::rich(vec![0.5, 0.7]).unwrap());
    config.catalog.n_contents = 4;
    config.seed = 11;
    let a = run(&config, &trace).unwrap();
    let b = run(&config, &trace).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn two_plans_for_four_ens_at_horizon_two() {
    let trace: Vec<_> = (0..5)
        .map(|i| {
            let t = 100.0 * i as f64;
            car(
                &format!("c{i}"),
                &[
                    ("A", t, t + 2.0),
                    ("B", t + 3.0, t + 5.0),
                    ("C", t + 6.0, t + 8.0),
                    ("D", t + 9.0, t + 11.0),
                ],
            )
        })
        .collect();
    let mut config = toy_config(PolicyConfig::rich(vec![0.5]).unwrap());
    config.plan_horizon = 2;
    let report = run(&config, &trace).unwrap();
    assert_eq!(report.plans_computed, 10);
}

#[test]
fn whole_catalog_cached() {
    let trace: Vec<_> = (0..10)
        .map(|i| {
            car(
                &format!("c{i}"),
                &[("A", 5.0 * i as f64, 5.0 * i as f64 + 4.0)],
            )
        })
        .collect();
    let mut config = toy_config(PolicyConfig::Pop);
    config.catalog.n_contents = 3;
    config.cache_chunks = 300;
    let report = run(&config, &trace).unwrap();
    assert_eq!(report.hit_prob, 1.0);
    assert_eq!(report.recovery_bits, 0.0);
}

#[test]
fn unknown_edge_node() {
    let mut config = toy_config(PolicyConfig::Pop);
    config.edge_nodes = vec!["A".into()];
    let err = run(&config, &[car("a", &[("B", 0.0, 1.0)])]).unwrap_err();
    assert!(matches!(err, Error::UnknownEn { .. }));
}
