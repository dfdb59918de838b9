//! Counters accumulated by the simulator and the derived report.
//!
//! Throughputs and occupancy are time averages over the covered time: the
//! measure of the set of instants at which at least one evaluated car is
//! under coverage (per EN for the per-EN breakdown).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Shape constants of the joint user/operator utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    #[serde(default = "one")]
    pub a_user: f64,
    #[serde(default = "one")]
    pub b_op: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            a_user: 1.0,
            b_op: 1.0,
        }
    }
}

/// `exp(-a (1 - hit)) * exp(-b c_hat)`.
pub fn joint_utility(hit_prob: f64, c_hat: f64, a_user: f64, b_op: f64) -> f64 {
    (-a_user * (1.0 - hit_prob)).exp() * (-b_op * c_hat).exp()
}

/// Raw counts of one EN. Chunk counts are converted to bits at the end so
/// the byte accounting stays exact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnCounters {
    pub en_id: String,
    /// Chunks delivered to evaluated cars from this EN's cache.
    pub hits: u64,
    /// Chunks delivered to evaluated cars through data recovery.
    pub misses: u64,
    /// Chunks fetched from the Data Store to serve misses.
    pub recovery_fetched: u64,
    /// Chunks fetched from the Data Store on prefetch instructions.
    pub prefetch_fetched: u64,
    /// Prefetched chunks dropped on arrival for lack of space.
    pub rejected_inserts: u64,
    pub covered_time: f64,
    /// Integral of the cache occupancy (chunks) over the covered time.
    pub occupancy_integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsCounters {
    pub per_en: Vec<EnCounters>,
    /// Measure of the union of evaluated coverage intervals over all ENs.
    pub covered_time: f64,
    /// Integral over the covered time of the summed occupancy of all ENs.
    pub occupancy_integral: f64,
    pub chunk_size_bits: f64,
    pub cache_capacity_chunks: usize,
    pub catalog_chunks: usize,
    pub plans_computed: u64,
}

impl MetricsCounters {
    pub fn new(
        en_ids: &[String],
        chunk_size_bits: f64,
        cache_capacity_chunks: usize,
        catalog_chunks: usize,
    ) -> Self {
        Self {
            per_en: en_ids
                .iter()
                .map(|id| EnCounters {
                    en_id: id.clone(),
                    ..Default::default()
                })
                .collect(),
            covered_time: 0.0,
            occupancy_integral: 0.0,
            chunk_size_bits,
            cache_capacity_chunks,
            catalog_chunks,
            plans_computed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnReport {
    pub en_id: String,
    pub hits: u64,
    pub misses: u64,
    pub hit_prob: f64,
    pub cache_throughput_bps: f64,
    pub backhaul_bps: f64,
    /// Time-average occupancy of this cache as a fraction of the catalog.
    pub occupancy: f64,
    pub covered_time_s: f64,
    pub rejected_inserts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: String,
    pub cache_chunks: usize,
    pub c_hat: f64,
    pub hit_prob: f64,
    pub cache_throughput_bps: f64,
    pub backhaul_bps: f64,
    /// Absent when nothing was delivered.
    pub overhead: Option<f64>,
    pub occupancy: f64,
    pub utility: f64,
    pub seed: u64,
    pub hits: u64,
    pub misses: u64,
    pub delivered_bits: f64,
    pub cache_bits: f64,
    pub recovery_bits: f64,
    pub prefetch_bits: f64,
    pub covered_time_s: f64,
    pub rejected_inserts: u64,
    pub plans_computed: u64,
    pub per_en: Vec<EnReport>,
}

pub const CSV_HEADER: [&str; 10] = [
    "policy",
    "cache_chunks",
    "c_hat",
    "hit_prob",
    "cache_throughput_bps",
    "backhaul_bps",
    "overhead",
    "occupancy",
    "utility",
    "seed",
];

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn hit_ratio(hits: u64, misses: u64) -> f64 {
    if hits + misses == 0 {
        0.0
    } else {
        hits as f64 / (hits + misses) as f64
    }
}

pub fn finalize(
    counters: &MetricsCounters,
    policy: &str,
    seed: u64,
    utility: UtilityParams,
) -> MetricsReport {
    let s = counters.chunk_size_bits;
    let catalog = counters.catalog_chunks as f64;
    let sum = |f: fn(&EnCounters) -> u64| counters.per_en.iter().map(f).sum::<u64>();
    let hits = sum(|e| e.hits);
    let misses = sum(|e| e.misses);
    let recovery = sum(|e| e.recovery_fetched);
    let prefetch = sum(|e| e.prefetch_fetched);
    let delivered_bits = (hits + misses) as f64 * s;
    let datastore_bits = (recovery + prefetch) as f64 * s;
    let hit_prob = hit_ratio(hits, misses);
    let c_hat = ratio(counters.cache_capacity_chunks as f64, catalog);
    let per_en = counters
        .per_en
        .iter()
        .map(|e| EnReport {
            en_id: e.en_id.clone(),
            hits: e.hits,
            misses: e.misses,
            hit_prob: hit_ratio(e.hits, e.misses),
            cache_throughput_bps: ratio(e.hits as f64 * s, e.covered_time),
            backhaul_bps: ratio(e.recovery_fetched as f64 * s, e.covered_time),
            occupancy: ratio(e.occupancy_integral, e.covered_time * catalog),
            covered_time_s: e.covered_time,
            rejected_inserts: e.rejected_inserts,
        })
        .collect();
    MetricsReport {
        policy: policy.to_string(),
        cache_chunks: counters.cache_capacity_chunks,
        c_hat,
        hit_prob,
        cache_throughput_bps: ratio(hits as f64 * s, counters.covered_time),
        backhaul_bps: ratio(recovery as f64 * s, counters.covered_time),
        overhead: (delivered_bits > 0.0)
            .then(|| (datastore_bits - delivered_bits) / delivered_bits),
        occupancy: ratio(counters.occupancy_integral, counters.covered_time * catalog),
        utility: joint_utility(hit_prob, c_hat, utility.a_user, utility.b_op),
        seed,
        hits,
        misses,
        delivered_bits,
        cache_bits: hits as f64 * s,
        recovery_bits: recovery as f64 * s,
        prefetch_bits: prefetch as f64 * s,
        covered_time_s: counters.covered_time,
        rejected_inserts: sum(|e| e.rejected_inserts),
        plans_computed: counters.plans_computed,
        per_en,
    }
}

impl MetricsReport {
    pub fn csv_record(&self) -> [String; 10] {
        [
            self.policy.clone(),
            self.cache_chunks.to_string(),
            self.c_hat.to_string(),
            self.hit_prob.to_string(),
            self.cache_throughput_bps.to_string(),
            self.backhaul_bps.to_string(),
            self.overhead.map(|o| o.to_string()).unwrap_or_default(),
            self.occupancy.to_string(),
            self.utility.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Writes the header and one row per report, in the given order.
pub fn write_csv<W: Write>(sink: W, reports: &[MetricsReport]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(CSV_HEADER)?;
    for r in reports {
        writer.write_record(r.csv_record())?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counters() -> MetricsCounters {
        MetricsCounters::new(&["A".to_string()], 8.0, 10, 100)
    }

    #[test]
    fn utility_values() {
        assert_eq!(joint_utility(1.0, 0.0, 1.0, 1.0), 1.0);
        assert!((joint_utility(0.0, 1.0, 1.0, 1.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!(joint_utility(0.6, 0.3, 1.0, 1.0) > joint_utility(0.5, 0.3, 1.0, 1.0));
    }

    #[test]
    fn overhead_with_reuse() {
        let mut c = counters();
        c.per_en[0].prefetch_fetched = 1;
        c.per_en[0].hits = 3;
        c.covered_time = 2.0;
        c.per_en[0].covered_time = 2.0;
        let r = finalize(&c, "rich", 1, UtilityParams::default());
        assert!((r.overhead.unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.hit_prob, 1.0);
        assert_eq!(r.cache_throughput_bps * 2.0, 24.0);
    }

    #[test]
    fn recovery_only_has_zero_overhead() {
        let mut c = counters();
        c.per_en[0].recovery_fetched = 5;
        c.per_en[0].misses = 5;
        c.covered_time = 4.0;
        let r = finalize(&c, "pop", 1, UtilityParams::default());
        assert_eq!(r.overhead, Some(0.0));
        assert_eq!(r.hit_prob, 0.0);
        assert_eq!(r.backhaul_bps, 10.0);
    }

    #[test]
    fn nothing_delivered() {
        let r = finalize(&counters(), "pop", 1, UtilityParams::default());
        assert_eq!(r.overhead, None);
        assert_eq!(r.hit_prob, 0.0);
        assert_eq!(r.c_hat, 0.1);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "policy,cache_chunks,c_hat,hit_prob,cache_throughput_bps,backhaul_bps,overhead,occupancy,utility,seed\n\
             pop,10,0.1,0,0,0,,0,0.33287108369807955,1\n"
        );
    }
}
