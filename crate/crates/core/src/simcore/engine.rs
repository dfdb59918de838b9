//! Discrete-event loop.
//!
//! Radio: every EN splits its bandwidth equally among the cars currently
//! receiving a chunk from it (fluid processor sharing). A per-EN version
//! number invalidates completion events scheduled before the last change of
//! the sharing set.
//!
//! Backhaul: each EN has a FIFO link to the Data Store; a chunk requested at
//! `t` lands at `max(t + d, busy) + s / R + d`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{PolicyConfig, SimulationConfig};
use super::perturb::{apply_path_skip, perturb_trace};
use super::prefetcher::Prefetcher;
use super::workload::ZipfWorkload;
use crate::cache::{CachedChunk, CarId, ChunkKey, EdgeCache, InsertOutcome};
use crate::error::{Error, Result};
use crate::metrics::{finalize, MetricsCounters, MetricsReport};
use crate::policy::{pop_plan, refresh_decision};
use crate::trace::{flatten_paths, significant_paths, validate_paths, CarPath};

/// A chunk whose remaining bits fall below this fraction of its size when
/// the car leaves is counted as delivered.
const DELIVERY_SLACK: f64 = 1e-9;

const WORKLOAD_STREAM: u64 = 1;
const DWELL_STREAM: u64 = 2;
const SKIP_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy)]
enum Kind {
    ChunkDelivered { version: u64 },
    CarExit { visit: usize },
    PrefetchFetchComplete { chunk: ChunkKey },
    RecoveryFetchComplete { visit: usize, chunk: u32 },
    PlanComputed,
    CarEnter { visit: usize },
}

impl Kind {
    fn rank(&self) -> u8 {
        match self {
            Kind::ChunkDelivered { .. } => 0,
            Kind::CarExit { .. } => 1,
            Kind::PrefetchFetchComplete { .. } => 2,
            Kind::RecoveryFetchComplete { .. } => 3,
            Kind::PlanComputed => 4,
            Kind::CarEnter { .. } => 5,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Kind::ChunkDelivered { .. } => "chunk_delivered",
            Kind::CarExit { .. } => "car_exit",
            Kind::PrefetchFetchComplete { .. } => "prefetch_fetch_complete",
            Kind::RecoveryFetchComplete { .. } => "recovery_fetch_complete",
            Kind::PlanComputed => "plan_computed",
            Kind::CarEnter { .. } => "car_enter",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    car: u32,
    en: u32,
    seq: u64,
    kind: Kind,
}

impl Event {
    fn key(&self) -> (u8, u32, u32, u64) {
        (self.kind.rank(), self.car, self.en, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.key().cmp(&other.key()))
    }
}

struct InFlight {
    prob: f64,
    pending: BTreeSet<CarId>,
    waiters: Vec<usize>,
}

struct EnState {
    cache: EdgeCache,
    /// Cars currently receiving a chunk over the air.
    active: Vec<usize>,
    last_radio_update: f64,
    version: u64,
    link_busy_until: f64,
    inflight: HashMap<ChunkKey, InFlight>,
    /// Evaluated cars currently under coverage.
    eval_present: usize,
    recovery_margin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Idle,
    AwaitingPlan,
    Streaming {
        remaining_bits: f64,
        from_cache: bool,
    },
    Waiting(u32),
    Done,
}

struct Visit {
    en: usize,
    /// Index of this visit in the path the Prefetcher believes in.
    position: usize,
}

struct CarState {
    id: String,
    believed: Vec<usize>,
    visits: Vec<Visit>,
    content: u32,
    next_chunk: u32,
    status: Status,
    at: Option<usize>,
    plan_start: Option<usize>,
    pending_plan: Option<(usize, usize)>,
    /// Recovered chunks relayed by the current EN, not yet consumed.
    relay: BTreeSet<u32>,
    recovering: BTreeSet<u32>,
    recovery_mode: bool,
    hits: u64,
    misses: u64,
}

/// Per-car outcome of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarSummary {
    pub car_id: String,
    pub content_id: u32,
    /// Chunks received over the whole trace, evaluated or not.
    pub chunks_delivered: u32,
    /// Evaluated deliveries served by a cache.
    pub hits: u64,
    /// Evaluated deliveries served by data recovery.
    pub misses: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub report: MetricsReport,
    pub cars: Vec<CarSummary>,
}

pub struct Simulation {
    config: SimulationConfig,
    en_ids: Vec<String>,
    ens: Vec<EnState>,
    cars: Vec<CarState>,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    clock: f64,
    prefetcher: Prefetcher,
    workload: ZipfWorkload,
    workload_rng: ChaCha8Rng,
    counters: MetricsCounters,
    global_present: usize,
    total_occupancy: usize,
    dirty: Vec<usize>,
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Positions in `believed` of the visits of `actual`, which must be a
/// subsequence of it.
fn match_positions(believed: &[usize], actual: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(actual.len());
    let mut next = 0;
    for &en in actual {
        let pos = (next..believed.len())
            .find(|&p| believed[p] == en)
            .expect("actual path is a subsequence of the believed one");
        out.push(pos);
        next = pos + 1;
    }
    out
}

impl Simulation {
    pub fn new(config: &SimulationConfig, trace: &[CarPath]) -> Result<Self> {
        config.validate()?;
        validate_paths(trace)?;
        let history: Vec<CarPath> = match config.significant_paths {
            Some(f) => {
                let keep: BTreeSet<Vec<String>> = significant_paths(trace, f.path_len, f.min_cars)
                    .into_iter()
                    .map(|s| s.en_sequence)
                    .collect();
                trace
                    .iter()
                    .filter(|p| {
                        let seq: Vec<String> =
                            p.en_sequence().into_iter().map(String::from).collect();
                        keep.contains(&seq)
                    })
                    .cloned()
                    .collect()
            }
            None => trace.to_vec(),
        };

        let en_ids: Vec<String> = if config.edge_nodes.is_empty() {
            let set: BTreeSet<&str> = history.iter().flat_map(|p| p.en_sequence()).collect();
            set.into_iter().map(String::from).collect()
        } else {
            let mut ids = config.edge_nodes.clone();
            ids.sort();
            ids.dedup();
            ids
        };
        let lookup = en_ids.clone();
        let en_index = |car: &str, en: &str| -> Result<usize> {
            lookup
                .binary_search_by(|x| x.as_str().cmp(en))
                .map_err(|_| Error::UnknownEn {
                    car_id: car.to_string(),
                    en_id: en.to_string(),
                })
        };

        let mut actual = history.clone();
        if let Some(skip) = config.errors.path_skip {
            actual = apply_path_skip(
                &actual,
                skip.fraction,
                &mut rng_stream(config.seed, SKIP_STREAM),
            )?;
        }
        if let Some(d) = config.errors.dwell {
            actual = perturb_trace(
                &actual,
                d.mu,
                d.sigma,
                &mut rng_stream(config.seed, DWELL_STREAM),
            );
        }

        let prefetcher = Prefetcher::new(config, &flatten_paths(&history), &en_ids)?;
        let s = config.catalog.chunk_size_bits;
        let rtt = 2.0 * config.backhaul.datastore_delay_s;
        let ens = (0..en_ids.len())
            .map(|i| EnState {
                cache: EdgeCache::new(en_ids[i].clone(), config.cache_chunks),
                active: Vec::new(),
                last_radio_update: 0.0,
                version: 0,
                link_busy_until: f64::NEG_INFINITY,
                inflight: HashMap::new(),
                eval_present: 0,
                recovery_margin: config.recovery_margin.unwrap_or_else(|| {
                    let per_car_rate = config.radio.bandwidth_bps / prefetcher.avg_users(i);
                    (rtt * per_car_rate / s).ceil() as usize + 1
                }),
            })
            .collect();

        let mut sim = Self {
            config: config.clone(),
            counters: MetricsCounters::new(
                &en_ids,
                s,
                config.cache_chunks,
                config.catalog.total_chunks(),
            ),
            en_ids,
            ens,
            cars: Vec::with_capacity(history.len()),
            queue: BinaryHeap::new(),
            seq: 0,
            clock: f64::NEG_INFINITY,
            prefetcher,
            workload: ZipfWorkload::new(config.workload.alpha, config.catalog.n_contents)?,
            workload_rng: rng_stream(config.seed, WORKLOAD_STREAM),
            global_present: 0,
            total_occupancy: 0,
            dirty: Vec::new(),
        };

        for (c, (orig, act)) in history.iter().zip(&actual).enumerate() {
            let believed = orig
                .events
                .iter()
                .map(|e| en_index(&orig.car_id, &e.en_id))
                .collect::<Result<Vec<_>>>()?;
            let actual_ens = act
                .events
                .iter()
                .map(|e| en_index(&act.car_id, &e.en_id))
                .collect::<Result<Vec<_>>>()?;
            let positions = match_positions(&believed, &actual_ens);
            for (v, e) in act.events.iter().enumerate() {
                sim.push(
                    e.t_enter,
                    c as u32,
                    actual_ens[v],
                    Kind::CarEnter { visit: v },
                );
                sim.push(
                    e.t_exit,
                    c as u32,
                    actual_ens[v],
                    Kind::CarExit { visit: v },
                );
            }
            sim.cars.push(CarState {
                id: orig.car_id.clone(),
                visits: actual_ens
                    .iter()
                    .zip(positions)
                    .map(|(&en, position)| Visit { en, position })
                    .collect(),
                believed,
                content: 0,
                next_chunk: 1,
                status: Status::Idle,
                at: None,
                plan_start: None,
                pending_plan: None,
                relay: BTreeSet::new(),
                recovering: BTreeSet::new(),
                recovery_mode: false,
                hits: 0,
                misses: 0,
            });
        }

        if matches!(config.policy, PolicyConfig::Pop) {
            sim.warm_popular();
        }
        Ok(sim)
    }

    /// Fills every cache with the most popular chunks before the first car
    /// arrives; the transfer counts as prefetch traffic.
    fn warm_popular(&mut self) {
        let ranks: Vec<u32> = (1..=self.config.catalog.n_contents as u32).collect();
        let keys = pop_plan(
            &ranks,
            self.config.catalog.chunks_per_content,
            self.config.cache_chunks,
        );
        for (e, en) in self.ens.iter_mut().enumerate() {
            for key in &keys {
                en.cache.insert(CachedChunk::prefetched(*key, 1.0, []));
            }
            self.counters.per_en[e].prefetch_fetched += keys.len() as u64;
            self.total_occupancy += en.cache.len();
        }
    }

    fn push(&mut self, time: f64, car: u32, en: usize, kind: Kind) {
        self.seq += 1;
        self.queue.push(Reverse(Event {
            time,
            car,
            en: en as u32,
            seq: self.seq,
            kind,
        }));
    }

    pub fn run(self) -> Result<MetricsReport> {
        Ok(self.run_detailed(None)?.report)
    }

    /// Runs to the end of the trace, optionally writing one line per event.
    pub fn run_detailed(mut self, mut log: Option<&mut dyn Write>) -> Result<SimulationOutcome> {
        while let Some(Reverse(ev)) = self.queue.pop() {
            self.advance(ev.time);
            if let Some(w) = log.as_deref_mut() {
                let car = self
                    .cars
                    .get(ev.car as usize)
                    .map_or("-", |c| c.id.as_str());
                writeln!(
                    w,
                    "{:.6} {} car={} en={}",
                    ev.time,
                    ev.kind.name(),
                    car,
                    self.en_ids[ev.en as usize]
                )?;
            }
            let car = ev.car as usize;
            let en = ev.en as usize;
            match ev.kind {
                Kind::ChunkDelivered { version } => {
                    if version == self.ens[en].version {
                        self.on_chunk_delivered(car, en);
                    }
                }
                Kind::CarExit { visit } => self.on_exit(car, visit),
                Kind::PrefetchFetchComplete { chunk } => self.on_prefetch_landed(en, chunk),
                Kind::RecoveryFetchComplete { visit, chunk } => {
                    self.on_recovery_landed(car, visit, chunk)
                }
                Kind::PlanComputed => self.on_plan(car)?,
                Kind::CarEnter { visit } => self.on_enter(car, visit),
            }
            self.reschedule_dirty();
        }
        self.counters.plans_computed = self.prefetcher.plans_computed;
        let report = finalize(
            &self.counters,
            self.config.policy.name(),
            self.config.seed,
            self.config.utility,
        );
        let cars = self
            .cars
            .iter()
            .map(|c| CarSummary {
                car_id: c.id.clone(),
                content_id: c.content,
                chunks_delivered: c.next_chunk - 1,
                hits: c.hits,
                misses: c.misses,
            })
            .collect();
        Ok(SimulationOutcome { report, cars })
    }

    fn advance(&mut self, t: f64) {
        if t > self.clock && self.clock.is_finite() {
            let dt = t - self.clock;
            if self.global_present > 0 {
                self.counters.covered_time += dt;
                self.counters.occupancy_integral += self.total_occupancy as f64 * dt;
            }
            for (e, en) in self.ens.iter().enumerate() {
                if en.eval_present > 0 {
                    let c = &mut self.counters.per_en[e];
                    c.covered_time += dt;
                    c.occupancy_integral += en.cache.len() as f64 * dt;
                }
            }
        }
        self.clock = self.clock.max(t);
    }

    fn chunk_key(&self, car: usize, chunk: u32) -> ChunkKey {
        ChunkKey::new(self.cars[car].content, chunk)
    }

    fn evaluated(&self, visit: usize) -> bool {
        visit < self.config.eval_positions
    }

    /// Brings the remaining bits of every streaming car at `en` up to date.
    fn radio_sync(&mut self, en: usize) {
        let state = &mut self.ens[en];
        let n = state.active.len();
        if n > 0 {
            let served =
                self.config.radio.bandwidth_bps / n as f64 * (self.clock - state.last_radio_update);
            for &c in &state.active {
                if let Status::Streaming { remaining_bits, .. } = &mut self.cars[c].status {
                    *remaining_bits -= served;
                }
            }
        }
        state.last_radio_update = self.clock;
        if !self.dirty.contains(&en) {
            self.dirty.push(en);
        }
    }

    fn reschedule_dirty(&mut self) {
        let dirty = std::mem::take(&mut self.dirty);
        for en in dirty {
            self.ens[en].version += 1;
            let version = self.ens[en].version;
            let n = self.ens[en].active.len();
            if n == 0 {
                continue;
            }
            let rate = self.config.radio.bandwidth_bps / n as f64;
            let active = self.ens[en].active.clone();
            for c in active {
                if let Status::Streaming { remaining_bits, .. } = self.cars[c].status {
                    let t = self.clock + remaining_bits.max(0.0) / rate;
                    self.push(t, c as u32, en, Kind::ChunkDelivered { version });
                }
            }
        }
    }

    fn link_landing(&mut self, en: usize) -> f64 {
        let d = self.config.backhaul.datastore_delay_s;
        let tx = self.config.catalog.chunk_size_bits / self.config.backhaul.datastore_rate_bps;
        let state = &mut self.ens[en];
        let start = (self.clock + d).max(state.link_busy_until);
        state.link_busy_until = start + tx;
        state.link_busy_until + d
    }

    fn trigger_plan(&mut self, car: usize, start: usize, delivered: usize) {
        self.cars[car].pending_plan = Some((start, delivered));
        let t = self.clock + 2.0 * self.config.backhaul.prefetcher_delay_s;
        let en = self.cars[car].believed[start];
        self.push(t, car as u32, en, Kind::PlanComputed);
    }

    fn on_enter(&mut self, car: usize, visit: usize) {
        let en = self.cars[car].visits[visit].en;
        let position = self.cars[car].visits[visit].position;
        self.cars[car].at = Some(visit);
        self.cars[car].status = Status::Idle;
        if self.evaluated(visit) {
            self.ens[en].eval_present += 1;
            self.global_present += 1;
        }
        if self.cars[car].content == 0 {
            self.cars[car].content = self.workload.draw(&mut self.workload_rng);
            if self.config.policy.plans_per_car() {
                self.trigger_plan(car, position, 0);
            }
        }
        self.request_next(car);
    }

    fn on_exit(&mut self, car: usize, visit: usize) {
        let en = self.cars[car].visits[visit].en;
        if let Some(i) = self.ens[en].active.iter().position(|&c| c == car) {
            self.radio_sync(en);
            if let Status::Streaming { remaining_bits, .. } = self.cars[car].status {
                if remaining_bits <= DELIVERY_SLACK * self.config.catalog.chunk_size_bits {
                    self.complete_chunk(car);
                }
            }
            self.ens[en].active.swap_remove(i);
        }
        if self.evaluated(visit) {
            self.ens[en].eval_present -= 1;
            self.global_present -= 1;
        }
        let state = &mut self.cars[car];
        state.at = None;
        state.relay.clear();
        state.recovering.clear();
        state.recovery_mode = false;
        state.status = Status::Idle;
        let id = CarId(car as u32);
        self.ens[en].cache.release_car(id);

        if visit + 1 == self.cars[car].visits.len() {
            let mut believed = self.cars[car].believed.clone();
            believed.sort_unstable();
            believed.dedup();
            for e in believed {
                self.ens[e].cache.release_car(id);
            }
            self.cars[car].status = Status::Done;
            return;
        }
        let state = &self.cars[car];
        let next = state.visits[visit].position + 1;
        if self.config.policy.plans_per_car()
            && state.pending_plan.is_none()
            && next < state.believed.len()
            && (state.next_chunk as usize) <= self.config.catalog.chunks_per_content
            && state
                .plan_start
                .is_some_and(|s| refresh_decision(next, s, self.config.plan_horizon))
        {
            let delivered = state.next_chunk as usize - 1;
            self.trigger_plan(car, next, delivered);
        }
    }

    fn on_plan(&mut self, car: usize) -> Result<()> {
        let Some((start, delivered)) = self.cars[car].pending_plan.take() else {
            return Ok(());
        };
        self.cars[car].plan_start = Some(start);
        let believed = self.cars[car].believed.clone();
        let instructions =
            self.prefetcher
                .plan(&believed, start, self.config.plan_horizon, delivered)?;
        for ins in instructions {
            let key = self.chunk_key(car, ins.chunk);
            let counted = self.evaluated(ins.position);
            self.instruct(believed[ins.position], key, ins.prob, car, counted);
        }
        if self.cars[car].status == Status::AwaitingPlan && self.cars[car].at.is_some() {
            self.request_next(car);
        }
        Ok(())
    }

    fn instruct(&mut self, en: usize, key: ChunkKey, prob: f64, car: usize, counted: bool) {
        let id = CarId(car as u32);
        if self.ens[en].cache.contains(&key) {
            self.ens[en]
                .cache
                .insert(CachedChunk::prefetched(key, prob, [id]));
            return;
        }
        if let Some(f) = self.ens[en].inflight.get_mut(&key) {
            f.pending.insert(id);
            f.prob = f.prob.max(prob);
            return;
        }
        let t = self.link_landing(en);
        self.ens[en].inflight.insert(
            key,
            InFlight {
                prob,
                pending: BTreeSet::from([id]),
                waiters: Vec::new(),
            },
        );
        self.push(
            t,
            car as u32,
            en,
            Kind::PrefetchFetchComplete { chunk: key },
        );
        if counted {
            self.counters.per_en[en].prefetch_fetched += 1;
        }
    }

    fn on_prefetch_landed(&mut self, en: usize, key: ChunkKey) {
        let Some(f) = self.ens[en].inflight.remove(&key) else {
            return;
        };
        let before = self.ens[en].cache.len();
        let outcome = self.ens[en]
            .cache
            .insert(CachedChunk::prefetched(key, f.prob, f.pending));
        self.total_occupancy = self.total_occupancy + self.ens[en].cache.len() - before;
        let rejected = outcome == InsertOutcome::Rejected;
        if rejected {
            self.counters.per_en[en].rejected_inserts += 1;
        }
        for car in f.waiters {
            let state = &mut self.cars[car];
            let here = state.at.is_some_and(|v| state.visits[v].en == en);
            if here && state.status == Status::Waiting(key.chunk) && state.content == key.content {
                if rejected {
                    state.relay.insert(key.chunk);
                }
                self.request_next(car);
            }
        }
    }

    fn on_recovery_landed(&mut self, car: usize, visit: usize, chunk: u32) {
        let state = &mut self.cars[car];
        if state.at != Some(visit) {
            return;
        }
        state.recovering.remove(&chunk);
        state.relay.insert(chunk);
        if state.status == Status::Waiting(chunk) {
            self.request_next(car);
        }
    }

    fn on_chunk_delivered(&mut self, car: usize, en: usize) {
        self.radio_sync(en);
        self.complete_chunk(car);
        if let Some(i) = self.ens[en].active.iter().position(|&c| c == car) {
            self.ens[en].active.swap_remove(i);
        }
        self.request_next(car);
    }

    fn complete_chunk(&mut self, car: usize) {
        let Status::Streaming { from_cache, .. } = self.cars[car].status else {
            return;
        };
        let visit = self.cars[car].at.expect("streaming car is under coverage");
        let en = self.cars[car].visits[visit].en;
        let chunk = self.cars[car].next_chunk;
        if self.evaluated(visit) {
            let (state, counters) = (&mut self.cars[car], &mut self.counters.per_en[en]);
            if from_cache {
                counters.hits += 1;
                state.hits += 1;
            } else {
                counters.misses += 1;
                state.misses += 1;
            }
        }
        let key = self.chunk_key(car, chunk);
        let state = &mut self.cars[car];
        state.next_chunk += 1;
        state.status = Status::Idle;
        if !from_cache {
            state.relay.remove(&chunk);
            if self.config.standard_cache {
                let before = self.ens[en].cache.len();
                self.ens[en].cache.insert(CachedChunk::standard(key));
                self.total_occupancy = self.total_occupancy + self.ens[en].cache.len() - before;
            }
        }
    }

    fn request_next(&mut self, car: usize) {
        let Some(visit) = self.cars[car].at else {
            return;
        };
        let en = self.cars[car].visits[visit].en;
        if self.cars[car].next_chunk as usize > self.config.catalog.chunks_per_content {
            self.cars[car].status = Status::Done;
            return;
        }
        if self.cars[car].pending_plan.is_some() {
            self.cars[car].status = Status::AwaitingPlan;
            return;
        }
        let chunk = self.cars[car].next_chunk;
        let key = self.chunk_key(car, chunk);
        if self.cars[car].recovery_mode {
            self.ensure_recovery_window(car, en, visit, chunk);
        }
        if self.ens[en].cache.contains(&key) {
            self.ens[en]
                .cache
                .lookup(key.content, key.chunk, CarId(car as u32));
            self.start_stream(car, en, true);
        } else if self.cars[car].relay.contains(&chunk) {
            self.start_stream(car, en, false);
        } else if let Some(f) = self.ens[en].inflight.get_mut(&key) {
            // the planned copy is on its way: wait for it rather than
            // fetching a second one
            f.waiters.push(car);
            self.cars[car].status = Status::Waiting(chunk);
        } else {
            if !self.cars[car].recovering.contains(&chunk) {
                self.cars[car].recovery_mode = true;
                self.ensure_recovery_window(car, en, visit, chunk);
            }
            self.cars[car].status = Status::Waiting(chunk);
        }
    }

    /// Requests every chunk of `first..first + margin` that is neither
    /// resident, on its way, nor already relayed.
    fn ensure_recovery_window(&mut self, car: usize, en: usize, visit: usize, first: u32) {
        let last = (first as usize + self.ens[en].recovery_margin - 1)
            .min(self.config.catalog.chunks_per_content);
        for chunk in first..=last as u32 {
            let key = self.chunk_key(car, chunk);
            let state = &self.cars[car];
            if state.relay.contains(&chunk)
                || state.recovering.contains(&chunk)
                || self.ens[en].cache.contains(&key)
                || self.ens[en].inflight.contains_key(&key)
            {
                continue;
            }
            let t = self.link_landing(en);
            self.cars[car].recovering.insert(chunk);
            self.push(
                t,
                car as u32,
                en,
                Kind::RecoveryFetchComplete { visit, chunk },
            );
            if self.evaluated(visit) {
                self.counters.per_en[en].recovery_fetched += 1;
            }
        }
    }

    fn start_stream(&mut self, car: usize, en: usize, from_cache: bool) {
        self.radio_sync(en);
        self.ens[en].active.push(car);
        self.cars[car].status = Status::Streaming {
            remaining_bits: self.config.catalog.chunk_size_bits,
            from_cache,
        };
    }
}

/// Simulates `trace` under `config`.
pub fn run(config: &SimulationConfig, trace: &[CarPath]) -> Result<MetricsReport> {
    Simulation::new(config, trace)?.run()
}
