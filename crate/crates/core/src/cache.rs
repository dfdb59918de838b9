//! Bounded per-EN chunk store.
//!
//! Entries live either in the prefetch partition (filled on instruction) or
//! in the standard partition (filled after a miss); both share one capacity.
//! Eviction takes delivered entries first, lowest download probability
//! first, then undelivered ones in the same order. An incoming chunk may
//! only displace an undelivered resident whose probability is strictly
//! lower than its own.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CarId(pub u32);

/// A chunk of a content item; chunk numbers start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChunkKey {
    pub content: u32,
    pub chunk: u32,
}

impl ChunkKey {
    pub fn new(content: u32, chunk: u32) -> Self {
        Self { content, chunk }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Prefetch,
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedChunk {
    pub key: ChunkKey,
    pub partition: Partition,
    /// Download probability that motivated storing the chunk (0 for the
    /// standard partition).
    pub download_prob: f64,
    pub pending_cars: BTreeSet<CarId>,
    /// Every car expected to consume the chunk has done so or left coverage.
    pub delivered: bool,
}

impl CachedChunk {
    pub fn prefetched(
        key: ChunkKey,
        download_prob: f64,
        cars: impl IntoIterator<Item = CarId>,
    ) -> Self {
        Self {
            key,
            partition: Partition::Prefetch,
            download_prob,
            pending_cars: cars.into_iter().collect(),
            delivered: false,
        }
    }

    /// A chunk relayed after a miss; it has already reached its car.
    pub fn standard(key: ChunkKey) -> Self {
        Self {
            key,
            partition: Partition::Standard,
            download_prob: 0.0,
            pending_cars: BTreeSet::new(),
            delivered: true,
        }
    }

    fn rank(&self) -> Rank {
        Rank {
            undelivered: !self.delivered,
            prob: Prob(self.download_prob),
            key: self.key,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted {
        evicted: Vec<ChunkKey>,
    },
    /// The key was already resident; pending cars and probability merged.
    Merged,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupOutcome {
    Hit(Partition),
    Miss,
}

#[derive(Debug, Clone, Copy)]
struct Prob(f64);

impl PartialEq for Prob {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Prob {}

impl PartialOrd for Prob {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prob {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Eviction order: delivered before undelivered, then ascending probability,
/// then key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Rank {
    undelivered: bool,
    prob: Prob,
    key: ChunkKey,
}

#[derive(Debug, Clone)]
pub struct EdgeCache {
    en_id: String,
    capacity: usize,
    entries: HashMap<ChunkKey, CachedChunk>,
    order: BTreeSet<Rank>,
    /// Keys on which each car was registered as pending (may hold stale keys).
    by_car: HashMap<CarId, Vec<ChunkKey>>,
}

impl EdgeCache {
    pub fn new(en_id: impl Into<String>, capacity: usize) -> Self {
        Self {
            en_id: en_id.into(),
            capacity,
            entries: HashMap::new(),
            order: BTreeSet::new(),
            by_car: HashMap::new(),
        }
    }

    pub fn en_id(&self) -> &str {
        &self.en_id
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &ChunkKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &ChunkKey) -> Option<&CachedChunk> {
        self.entries.get(key)
    }

    /// Resident entries in eviction order.
    pub fn entries_in_eviction_order(&self) -> impl Iterator<Item = &CachedChunk> {
        self.order.iter().map(|r| &self.entries[&r.key])
    }

    pub fn insert(&mut self, chunk: CachedChunk) -> InsertOutcome {
        if let Some(existing) = self.entries.get_mut(&chunk.key) {
            self.order.remove(&existing.rank());
            if !chunk.pending_cars.is_empty() {
                existing.delivered = false;
                for car in &chunk.pending_cars {
                    if existing.pending_cars.insert(*car) {
                        self.by_car.entry(*car).or_default().push(chunk.key);
                    }
                }
            }
            existing.download_prob = existing.download_prob.max(chunk.download_prob);
            self.order.insert(existing.rank());
            return InsertOutcome::Merged;
        }
        if self.capacity == 0 {
            return InsertOutcome::Rejected;
        }
        let mut evicted = Vec::new();
        if self.entries.len() >= self.capacity {
            let victim = *self.order.first().expect("full cache has entries");
            if victim.undelivered && chunk.download_prob <= victim.prob.0 {
                return InsertOutcome::Rejected;
            }
            self.remove(&victim.key);
            evicted.push(victim.key);
        }
        for car in &chunk.pending_cars {
            self.by_car.entry(*car).or_default().push(chunk.key);
        }
        self.order.insert(chunk.rank());
        self.entries.insert(chunk.key, chunk);
        InsertOutcome::Inserted { evicted }
    }

    /// Evicts entries until `space_needed` slots are free or the cache is
    /// empty.
    pub fn evict_for(&mut self, space_needed: usize) -> Vec<ChunkKey> {
        let mut evicted = Vec::new();
        while self.capacity.saturating_sub(self.entries.len()) < space_needed {
            let Some(victim) = self.order.first().copied() else {
                break;
            };
            self.remove(&victim.key);
            evicted.push(victim.key);
        }
        evicted
    }

    pub fn lookup(&mut self, content: u32, chunk: u32, car: CarId) -> LookupOutcome {
        let key = ChunkKey::new(content, chunk);
        let Some(entry) = self.entries.get_mut(&key) else {
            return LookupOutcome::Miss;
        };
        let partition = entry.partition;
        entry.pending_cars.remove(&car);
        if entry.pending_cars.is_empty() && !entry.delivered {
            self.order.remove(&entry.rank());
            entry.delivered = true;
            self.order.insert(entry.rank());
        }
        LookupOutcome::Hit(partition)
    }

    /// The car left coverage: it no longer holds any entry.
    pub fn release_car(&mut self, car: CarId) {
        let Some(keys) = self.by_car.remove(&car) else {
            return;
        };
        for key in keys {
            let Some(entry) = self.entries.get_mut(&key) else {
                continue;
            };
            if entry.pending_cars.remove(&car) && entry.pending_cars.is_empty() && !entry.delivered
            {
                self.order.remove(&entry.rank());
                entry.delivered = true;
                self.order.insert(entry.rank());
            }
        }
    }

    fn remove(&mut self, key: &ChunkKey) -> Option<CachedChunk> {
        let entry = self.entries.remove(key)?;
        self.order.remove(&entry.rank());
        Some(entry)
    }
}
