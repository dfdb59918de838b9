//! Mobility-aware chunk prefetching for vehicular edge caches.
//!
//! Coverage traces are turned into dwell-time laws, which give per-EN
//! chunk download probabilities. Prefetch policies decide what each edge
//! node stores ahead of a car, and a discrete-event simulator measures the
//! resulting hit probability, throughput and backhaul load.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod error;
pub mod metrics;
pub mod policy;
pub mod probmodel;
pub mod simcore;
pub mod trace;

pub use error::{Error, Result};
