//! Chunk-count laws and per-EN download probabilities.

mod pdf;
mod phi;
mod radio;

pub use pdf::{truncate_to_cache, DiscretePdf, MASS_TOLERANCE};
pub use phi::{phi_general, phi_general_from, phi_iid, shift_phi, PhiMatrix};
pub use radio::{estimate_chunk_count_dist, RadioParams};
