//! Discrete-event simulation of cars streaming content through edge caches
//! driven by a prefetch policy.

mod config;
mod engine;
mod perturb;
mod prefetcher;
mod workload;

pub use config::{
    BackhaulConfig, ContentCatalog, DwellError, ErrorModels, PathSkip, PolicyConfig, RadioConfig,
    SignificantFilter, SimulationConfig, ZipfSpec,
};
pub use engine::{run, CarSummary, Simulation, SimulationOutcome};
pub use perturb::{apply_path_skip, min_dwell_per_en, perturb_dwell, perturb_trace};
pub use workload::{draw_content_request, ZipfWorkload};
