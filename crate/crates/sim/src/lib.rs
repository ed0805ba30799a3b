//! Discrete-event simulator: runs clients, servers and the controller over
//! a modelled wide-area network and records what happened.
//!
//! Message delay is the one-way latency plus transfer time at the link
//! bandwidth, optionally with seeded jitter. Events at the same instant run in
//! the order they were scheduled, so a scenario and seed fully determine a run.

mod engine;
mod scenario;
mod stats;

use geokv_core::CoreError;
use geokv_workload::WorkloadError;
use thiserror::Error;

pub use engine::{ms, ns, run, Run};
pub use scenario::{Failure, Scenario, ScheduledReconfig, Segment, SimOptions};
pub use stats::{LatencySummary, LinkStats, OriginLatency, RunStats, StorageSample, Traffic};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("{file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}
