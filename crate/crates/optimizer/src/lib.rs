//! Per-key cost model and configuration search.
//!
//! [`cost`] and [`latency_worstcase`] evaluate a configuration analytically
//! and are generic over the scalar type. [`optimize`] searches protocol, code
//! parameters, placement and per-origin quorums for the cheapest configuration
//! meeting the latency targets; [`optimize_bruteforce`] checks it on small
//! clusters. [`kmodel`] holds the closed-form relation between cost and the
//! code dimension.

mod brute;
pub mod cost;
pub mod kmodel;
mod latency;
mod quorum;
pub mod search;
pub mod sweep;

use geokv_core::{CoreError, DcId};
use thiserror::Error;

pub use brute::{optimize_bruteforce, BRUTE_FORCE_MAX_DCS};
pub use cost::{cost, cost_get, cost_put, cost_storage, cost_vm, CostBreakdown};
pub use kmodel::{analytic_cost_k, k_opt, KCoefficients};
pub use latency::latency_worstcase;
pub use search::{optimize, optimize_with, OptimizerDecision, OriginLatency, Policy, SearchOptions, SearchSpace};
pub use sweep::{sweep, SweepRow};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("configuration has no complete quorum set for origin {0}")]
    MissingQuorums(DcId),
    #[error("exhaustive search supports at most {max} DCs, model has {d}")]
    TooLarge { d: usize, max: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
}
