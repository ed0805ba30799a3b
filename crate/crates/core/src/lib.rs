//! Domain types shared by every geokv crate.
//!
//! The analytic types ([`ClusterModel`], [`WorkloadSpec`]) are generic over the
//! scalar type so the cost model can be evaluated in `f32` or `f64`. The rest
//! of the workspace works with the `f64` aliases re-exported here.

pub mod config;
pub mod error;
pub mod history;
pub mod ids;
pub mod model;
pub mod presets;
pub mod scalar;
pub mod tag;
pub mod value;
pub mod workload;

pub use config::{Configuration, Protocol, QuorumRole, Violation};
pub use error::CoreError;
pub use history::{History, OpKind, OpRecord};
pub use ids::{DcId, Key};
pub use model::{ClusterModel, ModelFile};
pub use scalar::Scalar;
pub use tag::{ClientId, Tag};
pub use value::{Value, ValueId};
pub use workload::WorkloadSpec;

/// Cluster model over `f64`.
pub type Model = ClusterModel<f64>;
/// Workload description over `f64`.
pub type Workload = WorkloadSpec<f64>;
/// Cluster model over `f32`.
pub type ModelF32 = ClusterModel<f32>;
/// Workload description over `f32`.
pub type WorkloadF32 = WorkloadSpec<f32>;
