//! Dollar cost per second of serving one key under a configuration.

use geokv_core::{ClusterModel, Configuration, DcId, Protocol, Scalar, WorkloadSpec};
use serde::{Deserialize, Serialize};

use crate::OptimizerError;

/// Cost rates in dollars per second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CostBreakdown<S> {
    pub c_get: S,
    pub c_put: S,
    pub c_storage: S,
    pub c_vm: S,
    pub total: S,
}

impl<S: Scalar> CostBreakdown<S> {
    pub fn new(c_get: S, c_put: S, c_storage: S, c_vm: S) -> Self {
        CostBreakdown { c_get, c_put, c_storage, c_vm, total: c_get + c_put + c_storage + c_vm }
    }

    /// Network cost only.
    pub fn network(&self) -> S {
        self.c_get + self.c_put
    }
}

/// Origins that issue requests, with their share.
pub(crate) fn active<S: Scalar>(spec: &WorkloadSpec<S>) -> impl Iterator<Item = (DcId, S)> + '_ {
    spec.origin_dist.iter().enumerate().filter(|(_, a)| **a > S::zero()).map(|(i, &a)| (DcId(i), a))
}

fn quorums(config: &Configuration, origin: DcId) -> Result<&[Vec<DcId>], OptimizerError> {
    config
        .quorums
        .get(&origin)
        .filter(|q| q.len() == config.protocol.quorum_count())
        .map(Vec::as_slice)
        .ok_or(OptimizerError::MissingQuorums(origin))
}

/// Sum of prices from every member of `set` to `to`.
fn inbound<S: Scalar>(model: &ClusterModel<S>, set: &[DcId], to: DcId) -> S {
    set.iter().map(|&j| model.price(j, to)).sum()
}

/// Sum of prices from `from` to every member of `set`.
fn outbound<S: Scalar>(model: &ClusterModel<S>, from: DcId, set: &[DcId]) -> S {
    set.iter().map(|&k| model.price(from, k)).sum()
}

/// Network cost of PUTs.
pub fn cost_put<S: Scalar>(config: &Configuration, spec: &WorkloadSpec<S>, model: &ClusterModel<S>) -> Result<S, OptimizerError> {
    let om = spec.meta_size;
    let og = spec.obj_size;
    let k = S::of_usize(config.k);
    let mut sum = S::zero();
    for (i, alpha) in active(spec) {
        let q = quorums(config, i)?;
        let per = match config.protocol {
            Protocol::Abd => om * inbound(model, &q[0], i) + og * outbound(model, i, &q[1]),
            Protocol::Cas => {
                om * (inbound(model, &q[0], i) + outbound(model, i, &q[2])) + og / k * outbound(model, i, &q[1])
            }
        };
        sum += alpha * per;
    }
    Ok((S::one() - spec.read_ratio) * spec.lambda * sum)
}

/// Network cost of GETs, charging the two-phase path for every read.
pub fn cost_get<S: Scalar>(config: &Configuration, spec: &WorkloadSpec<S>, model: &ClusterModel<S>) -> Result<S, OptimizerError> {
    let om = spec.meta_size;
    let og = spec.obj_size;
    let k = S::of_usize(config.k);
    let mut sum = S::zero();
    for (i, alpha) in active(spec) {
        let q = quorums(config, i)?;
        let per = match config.protocol {
            Protocol::Abd => og * (inbound(model, &q[0], i) + outbound(model, i, &q[1])),
            Protocol::Cas => {
                om * (inbound(model, &q[0], i) + outbound(model, i, &q[3])) + og / k * inbound(model, &q[3], i)
            }
        };
        sum += alpha * per;
    }
    Ok(spec.read_ratio * spec.lambda * sum)
}

/// Storage cost: each hosting DC pays its own price for what it holds.
pub fn cost_storage<S: Scalar>(config: &Configuration, spec: &WorkloadSpec<S>, model: &ClusterModel<S>) -> S {
    let held = match config.protocol {
        Protocol::Abd => spec.obj_size,
        Protocol::Cas => spec.obj_size / S::of_usize(config.k),
    };
    config.servers.iter().map(|s| model.storage_price[s.0] * held).sum()
}

/// VM cost: every quorum membership serving an origin costs `theta_v` VM-seconds per request.
pub fn cost_vm<S: Scalar>(config: &Configuration, spec: &WorkloadSpec<S>, model: &ClusterModel<S>) -> Result<S, OptimizerError> {
    let mut sum = S::zero();
    for (i, alpha) in active(spec) {
        for set in quorums(config, i)? {
            for j in set {
                sum += model.vm_price[j.0] * alpha;
            }
        }
    }
    Ok(model.theta_v * spec.lambda * sum)
}

pub fn cost<S: Scalar>(
    config: &Configuration,
    spec: &WorkloadSpec<S>,
    model: &ClusterModel<S>,
) -> Result<CostBreakdown<S>, OptimizerError> {
    Ok(CostBreakdown::new(
        cost_get(config, spec, model)?,
        cost_put(config, spec, model)?,
        cost_storage(config, spec, model),
        cost_vm(config, spec, model)?,
    ))
}
