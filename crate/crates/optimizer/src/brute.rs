//! Exhaustive search, used to validate the heuristic on small clusters.

use geokv_core::config::valid_size_tuples;
use geokv_core::{Configuration, DcId, Model, Protocol, Workload};
use itertools::Itertools;

use crate::cost::cost;
use crate::latency::latency_worstcase;
use crate::search::{compare, k_range, OptimizerDecision, Policy, SearchSpace, FEASIBILITY_EPS};
use crate::OptimizerError;

pub const BRUTE_FORCE_MAX_DCS: usize = 5;

/// Tries every protocol, N, K, valid quorum-size tuple, server set and
/// per-origin quorum choice. Origins are independent given the server set, so
/// each picks its cheapest feasible quorums on its own.
pub fn optimize_bruteforce(spec: &Workload, model: &Model, space: &SearchSpace) -> Result<OptimizerDecision, OptimizerError> {
    let d = model.d();
    if d > BRUTE_FORCE_MAX_DCS {
        return Err(OptimizerError::TooLarge { d, max: BRUTE_FORCE_MAX_DCS });
    }
    spec.validate(d)?;
    let policy = Policy::Full;
    let allowed: Vec<DcId> = space.servers.clone().unwrap_or_else(|| model.dcs().collect());
    let mut best: Option<OptimizerDecision> = None;
    for protocol in [Protocol::Abd, Protocol::Cas] {
        if space.protocol.is_some_and(|p| p != protocol) {
            continue;
        }
        for n in 1..=allowed.len() {
            if space.n.is_some_and(|w| w != n) {
                continue;
            }
            for k in k_range(protocol, n, spec.f) {
                if space.k.is_some_and(|w| w != k) {
                    continue;
                }
                for sizes in valid_size_tuples(protocol, n, k, spec.f) {
                    for servers in allowed.iter().copied().combinations(n) {
                        let Some(config) = exhaustive_quorums(spec, model, protocol, k, &sizes, &servers)? else {
                            continue;
                        };
                        let d = OptimizerDecision::evaluate(&policy, config, spec, model)?;
                        if d.feasible && best.as_ref().is_none_or(|b| compare(&d, b).is_lt()) {
                            best = Some(d);
                        }
                    }
                }
            }
        }
    }
    Ok(best.unwrap_or_else(|| OptimizerDecision::infeasible(&policy)))
}

fn exhaustive_quorums(
    spec: &Workload,
    model: &Model,
    protocol: Protocol,
    k: usize,
    sizes: &[usize],
    servers: &[DcId],
) -> Result<Option<Configuration>, OptimizerError> {
    let base = Configuration::new(protocol, servers.to_vec(), k, sizes.to_vec()).with_nearest_quorums(model);
    let mut config = base.clone();
    let choices: Vec<Vec<Vec<DcId>>> = sizes.iter().map(|&q| servers.iter().copied().combinations(q).collect()).collect();
    for (i, &alpha) in spec.origin_dist.iter().enumerate() {
        if alpha <= 0.0 {
            continue;
        }
        let origin = DcId(i);
        // The same workload seen from this origin only.
        let mut solo = spec.clone();
        solo.origin_dist = Workload::single_origin(model.d(), i);
        solo.lambda = spec.lambda * alpha;
        let mut best: Option<(f64, Vec<Vec<DcId>>)> = None;
        for sets in choices.iter().map(|c| c.iter()).multi_cartesian_product() {
            let sets: Vec<Vec<DcId>> = sets.into_iter().cloned().collect();
            let trial = base.clone().with_quorums(origin, sets.clone());
            let (g, p) = latency_worstcase(&trial, origin, spec, model)?;
            if g > spec.slo_get + FEASIBILITY_EPS || p > spec.slo_put + FEASIBILITY_EPS {
                continue;
            }
            let b = cost(&trial, &solo, model)?;
            let c = b.c_get + b.c_put + b.c_vm;
            if best.as_ref().is_none_or(|(w, _)| c < *w) {
                best = Some((c, sets));
            }
        }
        match best {
            Some((_, sets)) => {
                config.quorums.insert(origin, sets);
            }
            None => return Ok(None),
        }
    }
    Ok(Some(config))
}
