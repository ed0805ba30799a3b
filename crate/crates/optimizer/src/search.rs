//! Configuration search over protocol, code parameters, placement and quorums.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use geokv_core::{Configuration, DcId, Model, Protocol, Workload};
use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::cost::{cost, cost_storage, CostBreakdown};
use crate::latency::latency_worstcase;
use crate::quorum::{OriginChoice, OriginProblem};
use crate::OptimizerError;

/// Latency slack (ms) when checking a decision against its targets.
pub const FEASIBILITY_EPS: f64 = 1e-6;

/// Relative cost difference below which two decisions tie.
pub const COST_TIE_EPS: f64 = 1e-12;

/// Which configurations a search may return.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Cheaper of the ABD-only and CAS-only optima.
    Full,
    AbdOnly,
    CasOnly,
    /// Parameters of the optimum, placed on the lowest-latency servers.
    Nearest { protocol: Option<Protocol> },
    /// Fixed protocol and code; servers are those with the lowest outbound
    /// price to the requesting DCs.
    Fixed { protocol: Protocol, n: usize, k: usize },
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Full => f.write_str("full"),
            Policy::AbdOnly => f.write_str("abd-only"),
            Policy::CasOnly => f.write_str("cas-only"),
            Policy::Nearest { protocol: None } => f.write_str("nearest"),
            Policy::Nearest { protocol: Some(p) } => write!(f, "nearest-{p}"),
            Policy::Fixed { protocol, n, k } => write!(f, "fixed-{protocol}-{n}-{k}"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    /// Accepts `full`, `abd-only`, `cas-only`, `nearest`, `nearest-abd`,
    /// `nearest-cas` and `fixed-<protocol>-<n>-<k>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        match s.as_str() {
            "full" => return Ok(Policy::Full),
            "abd-only" | "abd" => return Ok(Policy::AbdOnly),
            "cas-only" | "cas" => return Ok(Policy::CasOnly),
            "nearest" => return Ok(Policy::Nearest { protocol: None }),
            _ => {}
        }
        if let Some(p) = s.strip_prefix("nearest-") {
            return Ok(Policy::Nearest { protocol: Some(p.parse()?) });
        }
        if let Some(rest) = s.strip_prefix("fixed-") {
            let parts: Vec<&str> = rest.split('-').collect();
            if let [p, n, k] = parts.as_slice() {
                let n = n.parse().map_err(|_| format!("bad N in `{s}`"))?;
                let k = k.parse().map_err(|_| format!("bad K in `{s}`"))?;
                return Ok(Policy::Fixed { protocol: p.parse()?, n, k });
            }
            return Err(format!("expected fixed-<protocol>-<n>-<k>, got `{s}`"));
        }
        Err(format!("unknown policy `{s}`"))
    }
}

/// Optional restrictions of the search space.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub protocol: Option<Protocol>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    /// Only these servers may be used.
    pub servers: Option<Vec<DcId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Per origin, only the `top_m` DCs with the cheapest transfer to it and the
    /// `top_m` closest to it are candidates.
    pub top_m: usize,
    pub space: SearchSpace,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { top_m: 6, space: SearchSpace::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginLatency {
    pub origin: DcId,
    pub get_ms: f64,
    pub put_ms: f64,
}

/// Result of a search. `configuration` is `None` when nothing meets the targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDecision {
    pub policy: String,
    pub feasible: bool,
    pub configuration: Option<Configuration>,
    pub breakdown: Option<CostBreakdown<f64>>,
    /// Worst-case latencies of every requesting DC.
    pub latencies: Vec<OriginLatency>,
}

impl OptimizerDecision {
    pub fn infeasible(policy: &Policy) -> Self {
        OptimizerDecision {
            policy: policy.to_string(),
            feasible: false,
            configuration: None,
            breakdown: None,
            latencies: Vec::new(),
        }
    }

    pub fn cost(&self) -> Option<f64> {
        self.breakdown.map(|b| b.total)
    }

    /// Evaluates `config` under `spec`; feasible iff every requesting DC meets both targets.
    pub fn evaluate(policy: &Policy, config: Configuration, spec: &Workload, model: &Model) -> Result<Self, OptimizerError> {
        let breakdown = cost(&config, spec, model)?;
        let mut latencies = Vec::new();
        let mut feasible = config.violations(spec.f).is_empty();
        for (i, &a) in spec.origin_dist.iter().enumerate() {
            if a <= 0.0 {
                continue;
            }
            let (get_ms, put_ms) = latency_worstcase(&config, DcId(i), spec, model)?;
            feasible &= get_ms <= spec.slo_get + FEASIBILITY_EPS && put_ms <= spec.slo_put + FEASIBILITY_EPS;
            latencies.push(OriginLatency { origin: DcId(i), get_ms, put_ms });
        }
        Ok(OptimizerDecision {
            policy: policy.to_string(),
            feasible,
            configuration: Some(config),
            breakdown: Some(breakdown),
            latencies,
        })
    }
}

/// Orders decisions by cost, then protocol, N, K and server list.
pub fn compare(a: &OptimizerDecision, b: &OptimizerDecision) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        (false, false) => return Ordering::Equal,
        _ => {}
    }
    let (ca, cb) = (a.cost().unwrap_or(f64::INFINITY), b.cost().unwrap_or(f64::INFINITY));
    if (ca - cb).abs() > COST_TIE_EPS * ca.abs().max(cb.abs()) {
        return ca.total_cmp(&cb);
    }
    let key = |d: &OptimizerDecision| {
        d.configuration.as_ref().map(|c| {
            let mut s = c.servers.clone();
            s.sort();
            (c.protocol, c.n(), c.k, s)
        })
    };
    key(a).cmp(&key(b))
}

fn better(best: &mut Option<OptimizerDecision>, cand: OptimizerDecision) {
    if best.as_ref().is_none_or(|b| compare(&cand, b) == Ordering::Less) {
        *best = Some(cand);
    }
}

/// Size tuples worth considering: shrinking any quorum never hurts, so only
/// tuples where no quorum can shrink are listed.
pub fn minimal_size_tuples(protocol: Protocol, n: usize, k: usize, f: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n < 2 * f + k || n == 0 {
        return out;
    }
    match protocol {
        Protocol::Abd => {
            if k != 1 {
                return out;
            }
            for q1 in (f + 1)..=(n - f) {
                out.push(vec![q1, n - q1 + 1]);
            }
        }
        Protocol::Cas => {
            for q1 in (f + 1)..=(n - f) {
                let lo = (k + f).max(n - q1 + 1);
                for q4 in lo..=(n - f) {
                    out.push(vec![q1, n + k - q4, n - q1 + 1, q4]);
                }
            }
        }
    }
    out
}

/// Code dimensions allowed for `protocol` with `n` servers.
pub(crate) fn k_range(protocol: Protocol, n: usize, f: usize) -> Vec<usize> {
    match protocol {
        Protocol::Abd => vec![1],
        Protocol::Cas => (1..=n.saturating_sub(2 * f)).collect(),
    }
}

/// Candidate servers: union over requesting DCs of their `top_m` cheapest
/// senders and their `top_m` closest DCs. The closest ones keep tight latency
/// targets reachable when every cheap DC is far away.
fn candidate_pool(spec: &Workload, model: &Model, opts: &SearchOptions) -> Vec<DcId> {
    let allowed: Vec<DcId> = opts.space.servers.clone().unwrap_or_else(|| model.dcs().collect());
    let mut pool = Vec::new();
    for (i, &a) in spec.origin_dist.iter().enumerate() {
        if a <= 0.0 {
            continue;
        }
        let i = DcId(i);
        let mut ranked = allowed.clone();
        ranked.sort_by(|&x, &y| {
            model.price(x, i).total_cmp(&model.price(y, i)).then(model.rtt(i, x).total_cmp(&model.rtt(i, y))).then(x.cmp(&y))
        });
        pool.extend(ranked.iter().take(opts.top_m));
        ranked.sort_by(|&x, &y| model.rtt(i, x).total_cmp(&model.rtt(i, y)).then(x.cmp(&y)));
        pool.extend(ranked.iter().take(opts.top_m));
    }
    pool.sort();
    pool.dedup();
    pool
}

/// Builds the configuration with the cheapest feasible quorums on `servers`,
/// or `None` if some requesting DC cannot meet its targets.
pub(crate) fn place(
    spec: &Workload,
    model: &Model,
    protocol: Protocol,
    k: usize,
    sizes: &[usize],
    servers: &[DcId],
) -> Option<(Configuration, f64)> {
    let mut config = Configuration::new(protocol, servers.to_vec(), k, sizes.to_vec()).with_nearest_quorums(model);
    let mut total = 0.0;
    for (i, &alpha) in spec.origin_dist.iter().enumerate() {
        if alpha <= 0.0 {
            continue;
        }
        let p = OriginProblem { model, spec, origin: DcId(i), alpha, servers, k };
        let OriginChoice { quorums, cost } = p.solve(protocol, sizes)?;
        config.quorums.insert(DcId(i), quorums);
        total += cost;
    }
    Some((config, total))
}

fn relaxed_bound(spec: &Workload, model: &Model, protocol: Protocol, k: usize, sizes: &[usize], servers: &[DcId]) -> f64 {
    spec.origin_dist
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &alpha)| OriginProblem { model, spec, origin: DcId(i), alpha, servers, k }.relaxed(protocol, sizes).cost)
        .sum()
}

/// Cheapest feasible configuration within `opts.space` using the candidate pool.
pub fn search(spec: &Workload, model: &Model, policy: &Policy, opts: &SearchOptions) -> Result<OptimizerDecision, OptimizerError> {
    spec.validate(model.d())?;
    let pool = candidate_pool(spec, model, opts);
    let protocols: Vec<Protocol> = match opts.space.protocol {
        Some(p) => vec![p],
        None => vec![Protocol::Abd, Protocol::Cas],
    };
    let mut best: Option<OptimizerDecision> = None;
    for &protocol in &protocols {
        for n in 1..=pool.len() {
            if opts.space.n.is_some_and(|want| want != n) {
                continue;
            }
            for k in k_range(protocol, n, spec.f) {
                if opts.space.k.is_some_and(|want| want != k) {
                    continue;
                }
                let tuples = minimal_size_tuples(protocol, n, k, spec.f);
                if tuples.is_empty() {
                    continue;
                }
                for servers in pool.iter().copied().combinations(n) {
                    let held = Configuration::new(protocol, servers.clone(), k, tuples[0].clone());
                    let storage = cost_storage(&held, spec, model);
                    for sizes in &tuples {
                        if let Some(b) = best.as_ref().and_then(OptimizerDecision::cost) {
                            let bound = storage + relaxed_bound(spec, model, protocol, k, sizes, &servers);
                            if bound > b * (1.0 + 1e-9) {
                                continue;
                            }
                        }
                        let Some((config, _)) = place(spec, model, protocol, k, sizes, &servers) else { continue };
                        let d = OptimizerDecision::evaluate(policy, config, spec, model)?;
                        if d.feasible {
                            better(&mut best, d);
                        }
                    }
                }
            }
        }
    }
    Ok(best.unwrap_or_else(|| OptimizerDecision::infeasible(policy)))
}

/// Minimal-cost decision under `policy`.
pub fn optimize(spec: &Workload, model: &Model, policy: &Policy) -> Result<OptimizerDecision, OptimizerError> {
    optimize_with(spec, model, policy, &SearchOptions::default())
}

pub fn optimize_with(
    spec: &Workload,
    model: &Model,
    policy: &Policy,
    opts: &SearchOptions,
) -> Result<OptimizerDecision, OptimizerError> {
    spec.validate(model.d())?;
    let restricted = |p: Protocol| SearchOptions {
        top_m: opts.top_m,
        space: SearchSpace { protocol: Some(p), ..opts.space.clone() },
    };
    match *policy {
        Policy::Full => {
            let abd = search(spec, model, policy, &restricted(Protocol::Abd))?;
            let cas = search(spec, model, policy, &restricted(Protocol::Cas))?;
            let mut best = None;
            for d in [abd, cas] {
                if opts.space.protocol.is_none_or(|p| d.configuration.as_ref().is_some_and(|c| c.protocol == p)) {
                    better(&mut best, d);
                }
            }
            Ok(best.filter(|d| d.feasible).unwrap_or_else(|| OptimizerDecision::infeasible(policy)))
        }
        Policy::AbdOnly => search(spec, model, policy, &restricted(Protocol::Abd)),
        Policy::CasOnly => search(spec, model, policy, &restricted(Protocol::Cas)),
        Policy::Fixed { protocol, n, k } => fixed(spec, model, policy, protocol, n, k),
        Policy::Nearest { protocol } => {
            let inner = match protocol {
                None => Policy::Full,
                Some(Protocol::Abd) => Policy::AbdOnly,
                Some(Protocol::Cas) => Policy::CasOnly,
            };
            let opt = optimize_with(spec, model, &inner, opts)?;
            let Some(c) = opt.configuration.filter(|_| opt.feasible) else {
                return Ok(OptimizerDecision::infeasible(policy));
            };
            nearest(spec, model, policy, c.protocol, c.n(), c.k, &c.quorum_sizes)
        }
    }
}

fn fixed(spec: &Workload, model: &Model, policy: &Policy, protocol: Protocol, n: usize, k: usize) -> Result<OptimizerDecision, OptimizerError> {
    if n > model.d() || n == 0 {
        return Ok(OptimizerDecision::infeasible(policy));
    }
    let mut ranked: Vec<DcId> = model.dcs().collect();
    let avg_out = |j: DcId| -> f64 { spec.origin_dist.iter().enumerate().map(|(i, &a)| a * model.price(j, DcId(i))).sum() };
    ranked.sort_by(|&a, &b| avg_out(a).total_cmp(&avg_out(b)).then(a.cmp(&b)));
    let mut servers: Vec<DcId> = ranked.into_iter().take(n).collect();
    servers.sort();
    let mut best = None;
    for sizes in minimal_size_tuples(protocol, n, k, spec.f) {
        if let Some((config, _)) = place(spec, model, protocol, k, &sizes, &servers) {
            let d = OptimizerDecision::evaluate(policy, config, spec, model)?;
            if d.feasible {
                better(&mut best, d);
            }
        }
    }
    Ok(best.unwrap_or_else(|| OptimizerDecision::infeasible(policy)))
}

/// Places the given parameters on the `n` servers with the lowest
/// request-weighted latency, each origin using its nearest members.
fn nearest(
    spec: &Workload,
    model: &Model,
    policy: &Policy,
    protocol: Protocol,
    n: usize,
    k: usize,
    sizes: &[usize],
) -> Result<OptimizerDecision, OptimizerError> {
    let mut best: Option<(f64, Configuration)> = None;
    for servers in model.dcs().combinations(n) {
        let config = Configuration::new(protocol, servers, k, sizes.to_vec()).with_nearest_quorums(model);
        let mut weighted = 0.0;
        for (i, &a) in spec.origin_dist.iter().enumerate() {
            if a > 0.0 {
                let (g, p) = latency_worstcase(&config, DcId(i), spec, model)?;
                weighted += a * (spec.read_ratio * g + (1.0 - spec.read_ratio) * p);
            }
        }
        if best.as_ref().is_none_or(|(w, _)| weighted < *w - 1e-12) {
            best = Some((weighted, config));
        }
    }
    match best {
        Some((_, config)) => OptimizerDecision::evaluate(policy, config, spec, model),
        None => Ok(OptimizerDecision::infeasible(policy)),
    }
}
