use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::ids::DcId;
use crate::model::ClusterModel;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Replication: two quorums (query, write).
    Abd,
    /// Erasure coding: four quorums (query, pre-write, finalize, read).
    Cas,
}

impl Protocol {
    pub fn quorum_count(self) -> usize {
        match self {
            Protocol::Abd => 2,
            Protocol::Cas => 4,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Abd => "abd",
            Protocol::Cas => "cas",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "abd" => Ok(Protocol::Abd),
            "cas" => Ok(Protocol::Cas),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// Position of a quorum in [`Configuration::quorum_sizes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuorumRole {
    /// ABD phase one (tag query), CAS phase one (fin-tag query).
    Query,
    /// ABD phase two (value write / write-back).
    AbdWrite,
    /// CAS pre-write of coded chunks.
    PreWrite,
    /// CAS finalize issued by a PUT.
    Finalize,
    /// CAS read phase (finalize + chunk fetch).
    Read,
}

impl QuorumRole {
    pub fn index(self) -> usize {
        match self {
            QuorumRole::Query => 0,
            QuorumRole::AbdWrite | QuorumRole::PreWrite => 1,
            QuorumRole::Finalize => 2,
            QuorumRole::Read => 3,
        }
    }
}

/// One constraint a configuration fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NoServers,
    DuplicateServer(DcId),
    QuorumCount { expected: usize, got: usize },
    CodeDimension { k: usize, n: usize },
    AbdDimension { k: usize },
    EmptyQuorum { index: usize },
    QuorumTooLarge { index: usize, size: usize, limit: usize },
    /// ABD: q1 + q2 > N.
    QueryWriteIntersection,
    /// CAS: q1 + q3 > N.
    QueryFinalizeIntersection,
    /// CAS: q1 + q4 > N.
    QueryReadIntersection,
    /// CAS: q2 + q4 >= N + K.
    PreWriteReadOverlap,
    /// CAS: q4 >= K.
    ReadBelowK,
    /// CAS: N - K >= 2f.
    CodeRedundancy { n: usize, k: usize, f: usize },
    OriginQuorumCount { origin: DcId, got: usize },
    OriginQuorumSize { origin: DcId, index: usize, expected: usize, got: usize },
    OriginQuorumForeign { origin: DcId, index: usize, dc: DcId },
    OriginQuorumDuplicate { origin: DcId, index: usize, dc: DcId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoServers => write!(f, "no servers"),
            DuplicateServer(d) => write!(f, "server {d} listed twice"),
            QuorumCount { expected, got } => write!(f, "expected {expected} quorum sizes, got {got}"),
            CodeDimension { k, n } => write!(f, "code dimension k={k} outside 1..={n}"),
            AbdDimension { k } => write!(f, "replication requires k=1, got {k}"),
            EmptyQuorum { index } => write!(f, "q{} is zero", index + 1),
            QuorumTooLarge { index, size, limit } => {
                write!(f, "q{}={size} exceeds N-f={limit}", index + 1)
            }
            QueryWriteIntersection => write!(f, "q1+q2 > N"),
            QueryFinalizeIntersection => write!(f, "q1+q3 > N"),
            QueryReadIntersection => write!(f, "q1+q4 > N"),
            PreWriteReadOverlap => write!(f, "q2+q4 >= N+K"),
            ReadBelowK => write!(f, "q4 >= K"),
            CodeRedundancy { n, k, f: ff } => write!(f, "N-K >= 2f (N={n}, K={k}, f={ff})"),
            OriginQuorumCount { origin, got } => write!(f, "origin {origin} has {got} quorums"),
            OriginQuorumSize { origin, index, expected, got } => {
                write!(f, "origin {origin} quorum q{} has {got} members, expected {expected}", index + 1)
            }
            OriginQuorumForeign { origin, index, dc } => {
                write!(f, "origin {origin} quorum q{} contains non-server {dc}", index + 1)
            }
            OriginQuorumDuplicate { origin, index, dc } => {
                write!(f, "origin {origin} quorum q{} lists {dc} twice", index + 1)
            }
        }
    }
}

/// Checks only the quorum-size inequalities of a protocol, without placement.
pub fn size_violations(protocol: Protocol, n: usize, k: usize, sizes: &[usize], f: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if sizes.len() != protocol.quorum_count() {
        out.push(Violation::QuorumCount { expected: protocol.quorum_count(), got: sizes.len() });
        return out;
    }
    if n == 0 {
        out.push(Violation::NoServers);
    }
    match protocol {
        Protocol::Abd if k != 1 => out.push(Violation::AbdDimension { k }),
        Protocol::Cas if k == 0 || k > n => out.push(Violation::CodeDimension { k, n }),
        _ => {}
    }
    let limit = n.saturating_sub(f);
    for (index, &size) in sizes.iter().enumerate() {
        if size == 0 {
            out.push(Violation::EmptyQuorum { index });
        }
        if size > limit {
            out.push(Violation::QuorumTooLarge { index, size, limit });
        }
    }
    match protocol {
        Protocol::Abd => {
            if sizes[0] + sizes[1] <= n {
                out.push(Violation::QueryWriteIntersection);
            }
        }
        Protocol::Cas => {
            let (q1, q2, q3, q4) = (sizes[0], sizes[1], sizes[2], sizes[3]);
            if q1 + q3 <= n {
                out.push(Violation::QueryFinalizeIntersection);
            }
            if q1 + q4 <= n {
                out.push(Violation::QueryReadIntersection);
            }
            if q2 + q4 < n + k {
                out.push(Violation::PreWriteReadOverlap);
            }
            if q4 < k {
                out.push(Violation::ReadBelowK);
            }
            if n < k + 2 * f {
                out.push(Violation::CodeRedundancy { n, k, f });
            }
        }
    }
    out
}

/// Every quorum-size tuple valid for `(protocol, n, k, f)`, in lexicographic order.
pub fn valid_size_tuples(protocol: Protocol, n: usize, k: usize, f: usize) -> Vec<Vec<usize>> {
    let count = protocol.quorum_count();
    let mut out = Vec::new();
    let mut cur = vec![1usize; count];
    if n == 0 {
        return out;
    }
    loop {
        if size_violations(protocol, n, k, &cur, f).is_empty() {
            out.push(cur.clone());
        }
        let mut i = count;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n {
                cur[i] += 1;
                break;
            }
            cur[i] = 1;
        }
    }
}

/// Protocol, code parameters, placement and per-origin quorums of one key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub epoch: u64,
    pub protocol: Protocol,
    pub servers: Vec<DcId>,
    pub k: usize,
    pub quorum_sizes: Vec<usize>,
    /// For each client location, the member lists of every quorum.
    pub quorums: BTreeMap<DcId, Vec<Vec<DcId>>>,
}

impl Configuration {
    /// A configuration without any per-origin quorums yet.
    pub fn new(protocol: Protocol, servers: Vec<DcId>, k: usize, quorum_sizes: Vec<usize>) -> Self {
        Configuration { epoch: 0, protocol, servers, k, quorum_sizes, quorums: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.servers.len()
    }

    pub fn q(&self, index: usize) -> usize {
        self.quorum_sizes[index]
    }

    pub fn quorum(&self, origin: DcId, index: usize) -> Option<&[DcId]> {
        self.quorums.get(&origin).and_then(|qs| qs.get(index)).map(Vec::as_slice)
    }

    /// Position of `dc` in the server list; for CAS it is the chunk index.
    pub fn position(&self, dc: DcId) -> Option<usize> {
        self.servers.iter().position(|&s| s == dc)
    }

    pub fn with_epoch(mut self, epoch: u64) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn with_quorums(mut self, origin: DcId, sets: Vec<Vec<DcId>>) -> Self {
        self.quorums.insert(origin, sets);
        self
    }

    /// Gives every DC of `model` the nearest servers (by round trip) for each quorum.
    pub fn with_nearest_quorums<S: Scalar>(mut self, model: &ClusterModel<S>) -> Self {
        for origin in (0..model.d()).map(DcId) {
            let mut by_rtt = self.servers.clone();
            by_rtt.sort_by(|&a, &b| {
                model.rtt(origin, a).partial_cmp(&model.rtt(origin, b)).unwrap().then(a.cmp(&b))
            });
            let sets = self.quorum_sizes.iter().map(|&q| by_rtt[..q.min(by_rtt.len())].to_vec()).collect();
            self.quorums.insert(origin, sets);
        }
        self
    }

    /// Lists every violated constraint for fault tolerance `f`.
    pub fn violations(&self, f: usize) -> Vec<Violation> {
        let n = self.n();
        let mut out = size_violations(self.protocol, n, self.k, &self.quorum_sizes, f);
        let servers: BTreeSet<DcId> = self.servers.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for &s in &self.servers {
            if !seen.insert(s) {
                out.push(Violation::DuplicateServer(s));
            }
        }
        if self.quorum_sizes.len() != self.protocol.quorum_count() {
            return out;
        }
        for (&origin, sets) in &self.quorums {
            if sets.len() != self.quorum_sizes.len() {
                out.push(Violation::OriginQuorumCount { origin, got: sets.len() });
                continue;
            }
            for (index, set) in sets.iter().enumerate() {
                let mut members = BTreeSet::new();
                for &dc in set {
                    if !servers.contains(&dc) {
                        out.push(Violation::OriginQuorumForeign { origin, index, dc });
                    }
                    if !members.insert(dc) {
                        out.push(Violation::OriginQuorumDuplicate { origin, index, dc });
                    }
                }
                if set.len() != self.quorum_sizes[index] {
                    out.push(Violation::OriginQuorumSize {
                        origin,
                        index,
                        expected: self.quorum_sizes[index],
                        got: set.len(),
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self, f: usize) -> Result<(), CoreError> {
        let v = self.violations(f);
        if v.is_empty() {
            Ok(())
        } else {
            Err(CoreError::InvalidConfig(v))
        }
    }
}

/// A reasonable quorum-size tuple for `(protocol, n, k, f)`: the smallest read-side quorum
/// among the valid tuples, or `None` when no tuple is valid.
pub fn default_sizes(protocol: Protocol, n: usize, k: usize, f: usize) -> Option<Vec<usize>> {
    let majority = n / 2 + 1;
    let preferred = match protocol {
        Protocol::Abd => vec![majority, n + 1 - majority],
        Protocol::Cas => {
            let q4 = (n + k).div_ceil(2);
            let q1 = (n + 1).saturating_sub(q4);
            vec![q1, (n + k).saturating_sub(q4), n + 1 - q1.min(n), q4]
        }
    };
    if size_violations(protocol, n, k, &preferred, f).is_empty() {
        return Some(preferred);
    }
    valid_size_tuples(protocol, n, k, f).into_iter().next()
}
