use std::collections::{BTreeMap, BTreeSet};

use geokv_core::{DcId, History, OpKind};
use geokv_protocol::ReconfigReport;
use serde::{Deserialize, Serialize};

/// Traffic carried by one directed link.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub from: DcId,
    pub to: DcId,
    pub messages: u64,
    pub bytes: f64,
    /// Bytes times the sender's price to the receiver.
    pub dollars: f64,
}

/// Bytes and dollars by purpose.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Traffic {
    /// GET and PUT requests and their replies.
    pub op_bytes: f64,
    pub op_dollars: f64,
    pub reconfig_bytes: f64,
    pub reconfig_dollars: f64,
    /// Metadata requests, replies and invalidations.
    pub metadata_bytes: f64,
    pub metadata_dollars: f64,
}

impl Traffic {
    pub fn total_bytes(&self) -> f64 {
        self.op_bytes + self.reconfig_bytes + self.metadata_bytes
    }

    pub fn total_dollars(&self) -> f64 {
        self.op_dollars + self.reconfig_dollars + self.metadata_dollars
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub avg_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencySummary {
    /// Nearest-rank statistics of `samples`.
    pub fn of(mut samples: Vec<f64>) -> Self {
        if samples.is_empty() {
            return LatencySummary::default();
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
        LatencySummary {
            count: n,
            avg_ms: samples.iter().sum::<f64>() / n as f64,
            p99_ms: samples[rank - 1],
            max_ms: samples[n - 1],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OriginLatency {
    pub origin: DcId,
    pub get: LatencySummary,
    pub put: LatencySummary,
    /// Fraction of completed GETs that finished in one phase.
    pub one_phase_fraction: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StorageSample {
    pub t_s: f64,
    pub bytes: f64,
    pub dollars_per_s: f64,
}

/// What a run measured.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub seed: u64,
    pub duration_s: f64,
    pub ops_invoked: usize,
    pub ops_completed: usize,
    pub ops_incomplete: usize,
    /// Arrivals at a DC that was down; never invoked.
    pub ops_skipped: usize,
    pub messages: u64,
    /// Messages addressed to a DC that was down on arrival.
    pub messages_dropped: u64,
    pub traffic: Traffic,
    pub links: Vec<LinkStats>,
    /// Operation traffic dollars divided by the run duration.
    pub network_dollars_per_s: f64,
    /// `theta_v` VM-seconds per quorum membership of every invoked operation.
    pub vm_dollars_per_s: f64,
    pub storage: Vec<StorageSample>,
    pub storage_dollars_per_s: f64,
    pub per_origin: Vec<OriginLatency>,
    pub get: LatencySummary,
    pub put: LatencySummary,
    pub one_phase_fraction: f64,
    /// Most operations in flight at once, and most PUTs.
    pub max_concurrency: usize,
    pub max_concurrent_puts: usize,
    pub reconfigurations: Vec<ReconfigReport>,
    pub reconfigs_skipped: usize,
    /// Operations a server held back during a reconfiguration.
    pub blocked_ops: usize,
    /// Operations restarted in a newer epoch.
    pub restarted_ops: usize,
    pub metadata_fetches: usize,
    /// Bytes of operation traffic per operation.
    #[serde(skip)]
    pub op_bytes: BTreeMap<u64, f64>,
    #[serde(skip)]
    pub op_dollars: BTreeMap<u64, f64>,
    /// Epochs each operation sent requests to.
    #[serde(skip)]
    pub op_epochs: BTreeMap<u64, BTreeSet<u64>>,
}

impl RunStats {
    pub(crate) fn summarize(&mut self, history: &History, d: usize) {
        let lat = |kind: OpKind, origin: Option<DcId>| {
            LatencySummary::of(
                history
                    .ops
                    .iter()
                    .filter(|o| o.kind == kind && origin.is_none_or(|x| x == o.origin))
                    .filter_map(|o| o.latency_ms())
                    .collect(),
            )
        };
        let one_phase = |origin: Option<DcId>| {
            let gets: Vec<bool> = history
                .ops
                .iter()
                .filter(|o| o.kind == OpKind::Get && o.is_complete() && origin.is_none_or(|x| x == o.origin))
                .map(|o| o.one_phase)
                .collect();
            if gets.is_empty() {
                0.0
            } else {
                gets.iter().filter(|&&b| b).count() as f64 / gets.len() as f64
            }
        };
        self.ops_invoked = history.len();
        self.ops_completed = history.ops.iter().filter(|o| o.is_complete()).count();
        self.ops_incomplete = self.ops_invoked - self.ops_completed;
        self.get = lat(OpKind::Get, None);
        self.put = lat(OpKind::Put, None);
        self.one_phase_fraction = one_phase(None);
        let origins: BTreeSet<DcId> = history.ops.iter().map(|o| o.origin).filter(|o| o.0 < d).collect();
        self.per_origin = origins
            .into_iter()
            .map(|o| OriginLatency {
                origin: o,
                get: lat(OpKind::Get, Some(o)),
                put: lat(OpKind::Put, Some(o)),
                one_phase_fraction: one_phase(Some(o)),
            })
            .collect();
        if !self.storage.is_empty() {
            self.storage_dollars_per_s =
                self.storage.iter().map(|s| s.dollars_per_s).sum::<f64>() / self.storage.len() as f64;
        }
    }

    pub fn origin(&self, dc: DcId) -> Option<&OriginLatency> {
        self.per_origin.iter().find(|o| o.origin == dc)
    }
}
