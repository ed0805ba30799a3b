//! Statistics of a finished history from the driver's point of view.

use std::collections::BTreeMap;

use geokv_core::{DcId, History, OpKind};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    /// Width of the buckets latencies are judged in, seconds.
    pub window_s: f64,
    /// Violations shorter than this are not reported, seconds.
    pub threshold_s: f64,
    /// Latency targets in milliseconds.
    pub slo_get: f64,
    pub slo_put: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginStats {
    pub origin: DcId,
    pub gets: usize,
    pub puts: usize,
    pub one_phase_gets: usize,
    /// Share of completed GETs that finished in one phase; 0 without GETs.
    pub one_phase_fraction: f64,
}

/// A stretch of time, in seconds, during which targets were missed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationWindow {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadStats {
    pub ops: usize,
    pub gets: usize,
    pub puts: usize,
    pub incomplete: usize,
    pub per_origin: Vec<OriginStats>,
    pub violation_windows: Vec<ViolationWindow>,
}

/// Counts per origin and finds violation windows: a bucket is bad when an
/// operation invoked in it missed its target or never completed, and runs of
/// bad buckets at least `threshold_s` long are reported.
pub fn measure(history: &History, opts: &MeasureOptions) -> WorkloadStats {
    let mut per: BTreeMap<DcId, OriginStats> = BTreeMap::new();
    let mut bad: BTreeMap<i64, ()> = BTreeMap::new();
    let mut stats = WorkloadStats { ops: history.len(), gets: 0, puts: 0, incomplete: 0, per_origin: Vec::new(), violation_windows: Vec::new() };
    let window_ms = opts.window_s * 1000.0;
    for op in &history.ops {
        let s = per.entry(op.origin).or_insert(OriginStats { origin: op.origin, gets: 0, puts: 0, one_phase_gets: 0, one_phase_fraction: 0.0 });
        let slo = match op.kind {
            OpKind::Get => opts.slo_get,
            OpKind::Put => opts.slo_put,
        };
        let missed = match op.latency_ms() {
            Some(l) => l > slo,
            None => {
                stats.incomplete += 1;
                true
            }
        };
        if missed && window_ms > 0.0 {
            bad.insert((op.t_invoke / window_ms).floor() as i64, ());
        }
        if !op.is_complete() {
            continue;
        }
        match op.kind {
            OpKind::Get => {
                stats.gets += 1;
                s.gets += 1;
                s.one_phase_gets += op.one_phase as usize;
            }
            OpKind::Put => {
                stats.puts += 1;
                s.puts += 1;
            }
        }
    }
    for s in per.values_mut() {
        if s.gets > 0 {
            s.one_phase_fraction = s.one_phase_gets as f64 / s.gets as f64;
        }
    }
    stats.per_origin = per.into_values().collect();
    let mut run: Option<(i64, i64)> = None;
    let close = |r: (i64, i64), out: &mut Vec<ViolationWindow>| {
        let (start_s, end_s) = (r.0 as f64 * opts.window_s, (r.1 + 1) as f64 * opts.window_s);
        if end_s - start_s >= opts.threshold_s {
            out.push(ViolationWindow { start_s, end_s });
        }
    };
    for &b in bad.keys() {
        run = match run {
            Some((a, e)) if b == e + 1 => Some((a, b)),
            Some(r) => {
                close(r, &mut stats.violation_windows);
                Some((b, b))
            }
            None => Some((b, b)),
        };
    }
    if let Some(r) = run {
        close(r, &mut stats.violation_windows);
    }
    stats
}

/// One-phase read probability for a client group under sequential operations.
///
/// A read finishes in one phase when every operation since the group's last
/// one was a read from elsewhere. With `share` the group's fraction of requests
/// that is `share * sum_i ((1 - share) * read_ratio)^i`.
pub fn predicted_one_phase_fraction(share: f64, read_ratio: f64) -> f64 {
    share / (1.0 - (1.0 - share) * read_ratio)
}
