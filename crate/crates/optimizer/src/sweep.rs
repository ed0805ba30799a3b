//! Optimizer decisions across a range of latency targets.

use std::io::Write;

use geokv_core::{Model, Workload};
use serde::Serialize;

use crate::search::{optimize_with, Policy, SearchOptions};
use crate::OptimizerError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub slo_ms: f64,
    pub policy: String,
    pub feasible: bool,
    pub protocol: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub cost: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 7] = ["slo_ms", "policy", "feasible", "protocol", "N", "K", "cost"];

/// `start, start + step, ...` up to and including `end` (within rounding). Empty if `start > end`.
pub fn slo_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || start > end {
        return Vec::new();
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

/// One row per `(slo, policy)`; both targets are set to `slo`.
pub fn sweep(
    spec: &Workload,
    model: &Model,
    slos: &[f64],
    policies: &[Policy],
    opts: &SearchOptions,
) -> Result<Vec<SweepRow>, OptimizerError> {
    let mut rows = Vec::new();
    for &slo in slos {
        let mut s = spec.clone();
        s.slo_get = slo;
        s.slo_put = slo;
        for policy in policies {
            let d = optimize_with(&s, model, policy, opts)?;
            let c = d.configuration.as_ref().filter(|_| d.feasible);
            rows.push(SweepRow {
                slo_ms: slo,
                policy: policy.to_string(),
                feasible: d.feasible,
                protocol: c.map(|c| c.protocol.to_string()),
                n: c.map(|c| c.n()),
                k: c.map(|c| c.k),
                cost: d.cost().filter(|_| d.feasible),
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV; the header is written even when there are no rows.
pub fn write_csv(rows: &[SweepRow], w: impl Write) -> Result<(), csv::Error> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
