//! CSV traces: `t_offset_seconds,kind,key,size_bytes[,origin]`.

use std::io::{Read, Write};

use geokv_core::{DcId, Key, OpKind};

use crate::{number_values, TimedOp, WorkloadError};

pub const TRACE_HEADER: [&str; 5] = ["t_offset_seconds", "kind", "key", "size_bytes", "origin"];

/// Writes `ops` with an origin column, so reading them back gives the same stream.
pub fn write_trace(ops: &[TimedOp], w: impl Write) -> Result<(), WorkloadError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for op in ops {
        out.write_record([
            format!("{:?}", op.t),
            op.kind.to_string(),
            op.key.to_string(),
            op.size.to_string(),
            op.origin.0.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a trace. The header row is optional; a missing origin column means DC 0.
/// Offsets must be non-decreasing. PUT values are numbered in file order.
pub fn read_trace(r: impl Read, file: &str) -> Result<Vec<TimedOp>, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(r);
    let mut ops = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| WorkloadError::Trace { file: file.into(), line, message };
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.get(0) == Some(TRACE_HEADER[0]) {
            continue;
        }
        if rec.len() != 4 && rec.len() != 5 {
            return Err(bad(format!("expected 4 or 5 fields, got {}", rec.len())));
        }
        let t: f64 = rec[0].parse().map_err(|_| bad(format!("bad offset `{}`", &rec[0])))?;
        if !t.is_finite() || t < 0.0 {
            return Err(bad(format!("offset `{}` must be finite and non-negative", &rec[0])));
        }
        if t < last {
            return Err(bad(format!("offset {t} is earlier than the previous line")));
        }
        last = t;
        let kind: OpKind = rec[1].parse().map_err(bad)?;
        if rec[2].is_empty() {
            return Err(bad("empty key".into()));
        }
        let size: u64 = rec[3].parse().map_err(|_| bad(format!("bad size `{}`", &rec[3])))?;
        let origin = match rec.get(4) {
            Some(s) => DcId(s.parse().map_err(|_| bad(format!("bad origin `{s}`")))?),
            None => DcId(0),
        };
        ops.push(TimedOp { t, kind, key: Key::new(&rec[2]), origin, size, value: None });
    }
    number_values(&mut ops);
    Ok(ops)
}
