use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::ids::{DcId, Key};
use crate::value::ValueId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OpKind {
    Get,
    Put,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Get => "GET",
            OpKind::Put => "PUT",
        })
    }
}

impl std::str::FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GET" => Ok(OpKind::Get),
            "PUT" => Ok(OpKind::Put),
            other => Err(format!("unknown op kind `{other}`")),
        }
    }
}

/// One client operation as observed at its origin. Times are simulated milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpRecord {
    pub op_id: u64,
    pub kind: OpKind,
    pub key: Key,
    pub origin: DcId,
    pub t_invoke: f64,
    /// `None` for operations that never completed.
    pub t_respond: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_written: Option<ValueId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_read: Option<ValueId>,
    /// Epoch of the configuration the operation completed in.
    pub epoch: Option<u64>,
    /// Epoch of the configuration the operation was first attempted in.
    #[serde(default)]
    pub epoch_started: u64,
    #[serde(default)]
    pub one_phase: bool,
    /// Times the operation was restarted because of a reconfiguration.
    #[serde(default)]
    pub restarts: u32,
}

impl OpRecord {
    pub fn is_complete(&self) -> bool {
        self.t_respond.is_some()
    }

    pub fn latency_ms(&self) -> Option<f64> {
        self.t_respond.map(|r| r - self.t_invoke)
    }

    /// The value a PUT wrote or a GET returned.
    pub fn value(&self) -> Option<ValueId> {
        match self.kind {
            OpKind::Put => self.value_written,
            OpKind::Get => self.value_read,
        }
    }
}

/// Operations of a run, ordered by invocation time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History {
    pub ops: Vec<OpRecord>,
}

impl History {
    pub fn new(mut ops: Vec<OpRecord>) -> Self {
        ops.sort_by(|a, b| a.t_invoke.total_cmp(&b.t_invoke).then(a.op_id.cmp(&b.op_id)));
        History { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Writes one JSON record per line.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for op in &self.ops {
            serde_json::to_writer(&mut w, op)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Parses line-delimited records; blank lines are skipped.
    pub fn read_jsonl(r: impl BufRead, file: &str) -> Result<Self, CoreError> {
        let mut ops = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let op: OpRecord = serde_json::from_str(&line).map_err(|e| CoreError::Parse {
                file: file.into(),
                message: format!("line {}: {e}", i + 1),
            })?;
            ops.push(op);
        }
        Ok(History::new(ops))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let h = History::new(vec![
            OpRecord {
                op_id: 2,
                kind: OpKind::Get,
                key: Key::new("k"),
                origin: DcId(1),
                t_invoke: 5.0,
                t_respond: Some(9.5),
                value_written: None,
                value_read: Some(ValueId(1)),
                epoch: Some(0),
                epoch_started: 0,
                one_phase: true,
                restarts: 0,
            },
            OpRecord {
                op_id: 1,
                kind: OpKind::Put,
                key: Key::new("k"),
                origin: DcId(0),
                t_invoke: 1.0,
                t_respond: None,
                value_written: Some(ValueId(1)),
                value_read: None,
                epoch: None,
                epoch_started: 0,
                one_phase: false,
                restarts: 0,
            },
        ]);
        assert_eq!(h.ops[0].op_id, 1);
        let text = h.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        let back = History::read_jsonl(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = History::read_jsonl("\n{oops}\n".as_bytes(), "h.jsonl").unwrap_err().to_string();
        assert!(e.contains("h.jsonl") && e.contains("line 2"), "{e}");
    }
}
