//! Linearizability checking for read/write registers whose written values are unique.
//!
//! Every write and the reads that returned its value form a *cluster*. In any
//! legal sequential order a cluster is contiguous (the write, then its reads),
//! so a history is linearizable exactly when
//!
//! * no read finishes before the write it observed starts, and
//! * the clusters can be ordered so that whenever an operation of `A` finishes
//!   before an operation of `B` starts, `A` comes first.
//!
//! The second condition is acyclicity of a graph with an edge `A -> B` iff
//! `min_resp(A) < max_inv(B)`. [`check`] finds a topological order in
//! `O(c log c)` for `c` clusters; [`check_exhaustive`] is a brute-force search
//! used to cross-check it on small histories.

mod cluster;
mod exhaustive;

use std::collections::BTreeMap;

use geokv_core::{History, Key, OpKind, OpRecord, ValueId};
use serde::Serialize;
use thiserror::Error;

pub use exhaustive::check_exhaustive;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("value {value:?} of key `{key}` is written by more than one PUT (ops {first} and {second})")]
    DuplicateWrite { key: String, value: ValueId, first: u64, second: u64 },
    #[error("op {0} is a PUT without a value")]
    MissingValue(u64),
}

/// How incomplete PUTs are treated. Incomplete GETs are always dropped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IncompletePuts {
    /// The write may or may not have taken effect.
    #[default]
    PossiblyEffective,
    /// Pretend the write never happened.
    Discard,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    pub incomplete_puts: IncompletePuts,
}

/// Why a history is not linearizable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// A GET returned a value nobody wrote.
    UnknownValue,
    /// A GET finished before the PUT of its value began.
    ReadBeforeWrite,
    /// Real-time order forces two groups of operations before each other.
    OrderCycle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub linearizable: bool,
    /// A legal order of op ids; operations of one key are contiguous.
    pub witness: Vec<u64>,
    /// Operations that cannot be ordered together.
    pub violation: Vec<u64>,
    pub key: Option<Key>,
    pub reason: Option<Reason>,
}

impl Verdict {
    fn ok(witness: Vec<u64>) -> Self {
        Verdict { linearizable: true, witness, violation: Vec::new(), key: None, reason: None }
    }

    fn bad(key: &Key, reason: Reason, mut violation: Vec<u64>) -> Self {
        violation.sort_unstable();
        violation.dedup();
        Verdict { linearizable: false, witness: Vec::new(), violation, key: Some(key.clone()), reason: Some(reason) }
    }
}

/// Decides linearizability of `history` key by key.
pub fn check(history: &History) -> Result<Verdict, CheckError> {
    check_with(history, CheckOptions::default())
}

pub fn check_with(history: &History, opts: CheckOptions) -> Result<Verdict, CheckError> {
    let mut witness = Vec::new();
    for (key, ops) in by_key(history) {
        let v = cluster::check_key(&key, &ops, opts)?;
        if !v.linearizable {
            return Ok(v);
        }
        witness.extend(v.witness);
    }
    Ok(Verdict::ok(witness))
}

fn by_key(history: &History) -> BTreeMap<Key, Vec<&OpRecord>> {
    let mut out: BTreeMap<Key, Vec<&OpRecord>> = BTreeMap::new();
    for op in &history.ops {
        out.entry(op.key.clone()).or_default().push(op);
    }
    out
}

/// Operations that take part in the check, after the incomplete-op policy.
fn relevant<'a>(ops: &[&'a OpRecord], opts: CheckOptions) -> Vec<&'a OpRecord> {
    ops.iter()
        .copied()
        .filter(|op| match op.kind {
            OpKind::Get => op.is_complete(),
            OpKind::Put => op.is_complete() || opts.incomplete_puts == IncompletePuts::PossiblyEffective,
        })
        .collect()
}

fn written(op: &OpRecord) -> Result<ValueId, CheckError> {
    op.value_written.ok_or(CheckError::MissingValue(op.op_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use geokv_core::DcId;

    pub(crate) fn op(id: u64, kind: OpKind, inv: f64, resp: Option<f64>, v: u64) -> OpRecord {
        OpRecord {
            op_id: id,
            kind,
            key: Key::new("k"),
            origin: DcId(0),
            t_invoke: inv,
            t_respond: resp,
            value_written: (kind == OpKind::Put).then_some(ValueId(v)),
            value_read: (kind == OpKind::Get).then_some(ValueId(v)),
            epoch: Some(0),
            epoch_started: 0,
            one_phase: false,
            restarts: 0,
        }
    }

    use OpKind::{Get, Put};

    #[test]
    fn write_then_read() {
        let h = History::new(vec![op(1, Put, 0.0, Some(1.0), 1), op(2, Get, 2.0, Some(3.0), 1)]);
        let v = check(&h).unwrap();
        assert!(v.linearizable);
        assert_eq!(v.witness, vec![1, 2]);
    }

    #[test]
    fn new_old_inversion_is_caught() {
        let h = History::new(vec![
            op(1, Put, 0.0, Some(1.0), 1),
            op(2, Put, 2.0, Some(10.0), 2),
            op(3, Get, 3.0, Some(4.0), 2),
            op(4, Get, 5.0, Some(6.0), 1),
        ]);
        let v = check(&h).unwrap();
        assert!(!v.linearizable);
        assert_eq!(v.reason, Some(Reason::OrderCycle));
        assert!(v.violation.contains(&3) && v.violation.contains(&4));
    }

    #[test]
    fn initial_value_after_write_is_stale() {
        let h = History::new(vec![op(1, Put, 0.0, Some(1.0), 1), op(2, Get, 2.0, Some(3.0), 0)]);
        assert!(!check(&h).unwrap().linearizable);
        let h = History::new(vec![op(1, Put, 0.0, Some(5.0), 1), op(2, Get, 2.0, Some(3.0), 0)]);
        assert!(check(&h).unwrap().linearizable);
    }

    #[test]
    fn unknown_and_early_reads() {
        let h = History::new(vec![op(1, Get, 0.0, Some(1.0), 9)]);
        assert_eq!(check(&h).unwrap().reason, Some(Reason::UnknownValue));
        let h = History::new(vec![op(1, Get, 0.0, Some(1.0), 3), op(2, Put, 2.0, Some(3.0), 3)]);
        assert_eq!(check(&h).unwrap().reason, Some(Reason::ReadBeforeWrite));
    }

    #[test]
    fn incomplete_put_modes() {
        let h = History::new(vec![op(1, Put, 0.0, None, 1), op(2, Get, 2.0, Some(3.0), 1)]);
        assert!(check(&h).unwrap().linearizable);
        let discard = CheckOptions { incomplete_puts: IncompletePuts::Discard };
        assert!(!check_with(&h, discard).unwrap().linearizable);
        // An unread incomplete PUT never constrains anything.
        let h = History::new(vec![op(1, Put, 0.0, None, 1), op(2, Get, 2.0, Some(3.0), 0)]);
        assert!(check(&h).unwrap().linearizable);
    }

    #[test]
    fn duplicate_writes_are_rejected() {
        let h = History::new(vec![op(1, Put, 0.0, Some(1.0), 4), op(2, Put, 2.0, Some(3.0), 4)]);
        assert!(matches!(check(&h), Err(CheckError::DuplicateWrite { first: 1, second: 2, .. })));
    }

    #[test]
    fn keys_are_independent() {
        let mut a = op(1, Put, 0.0, Some(1.0), 1);
        a.key = Key::new("a");
        let mut b = op(2, Get, 2.0, Some(3.0), 0);
        b.key = Key::new("b");
        assert!(check(&History::new(vec![a, b])).unwrap().linearizable);
    }
}
