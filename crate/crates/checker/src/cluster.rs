use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use geokv_core::{Key, OpKind, OpRecord, ValueId};

use crate::{relevant, written, CheckError, CheckOptions, Reason, Verdict};

/// Time with a total order; `-inf` stands for the virtual initial write.
#[derive(Clone, Copy, Debug, PartialEq)]
struct T(f64);

impl Eq for T {}

impl PartialOrd for T {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for T {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Cluster<'a> {
    write: Option<&'a OpRecord>,
    reads: Vec<&'a OpRecord>,
    /// Earliest response in the cluster and the op that has it.
    min_resp: (T, Option<u64>),
    /// Latest invocation in the cluster and the op that has it.
    max_inv: (T, Option<u64>),
}

fn resp(op: &OpRecord) -> f64 {
    op.t_respond.unwrap_or(f64::INFINITY)
}

pub(crate) fn check_key(key: &Key, ops: &[&OpRecord], opts: CheckOptions) -> Result<Verdict, CheckError> {
    let ops = relevant(ops, opts);
    let mut writer: BTreeMap<ValueId, &OpRecord> = BTreeMap::new();
    for op in ops.iter().filter(|op| op.kind == OpKind::Put) {
        let v = written(op)?;
        if v == ValueId::INITIAL {
            return Err(CheckError::DuplicateWrite { key: key.0.clone(), value: v, first: 0, second: op.op_id });
        }
        if let Some(prev) = writer.insert(v, op) {
            return Err(CheckError::DuplicateWrite { key: key.0.clone(), value: v, first: prev.op_id, second: op.op_id });
        }
    }

    let mut reads: BTreeMap<ValueId, Vec<&OpRecord>> = BTreeMap::new();
    for op in ops.iter().filter(|op| op.kind == OpKind::Get) {
        let v = op.value_read.unwrap_or(ValueId::INITIAL);
        if v != ValueId::INITIAL && !writer.contains_key(&v) {
            return Ok(Verdict::bad(key, Reason::UnknownValue, vec![op.op_id]));
        }
        if let Some(w) = writer.get(&v) {
            if resp(op) < w.t_invoke {
                return Ok(Verdict::bad(key, Reason::ReadBeforeWrite, vec![op.op_id, w.op_id]));
            }
        }
        reads.entry(v).or_default().push(op);
    }

    let mut clusters: Vec<Cluster> = Vec::new();
    let initial_reads = reads.remove(&ValueId::INITIAL).unwrap_or_default();
    if !initial_reads.is_empty() {
        clusters.push(build(None, initial_reads));
    }
    for (v, w) in &writer {
        let rs = reads.remove(v).unwrap_or_default();
        if !w.is_complete() && rs.is_empty() {
            // Never observed; it can always be placed last.
            continue;
        }
        clusters.push(build(Some(w), rs));
    }

    let mut by_x: BTreeSet<(T, usize)> = clusters.iter().enumerate().map(|(i, c)| (c.min_resp.0, i)).collect();
    let mut by_y: BTreeSet<(T, usize)> = clusters.iter().enumerate().map(|(i, c)| (c.max_inv.0, i)).collect();
    let mut order = Vec::with_capacity(clusters.len());
    while let Some(&(x1, a1)) = by_x.first() {
        let x2 = by_x.iter().nth(1).map(|&(x, _)| x).unwrap_or(T(f64::INFINITY));
        // A cluster B has no incoming edge iff every other cluster's x is >= y(B).
        let source = if clusters[a1].max_inv.0 <= x2 {
            Some(a1)
        } else {
            by_y.iter().find(|&&(_, i)| i != a1).filter(|&&(y, _)| y <= x1).map(|&(_, i)| i)
        };
        let Some(s) = source else {
            return Ok(Verdict::bad(key, Reason::OrderCycle, cycle(&clusters, &by_x)));
        };
        by_x.remove(&(clusters[s].min_resp.0, s));
        by_y.remove(&(clusters[s].max_inv.0, s));
        order.push(s);
    }

    let mut witness = Vec::with_capacity(ops.len());
    for i in order {
        let c = &clusters[i];
        witness.extend(c.write.map(|w| w.op_id));
        let mut rs = c.reads.clone();
        rs.sort_by(|a, b| T(resp(a)).cmp(&T(resp(b))).then(a.op_id.cmp(&b.op_id)));
        witness.extend(rs.iter().map(|r| r.op_id));
    }
    Ok(Verdict::ok(witness))
}

fn build<'a>(write: Option<&'a OpRecord>, reads: Vec<&'a OpRecord>) -> Cluster<'a> {
    let virtual_write = (T(f64::NEG_INFINITY), None);
    let mut min_resp = write.map_or(virtual_write, |w| (T(resp(w)), Some(w.op_id)));
    let mut max_inv = write.map_or(virtual_write, |w| (T(w.t_invoke), Some(w.op_id)));
    for r in &reads {
        if T(resp(r)) < min_resp.0 {
            min_resp = (T(resp(r)), Some(r.op_id));
        }
        if T(r.t_invoke) > max_inv.0 {
            max_inv = (T(r.t_invoke), Some(r.op_id));
        }
    }
    Cluster { write, reads, min_resp, max_inv }
}

/// Walks predecessors among the remaining clusters until one repeats and
/// returns the operations that force each edge of the cycle.
fn cycle(clusters: &[Cluster], remaining: &BTreeSet<(T, usize)>) -> Vec<u64> {
    let &(_, start) = remaining.first().expect("cycle needs clusters");
    let mut path = vec![start];
    let mut seen = BTreeMap::from([(start, 0usize)]);
    loop {
        let b = *path.last().expect("non-empty");
        // Some other cluster has x < y(b); the smallest-x one is a predecessor.
        let &(_, a) = remaining.iter().find(|&&(_, i)| i != b).expect("no source means a predecessor exists");
        if let Some(&pos) = seen.get(&a) {
            let mut cyc: Vec<usize> = path[pos..].to_vec();
            cyc.push(a);
            let mut ops = Vec::new();
            // path holds successors first: cyc[j+1] -> cyc[j].
            for pair in cyc.windows(2) {
                let (succ, pred) = (pair[0], pair[1]);
                ops.extend(clusters[pred].min_resp.1);
                ops.extend(clusters[succ].max_inv.1);
            }
            return ops;
        }
        seen.insert(a, path.len());
        path.push(a);
    }
}
