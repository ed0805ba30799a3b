use std::collections::HashSet;

use geokv_core::{History, OpKind, OpRecord, ValueId};

use crate::{by_key, relevant, CheckError, CheckOptions};

/// Largest per-key history the search accepts.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Decides linearizability by searching sequential orders directly.
///
/// Exponential; meant as an oracle for small histories (at most
/// [`EXHAUSTIVE_LIMIT`] relevant operations per key).
pub fn check_exhaustive(history: &History, opts: CheckOptions) -> Result<bool, CheckError> {
    for (_, ops) in by_key(history) {
        let ops = relevant(&ops, opts);
        assert!(ops.len() <= EXHAUSTIVE_LIMIT, "history too large for exhaustive search");
        for op in &ops {
            if op.kind == OpKind::Put {
                crate::written(op)?;
            }
        }
        let mut failed = HashSet::new();
        if !search(&ops, 0, ValueId::INITIAL, &mut failed) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn search(ops: &[&OpRecord], done: u32, current: ValueId, failed: &mut HashSet<(u32, ValueId)>) -> bool {
    let pending = |i: usize| done & (1 << i) == 0;
    if (0..ops.len()).all(|i| !pending(i) || !ops[i].is_complete()) {
        return true;
    }
    if failed.contains(&(done, current)) {
        return false;
    }
    for (i, op) in ops.iter().enumerate() {
        if !pending(i) {
            continue;
        }
        // Nothing still pending may have finished before this op started.
        let blocked = ops
            .iter()
            .enumerate()
            .any(|(j, p)| j != i && pending(j) && p.t_respond.is_some_and(|r| r < op.t_invoke));
        if blocked {
            continue;
        }
        let next = match op.kind {
            OpKind::Put => op.value_written.expect("checked"),
            OpKind::Get => {
                if op.value_read.unwrap_or(ValueId::INITIAL) != current {
                    continue;
                }
                current
            }
        };
        if search(ops, done | (1 << i), next, failed) {
            return true;
        }
    }
    failed.insert((done, current));
    false
}
