use std::time::{Duration, Instant};

use geokv_checker::{check, check_exhaustive, check_with, CheckOptions, IncompletePuts};
use geokv_core::{DcId, History, Key, OpKind, OpRecord, ValueId};
use proptest::prelude::*;

fn record(id: u64, kind: OpKind, inv: f64, resp: Option<f64>, v: u64) -> OpRecord {
    OpRecord {
        op_id: id,
        kind,
        key: Key::new("k"),
        origin: DcId(0),
        t_invoke: inv,
        t_respond: resp,
        value_written: (kind == OpKind::Put).then_some(ValueId(v)),
        value_read: (kind == OpKind::Get).then_some(ValueId(v)),
        epoch: None,
        epoch_started: 0,
        one_phase: false,
        restarts: 0,
    }
}

/// Raw op description: (is_put, invoke, duration, complete, read choice).
type RawOp = (bool, u8, u8, bool, u8);

/// Arbitrary histories: reads pick any written value or the initial one.
fn arbitrary(raw: &[RawOp]) -> History {
    let writes = raw.iter().filter(|r| r.0).count() as u64;
    let mut next_value = 0;
    let ops = raw
        .iter()
        .enumerate()
        .map(|(i, &(is_put, inv, dur, complete, pick))| {
            let inv = inv as f64;
            let resp = complete.then_some(inv + 1.0 + dur as f64);
            if is_put {
                next_value += 1;
                record(i as u64, OpKind::Put, inv, resp, next_value)
            } else {
                record(i as u64, OpKind::Get, inv, resp, pick as u64 % (writes + 1))
            }
        })
        .collect();
    History::new(ops)
}

/// Histories produced by a sequential register with each op's effect at a
/// point inside its interval; optionally one read is corrupted afterwards.
fn from_points(raw: &[(bool, u16, u8, u8)], corrupt: Option<(usize, u8)>) -> History {
    let mut pts: Vec<(usize, u16)> = raw.iter().enumerate().map(|(i, r)| (i, r.1)).collect();
    pts.sort_by_key(|&(i, p)| (p, i));
    let mut current = 0;
    let mut value = vec![0u64; raw.len()];
    let mut next = 0;
    for &(i, _) in &pts {
        if raw[i].0 {
            next += 1;
            current = next;
        }
        value[i] = current;
    }
    let mut ops: Vec<OpRecord> = raw
        .iter()
        .enumerate()
        .map(|(i, &(is_put, p, before, after))| {
            let inv = p as f64 - before as f64 - 0.5;
            let resp = Some(p as f64 + after as f64 + 0.5);
            record(i as u64, if is_put { OpKind::Put } else { OpKind::Get }, inv, resp, value[i])
        })
        .collect();
    if let Some((idx, v)) = corrupt {
        let reads: Vec<usize> = (0..ops.len()).filter(|&i| ops[i].kind == OpKind::Get).collect();
        if !reads.is_empty() {
            let r = reads[idx % reads.len()];
            ops[r].value_read = Some(ValueId(v as u64 % (next + 1)));
        }
    }
    History::new(ops)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn agrees_with_search_on_arbitrary_histories(
        raw in prop::collection::vec((any::<bool>(), 0u8..20, 0u8..8, prop::bool::weighted(0.85), any::<u8>()), 1..=10),
        discard in any::<bool>(),
    ) {
        let h = arbitrary(&raw);
        let opts = CheckOptions {
            incomplete_puts: if discard { IncompletePuts::Discard } else { IncompletePuts::PossiblyEffective },
        };
        let fast = check_with(&h, opts).unwrap();
        let slow = check_exhaustive(&h, opts).unwrap();
        prop_assert_eq!(fast.linearizable, slow);
    }

    #[test]
    fn agrees_with_search_on_near_linearizable_histories(
        raw in prop::collection::vec((any::<bool>(), 0u16..40, 0u8..10, 0u8..10), 1..=10),
        corrupt in prop::option::of((any::<usize>(), any::<u8>())),
    ) {
        let h = from_points(&raw, corrupt);
        let fast = check(&h).unwrap();
        let slow = check_exhaustive(&h, CheckOptions::default()).unwrap();
        prop_assert_eq!(fast.linearizable, slow);
        if corrupt.is_none() {
            prop_assert!(fast.linearizable);
        }
    }

    #[test]
    fn witness_is_a_legal_order(raw in prop::collection::vec((any::<bool>(), 0u16..60, 0u8..10, 0u8..10), 1..=30)) {
        let h = from_points(&raw, None);
        let v = check(&h).unwrap();
        prop_assert!(v.linearizable);
        prop_assert_eq!(v.witness.len(), h.len());
        let pos: std::collections::HashMap<u64, usize> = v.witness.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        // Real-time order respected.
        for a in &h.ops {
            for b in &h.ops {
                if a.t_respond.unwrap() < b.t_invoke {
                    prop_assert!(pos[&a.op_id] < pos[&b.op_id]);
                }
            }
        }
        // Register semantics along the witness.
        let by_id: std::collections::HashMap<u64, &OpRecord> = h.ops.iter().map(|o| (o.op_id, o)).collect();
        let mut current = ValueId(0);
        for id in &v.witness {
            let o = by_id[id];
            match o.kind {
                OpKind::Put => current = o.value_written.unwrap(),
                OpKind::Get => prop_assert_eq!(o.value_read.unwrap(), current),
            }
        }
    }

    #[test]
    fn violations_are_reported_with_ops(raw in prop::collection::vec((any::<bool>(), 0u8..20, 0u8..8, Just(true), any::<u8>()), 2..=10)) {
        let h = arbitrary(&raw);
        let v = check(&h).unwrap();
        if !v.linearizable {
            prop_assert!(!v.violation.is_empty());
            // The reported ops plus the writers they read from are already non-linearizable.
            let mut keep: std::collections::BTreeSet<u64> = v.violation.iter().copied().collect();
            for o in &h.ops {
                if o.kind == OpKind::Get && keep.contains(&o.op_id) {
                    for w in &h.ops {
                        if w.kind == OpKind::Put && w.value_written == o.value_read {
                            keep.insert(w.op_id);
                        }
                    }
                }
            }
            let sub = History::new(h.ops.iter().filter(|o| keep.contains(&o.op_id)).cloned().collect());
            prop_assert!(!check_exhaustive(&sub, CheckOptions::default()).unwrap());
        }
    }
}

#[test]
fn large_concurrent_history_is_fast() {
    // 10^4 ops; each lasts 200 time units and one starts per unit, so about 200 overlap.
    let mut rng = 0x2545_f491_4f6c_dd1du64;
    let mut step = || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        rng
    };
    let n = 10_000u64;
    let mut points: Vec<(f64, u64)> = (0..n).map(|i| (i as f64 + (step() % 200) as f64, i)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut current = 0;
    let mut next = 0;
    let mut ops = Vec::new();
    for (_, i) in points {
        let inv = i as f64;
        let resp = inv + 200.0;
        if step() % 2 == 0 {
            next += 1;
            current = next;
            ops.push(record(i, OpKind::Put, inv, Some(resp), current));
        } else {
            ops.push(record(i, OpKind::Get, inv, Some(resp), current));
        }
    }
    let h = History::new(ops);
    let t = Instant::now();
    let v = check(&h).unwrap();
    assert!(v.linearizable);
    assert!(t.elapsed() < Duration::from_secs(60));
}
