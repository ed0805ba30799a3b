//! Replica state and coding helpers of the erasure-coded protocol.

use std::collections::BTreeMap;
use std::sync::Arc;

use geokv_codec::{rs_decode, rs_encode, Chunk};
use geokv_core::{Tag, Value};

use crate::effect::Nanos;
use crate::message::Fragment;

/// One `(tag, chunk, label)` entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub frag: Option<Fragment>,
    pub fin: bool,
    /// Time of the last change, used by garbage collection.
    pub stamp: Nanos,
}

/// All triples held by one server for one key.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CasRegister {
    pub triples: BTreeMap<Tag, Triple>,
    /// Time of the last sweep.
    last_gc: Nanos,
}

impl CasRegister {
    /// Register holding `frag` finalized under `tag`.
    pub fn with_finalized(tag: Tag, frag: Option<Fragment>, now: Nanos) -> Self {
        let mut triples = BTreeMap::new();
        triples.insert(tag, Triple { frag, fin: true, stamp: now });
        CasRegister { triples, last_gc: now }
    }

    /// Highest tag labelled `fin`, or the initial tag.
    pub fn highest_fin(&self) -> Tag {
        self.triples.iter().rev().find(|(_, t)| t.fin).map(|(&tag, _)| tag).unwrap_or(Tag::INITIAL)
    }

    /// Stores a chunk labelled `pre`, or fills the chunk of an existing entry.
    pub fn pre_write(&mut self, tag: Tag, frag: Fragment, now: Nanos) {
        let entry = self.triples.entry(tag).or_insert(Triple { frag: None, fin: false, stamp: now });
        if entry.frag.is_none() {
            entry.frag = Some(frag);
            entry.stamp = now;
        }
    }

    /// Labels `tag` as finalized, adding a chunkless entry if it is unknown.
    pub fn finalize(&mut self, tag: Tag, now: Nanos) {
        let entry = self.triples.entry(tag).or_insert(Triple { frag: None, fin: false, stamp: now });
        if !entry.fin {
            entry.fin = true;
            entry.stamp = now;
        }
    }

    /// Finalizes `tag` and returns its chunk if this server holds one.
    pub fn finalize_read(&mut self, tag: Tag, now: Nanos) -> Option<Fragment> {
        self.finalize(tag, now);
        self.triples[&tag].frag.clone()
    }

    /// Drops entries last touched before `now - threshold` whose tag is below the
    /// highest finalized tag. Sweeps at most once per `threshold / 8`, so an
    /// entry may outlive the threshold by that much.
    pub fn gc(&mut self, now: Nanos, threshold: Nanos) {
        if now.saturating_sub(self.last_gc) < threshold / 8 {
            return;
        }
        self.last_gc = now;
        let top = self.highest_fin();
        let cutoff = now.saturating_sub(threshold);
        self.triples.retain(|&tag, t| tag >= top || t.stamp >= cutoff);
    }

    pub fn stored_bytes(&self) -> f64 {
        self.triples.values().filter_map(|t| t.frag.as_ref()).map(Fragment::size).sum()
    }
}

/// Splits `value` into `n` fragments with any `k` sufficient to rebuild it.
pub fn encode(value: &Value, n: usize, k: usize) -> Vec<Fragment> {
    let chunks = rs_encode(&value.bytes, n, k).expect("configuration has valid code parameters");
    chunks
        .into_iter()
        .map(|c| Fragment {
            index: c.index,
            data: Arc::from(c.data),
            value_size: value.size,
            byte_len: value.bytes.len(),
            k,
        })
        .collect()
}

/// Rebuilds a value from at least `k` distinct fragments.
pub fn decode<'a>(frags: impl IntoIterator<Item = &'a Fragment>, n: usize, k: usize) -> Option<Value> {
    let frags: Vec<&Fragment> = frags.into_iter().collect();
    let first = frags.first()?;
    let chunks: Vec<Chunk> = frags.iter().map(|f| Chunk { index: f.index, data: f.data.to_vec() }).collect();
    let bytes = rs_decode(&chunks, n, k, first.byte_len).ok()?;
    Value::from_bytes(bytes, first.value_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geokv_core::{ClientId, ValueId};

    fn frag(i: usize) -> Fragment {
        Fragment { index: i, data: Arc::from(vec![i as u8; 4]), value_size: 1000, byte_len: 8, k: 2 }
    }

    fn t(seq: u64) -> Tag {
        Tag::new(seq, ClientId(1))
    }

    #[test]
    fn query_ignores_pre_entries() {
        let mut r = CasRegister::with_finalized(t(1), Some(frag(0)), 0);
        r.pre_write(t(3), frag(0), 5);
        assert_eq!(r.highest_fin(), t(1));
        r.finalize(t(3), 6);
        assert_eq!(r.highest_fin(), t(3));
    }

    #[test]
    fn finalize_read_upgrades_pre() {
        let mut r = CasRegister::default();
        r.pre_write(t(2), frag(1), 1);
        let got = r.finalize_read(t(2), 2);
        assert_eq!(got, Some(frag(1)));
        assert!(r.triples[&t(2)].fin);
    }

    #[test]
    fn finalize_of_unknown_tag_adds_chunkless_entry() {
        let mut r = CasRegister::default();
        assert_eq!(r.finalize_read(t(4), 1), None);
        let e = &r.triples[&t(4)];
        assert!(e.fin && e.frag.is_none());
        // A late pre-write fills in the chunk without dropping the label.
        r.pre_write(t(4), frag(0), 2);
        assert!(r.triples[&t(4)].fin);
        assert_eq!(r.triples[&t(4)].frag, Some(frag(0)));
    }

    #[test]
    fn duplicate_pre_write_is_idempotent() {
        let mut r = CasRegister::default();
        r.pre_write(t(1), frag(0), 1);
        let snap = r.clone();
        r.pre_write(t(1), frag(0), 9);
        assert_eq!(r, snap);
    }

    #[test]
    fn gc_keeps_recent_and_top_entries() {
        let mut r = CasRegister::default();
        r.pre_write(t(1), frag(0), 0);
        r.finalize(t(1), 0);
        r.pre_write(t(2), frag(0), 10);
        r.finalize(t(2), 10);
        r.pre_write(t(3), frag(0), 10);
        r.pre_write(t(0), frag(0), 95);
        r.gc(100, 50);
        // t1: old and below top fin -> gone. t2: top fin stays. t3: above top stays.
        // t0: below top but recent -> stays.
        let tags: Vec<Tag> = r.triples.keys().copied().collect();
        assert_eq!(tags, vec![t(0), t(2), t(3)]);
        r.gc(1000, 50);
        let tags: Vec<Tag> = r.triples.keys().copied().collect();
        assert_eq!(tags, vec![t(2), t(3)]);
    }

    #[test]
    fn encode_decode_roundtrip() {
        let v = Value::new(ValueId(42), 5000, 256);
        let frags = encode(&v, 5, 3);
        assert_eq!(frags.len(), 5);
        let back = decode(frags.iter().skip(2), 5, 3).unwrap();
        assert_eq!(back, v);
        assert!((frags[0].size() - 5000.0 / 3.0).abs() < 1e-9);
        assert!(decode(frags.iter().take(2), 5, 3).is_none());
    }
}
