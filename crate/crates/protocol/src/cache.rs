use std::collections::{BTreeMap, HashMap};

use geokv_core::{Key, Tag, Value};

/// Least-recently-used map from `(key, tag)` to decoded values.
#[derive(Clone, Debug)]
pub struct ValueCache {
    capacity: usize,
    clock: u64,
    entries: HashMap<(Key, Tag), (Value, u64)>,
    by_use: BTreeMap<u64, (Key, Tag)>,
}

impl ValueCache {
    pub fn new(capacity: usize) -> Self {
        ValueCache { capacity, clock: 0, entries: HashMap::new(), by_use: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&mut self, key: &Key, tag: Tag) -> Option<Value> {
        self.clock += 1;
        let clock = self.clock;
        let (value, used) = self.entries.get_mut(&(key.clone(), tag))?;
        self.by_use.remove(used);
        *used = clock;
        self.by_use.insert(clock, (key.clone(), tag));
        Some(value.clone())
    }

    pub fn insert(&mut self, key: Key, tag: Tag, value: Value) {
        if self.capacity == 0 {
            return;
        }
        self.clock += 1;
        if let Some((_, used)) = self.entries.remove(&(key.clone(), tag)) {
            self.by_use.remove(&used);
        }
        while self.entries.len() >= self.capacity {
            let (_, victim) = self.by_use.pop_first().expect("non-empty cache has a use record");
            self.entries.remove(&victim);
        }
        self.by_use.insert(self.clock, (key.clone(), tag));
        self.entries.insert((key, tag), (value, self.clock));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use geokv_core::{ClientId, ValueId};

    #[test]
    fn evicts_least_recently_used() {
        let mut c = ValueCache::new(2);
        let k = Key::new("k");
        let t = |s| Tag::new(s, ClientId(1));
        let v = |i| Value::new(ValueId(i), 10, 10);
        c.insert(k.clone(), t(1), v(1));
        c.insert(k.clone(), t(2), v(2));
        assert!(c.get(&k, t(1)).is_some());
        c.insert(k.clone(), t(3), v(3));
        assert!(c.get(&k, t(2)).is_none());
        assert!(c.get(&k, t(1)).is_some());
        assert!(c.get(&k, t(3)).is_some());
        assert_eq!(c.len(), 2);
    }
}
