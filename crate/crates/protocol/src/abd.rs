//! Replica state of the replication-based protocol.

use geokv_core::{Tag, Value};

/// Highest-tagged value seen by one server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbdRegister {
    pub tag: Tag,
    pub value: Value,
}

impl AbdRegister {
    pub fn new(tag: Tag, value: Value) -> Self {
        AbdRegister { tag, value }
    }

    /// Stores `(tag, value)` if it is newer. Returns whether anything changed.
    pub fn write(&mut self, tag: Tag, value: &Value) -> bool {
        if tag > self.tag {
            self.tag = tag;
            self.value = value.clone();
            true
        } else {
            false
        }
    }

    pub fn stored_bytes(&self) -> f64 {
        self.value.size as f64
    }
}
