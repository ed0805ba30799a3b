use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Identifier embedded in every written value. `ValueId(0)` is the initial value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueId(pub u64);

impl ValueId {
    pub const INITIAL: ValueId = ValueId(0);
}

/// A stored object.
///
/// `size` is the logical object size used for byte accounting; `bytes` is the
/// physical content, which starts with the little-endian id and may be
/// truncated to keep simulations cheap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Value {
    pub id: ValueId,
    pub size: u64,
    pub bytes: Arc<[u8]>,
}

impl Value {
    /// Builds a value whose physical content is `min(size, cap)` bytes, never fewer than 8.
    pub fn new(id: ValueId, size: u64, cap: usize) -> Self {
        let len = (size.min(cap as u64) as usize).max(8);
        let mut bytes = Vec::with_capacity(len);
        bytes.extend_from_slice(&id.0.to_le_bytes());
        let mut x = id.0.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        while bytes.len() < len {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            bytes.push(x as u8);
        }
        Value { id, size, bytes: bytes.into() }
    }

    /// Rebuilds a value from decoded content. Returns `None` if the content is too short.
    pub fn from_bytes(bytes: Vec<u8>, size: u64) -> Option<Self> {
        let head: [u8; 8] = bytes.get(..8)?.try_into().ok()?;
        Some(Value { id: ValueId(u64::from_le_bytes(head)), size, bytes: bytes.into() })
    }
}
