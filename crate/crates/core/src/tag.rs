use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of a writer. Zero is reserved for the initial value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u64);

/// Logical timestamp of a version: compared by `seq`, ties broken by `client`.
///
/// The derived ordering is lexicographic over the field order, which is
/// exactly the order the protocols need.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub seq: u64,
    pub client: ClientId,
}

impl Tag {
    /// Tag of the value every key holds before its first write.
    pub const INITIAL: Tag = Tag { seq: 0, client: ClientId(0) };

    pub fn new(seq: u64, client: ClientId) -> Self {
        Tag { seq, client }
    }

    /// The tag a writer picks after observing `self` as the highest tag.
    pub fn successor(self, client: ClientId) -> Tag {
        Tag { seq: self.seq + 1, client }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.seq, self.client.0)
    }
}
