use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::MemberId;

/// Exact identity of a rounded output. Replication is counted by comparing
/// these integer ids, never the floating-point values they stand for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum CanonicalId {
    /// The fixed answer of a trivial fast path.
    Constant,
    /// Tile index of a scaled-partition rounding.
    Member(MemberId),
    /// Per-coordinate grid indices `k` of a certificate rounding.
    Grid(Vec<i64>),
    /// Concatenated per-round indices of an adaptive learner.
    Transcript(Vec<i64>),
}

impl CanonicalId {
    /// Integer payload, empty for [`CanonicalId::Constant`].
    pub fn indices(&self) -> &[i64] {
        match self {
            CanonicalId::Constant => &[],
            CanonicalId::Member(z) => z.as_slice(),
            CanonicalId::Grid(k) | CanonicalId::Transcript(k) => k,
        }
    }
}

impl fmt::Display for CanonicalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            CanonicalId::Constant => return write!(f, "const"),
            CanonicalId::Member(_) => "z",
            CanonicalId::Grid(_) => "k",
            CanonicalId::Transcript(_) => "t",
        };
        write!(f, "{tag}(")?;
        for (n, v) in self.indices().iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}
