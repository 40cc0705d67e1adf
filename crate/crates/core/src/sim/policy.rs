use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-product shipping rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Raise the fast position to `s_fast`, then the full position to
    /// `s_fast + delta`.
    DualIndex { s_fast: i64, delta: i64 },
    /// Base-stock on the fast mode only.
    FastOnly { s_fast: i64 },
    /// Base-stock on the slow mode only (the `s_fast → −∞` limit).
    SlowOnly { s_slow: i64 },
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Policy::DualIndex { delta, .. } if delta < 0 => {
                Err(Error::param("delta", format!("must be >= 0, got {delta}")))
            }
            _ => Ok(()),
        }
    }

    /// Fast base-stock level, `None` for slow-only.
    pub fn fast_level(&self) -> Option<i64> {
        match *self {
            Policy::DualIndex { s_fast, .. } | Policy::FastOnly { s_fast } => Some(s_fast),
            Policy::SlowOnly { .. } => None,
        }
    }

    /// Slow (full-horizon) base-stock level, `None` for fast-only.
    pub fn slow_level(&self) -> Option<i64> {
        match *self {
            Policy::DualIndex { s_fast, delta } => Some(s_fast + delta),
            Policy::SlowOnly { s_slow } => Some(s_slow),
            Policy::FastOnly { .. } => None,
        }
    }

    pub fn delta(&self) -> Option<i64> {
        match *self {
            Policy::DualIndex { delta, .. } => Some(delta),
            _ => None,
        }
    }
}
