//! Segment algebra carried through the prefix scans.
//!
//! An [`AggState`] summarises a run of same-group tuples. Two adjacent runs
//! combine associatively, which is what lets a Kogge–Stone network compute
//! every running aggregate of a batch in `log2 P` stages.

use crate::error::ConfigError;
use crate::tuple::{Operator, Tuple, Widths};

/// Summary of a contiguous run of tuples of one group.
///
/// `sum` wraps at 64 bits in the carrier and is reduced to the key width on
/// finalisation, which is the same residue as summing at the key width
/// throughout. `cnt` and `dc` are 32-bit counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggState {
    pub group: u64,
    pub sum: u64,
    pub cnt: u32,
    pub dc: u32,
    pub seg_min: u64,
    pub seg_max: u64,
}

impl AggState {
    /// Lifts a single tuple into a one-element segment.
    pub fn unit(t: Tuple) -> Self {
        AggState { group: t.group, sum: t.key, cnt: 1, dc: 1, seg_min: t.key, seg_max: t.key }
    }

    /// Appends `right` after `self`.
    ///
    /// The distinct count assumes keys ascend across the boundary: the two
    /// runs overlap in at most one key, the left maximum, and only if the
    /// right minimum equals it. Min, max, sum and count are exact for any key
    /// order.
    pub fn combine(&self, right: &AggState) -> AggState {
        debug_assert_eq!(self.group, right.group, "combining segments of different groups");
        let overlap = u32::from(right.seg_min == self.seg_max);
        AggState {
            group: self.group,
            sum: self.sum.wrapping_add(right.sum),
            cnt: self.cnt.wrapping_add(right.cnt),
            dc: self.dc.wrapping_add(right.dc).wrapping_sub(overlap),
            seg_min: self.seg_min.min(right.seg_min),
            seg_max: self.seg_max.max(right.seg_max),
        }
    }

    /// Like [`combine`](Self::combine) but also checks the sorted-boundary
    /// precondition in debug builds.
    pub fn combine_sorted(&self, right: &AggState) -> AggState {
        debug_assert!(self.seg_max <= right.seg_min, "segments out of key order");
        self.combine(right)
    }

    /// Reduces the state to the operator's result.
    pub fn finalize(&self, op: Operator, widths: Widths) -> Result<u64, ConfigError> {
        let sum = self.sum & widths.key_mask();
        Ok(match op {
            Operator::Min => self.seg_min,
            Operator::Max => self.seg_max,
            Operator::Sum => sum,
            Operator::Count => u64::from(self.cnt),
            Operator::DistinctCount => u64::from(self.dc),
            Operator::Average => sum / u64::from(self.cnt.max(1)),
            Operator::MinMedMax => return Err(ConfigError::OperatorNotSupported(op)),
        })
    }
}

/// Combines an optional carried prefix with `right`.
pub fn combine_opt(left: Option<&AggState>, right: &AggState) -> AggState {
    match left {
        Some(l) if l.group == right.group => l.combine(right),
        _ => *right,
    }
}
