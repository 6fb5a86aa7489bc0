//! Stream-level value types shared by every engine.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::EngineError;

/// One `(group, key)` element of a stream.
///
/// Group-less streams use `group == 0` throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Tuple {
    pub group: u64,
    pub key: u64,
}

impl Tuple {
    pub const fn new(group: u64, key: u64) -> Self {
        Tuple { group, key }
    }

    /// A tuple of a group-less stream.
    pub const fn ungrouped(key: u64) -> Self {
        Tuple { group: 0, key }
    }
}

/// Bit widths of the group and key fields. Arithmetic on keys is modular at
/// `key_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Widths {
    pub group_bits: u32,
    pub key_bits: u32,
}

impl Default for Widths {
    fn default() -> Self {
        Widths { group_bits: 32, key_bits: 32 }
    }
}

impl Widths {
    pub fn new(group_bits: u32, key_bits: u32) -> Result<Self, crate::ConfigError> {
        if !(1..=64).contains(&group_bits) || !(1..=64).contains(&key_bits) {
            return Err(crate::ConfigError::InvalidWidth { group_bits, key_bits });
        }
        Ok(Widths { group_bits, key_bits })
    }

    pub fn key_mask(&self) -> u64 {
        mask(self.key_bits)
    }

    pub fn group_mask(&self) -> u64 {
        mask(self.group_bits)
    }

    pub fn fits(&self, t: &Tuple) -> bool {
        t.group & !self.group_mask() == 0 && t.key & !self.key_mask() == 0
    }

    pub(crate) fn check(&self, t: &Tuple, position: u64) -> Result<(), EngineError> {
        if self.fits(t) {
            Ok(())
        } else {
            Err(EngineError::ValueOutOfRange { position })
        }
    }
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// `P` tuple slots advancing through a pipeline together.
///
/// Only an end-of-stream batch may be partially filled, and then only as a
/// prefix of valid slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    slots: Vec<Option<Tuple>>,
    eos: bool,
}

impl Batch {
    /// A dense batch. `tuples.len()` is the parallelism.
    pub fn full(tuples: &[Tuple]) -> Self {
        Batch { slots: tuples.iter().copied().map(Some).collect(), eos: false }
    }

    /// The final batch of a stream holding `tuples` in its first slots.
    pub fn eos(tuples: &[Tuple], p: usize) -> Result<Self, EngineError> {
        if tuples.len() > p {
            return Err(EngineError::InvalidBatch { expected: p, found: tuples.len() });
        }
        let mut slots: Vec<Option<Tuple>> = tuples.iter().copied().map(Some).collect();
        slots.resize(p, None);
        Ok(Batch { slots, eos: true })
    }

    /// Splits a stream into dense batches, closing it with an eos batch that
    /// carries the remainder (possibly empty).
    pub fn split_stream(stream: &[Tuple], p: usize) -> Vec<Batch> {
        let mut out: Vec<Batch> = stream.chunks_exact(p).map(Batch::full).collect();
        let rem = stream.chunks_exact(p).remainder();
        out.push(Batch::eos(rem, p).expect("remainder shorter than p"));
        out
    }

    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn is_eos(&self) -> bool {
        self.eos
    }

    pub fn slots(&self) -> &[Option<Tuple>] {
        &self.slots
    }

    pub fn valid(&self) -> impl Iterator<Item = bool> + '_ {
        self.slots.iter().map(Option::is_some)
    }

    pub fn tuples(&self) -> impl Iterator<Item = Tuple> + '_ {
        self.slots.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Group of the first valid slot.
    pub fn first_group(&self) -> Option<u64> {
        self.slots.first().copied().flatten().map(|t| t.group)
    }

    /// Checks shape: width `p`, dense unless eos, valid slots form a prefix.
    pub fn validate(&self, p: usize) -> Result<(), EngineError> {
        if self.slots.len() != p {
            return Err(EngineError::InvalidBatch { expected: p, found: self.slots.len() });
        }
        let n = self.len();
        if !self.eos && n != p {
            return Err(EngineError::SparseBatch);
        }
        if self.slots[..n].iter().any(Option::is_none) {
            return Err(EngineError::SparseBatch);
        }
        Ok(())
    }
}

/// Aggregate operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Min,
    Max,
    Sum,
    Count,
    DistinctCount,
    Average,
    /// First, middle and last tuple of each group. Sliding windows only.
    MinMedMax,
}

impl Operator {
    pub const SCALAR: [Operator; 6] = [
        Operator::Min,
        Operator::Max,
        Operator::Sum,
        Operator::Count,
        Operator::DistinctCount,
        Operator::Average,
    ];

    pub const ALL: [Operator; 7] = [
        Operator::Min,
        Operator::Max,
        Operator::Sum,
        Operator::Count,
        Operator::DistinctCount,
        Operator::Average,
        Operator::MinMedMax,
    ];

    pub fn is_selection(self) -> bool {
        self == Operator::MinMedMax
    }

    /// Whether the operator needs keys ordered within each group.
    pub fn needs_key_order(self) -> bool {
        matches!(self, Operator::DistinctCount | Operator::MinMedMax)
    }

    pub fn name(self) -> &'static str {
        match self {
            Operator::Min => "min",
            Operator::Max => "max",
            Operator::Sum => "sum",
            Operator::Count => "count",
            Operator::DistinctCount => "dcount",
            Operator::Average => "avg",
            Operator::MinMedMax => "minmedmax",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownOperator;

impl fmt::Display for UnknownOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown operator (expected min, max, sum, count, dcount, avg or minmedmax)")
    }
}

impl core::error::Error for UnknownOperator {}

impl FromStr for Operator {
    type Err = UnknownOperator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "min" => Operator::Min,
            "max" => Operator::Max,
            "sum" => Operator::Sum,
            "count" => Operator::Count,
            "dcount" | "distinct" | "distinct-count" | "distinctcount" => Operator::DistinctCount,
            "avg" | "average" | "mean" => Operator::Average,
            "minmedmax" | "mmm" | "min-med-max" => Operator::MinMedMax,
            _ => return Err(UnknownOperator),
        })
    }
}
