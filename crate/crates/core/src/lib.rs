//! Batch-parallel streaming aggregation.
//!
//! Every engine in this crate consumes `P` tuples per simulated cycle and is
//! built from the same handful of hardware-shaped pieces: a segmented
//! Kogge–Stone prefix scan, a round-robin compactor routed through a reverse
//! butterfly, and a sorter that annotates each tuple with its group
//! cardinality.
//!
//! * [`groupby::GroupByEngine`] aggregates an already-sorted stream per group.
//! * [`swag::SwagEngine`] evaluates count-based sliding windows, with or
//!   without groups, including the min/median/max selection operator.
//! * [`sorter`] holds the cardinality-appending sorter on its own.
//! * [`perf`] is the cycle-accounting model of both pipelines.
//! * [`oracle`] holds brute-force references used by tests and `--verify`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agg;
pub mod compaction;
pub mod error;
pub mod groupby;
pub mod oracle;
pub mod perf;
pub mod scan;
pub mod sorter;
pub mod swag;
pub mod tuple;

#[cfg(test)]
mod properties;

pub use agg::AggState;
pub use compaction::PortVector;
pub use error::{ConfigError, EngineError, RoutingError, SorterError};
pub use groupby::{GroupByEngine, GroupResult};
pub use sorter::{CardTuple, CompareMode, SorterConfig};
pub use swag::{ResultKind, SwagConfig, SwagEngine, SwagResult};
pub use tuple::{Batch, Operator, Tuple, Widths};

/// `true` when `p` is a power of two no smaller than 2.
pub(crate) fn is_valid_parallelism(p: usize) -> bool {
    p >= 2 && p.is_power_of_two()
}

pub(crate) fn log2(p: usize) -> u32 {
    debug_assert!(p.is_power_of_two());
    p.trailing_zeros()
}
