use core::fmt;

use crate::tuple::Operator;

/// Rejected engine, sorter or width configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigError {
    InvalidParallelism(usize),
    InvalidWidth { group_bits: u32, key_bits: u32 },
    /// Sorter capacity must be a positive multiple of `P`.
    InvalidSorterCapacity { k: usize, p: usize },
    EmptyWindow,
    AdvanceExceedsSize { ws: usize, wa: usize },
    NotMultipleOfParallelism { what: &'static str, value: usize, p: usize },
    /// `WS` falls in `(k, P·k)` or above `k²`.
    UnsupportedWindowSize { ws: usize, k: usize, p: usize },
    OperatorNotSupported(Operator),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::InvalidParallelism(p) => {
                write!(f, "parallelism {p} is not a power of two >= 2")
            }
            ConfigError::InvalidWidth { group_bits, key_bits } => {
                write!(f, "field widths must be 1..=64 bits (group {group_bits}, key {key_bits})")
            }
            ConfigError::InvalidSorterCapacity { k, p } => {
                write!(f, "sorter capacity {k} is not a positive multiple of P={p}")
            }
            ConfigError::EmptyWindow => f.write_str("window size and advance must be positive"),
            ConfigError::AdvanceExceedsSize { ws, wa } => {
                write!(f, "window advance {wa} exceeds window size {ws}")
            }
            ConfigError::NotMultipleOfParallelism { what, value, p } => {
                write!(f, "{what} {value} is not a multiple of P={p}")
            }
            ConfigError::UnsupportedWindowSize { ws, k, p } => write!(
                f,
                "window size {ws} unsupported by a sorter with k={k}, P={p} \
                 (need WS <= {k} or {} <= WS <= {})",
                p * k,
                k * k
            ),
            ConfigError::OperatorNotSupported(op) => {
                write!(f, "operator {op} is not supported here")
            }
        }
    }
}

/// Switch conflict in the reverse butterfly, or an out-of-range destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingError {
    Conflict { stage: u32, port: usize },
    InvalidDestination { slot: usize, dest: usize },
    /// A slot has a value but no destination, or the other way round.
    Mismatch { slot: usize },
}

impl fmt::Display for RoutingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoutingError::Conflict { stage, port } => {
                write!(f, "routing conflict at stage {stage}, port {port}")
            }
            RoutingError::InvalidDestination { slot, dest } => {
                write!(f, "slot {slot} routed to nonexistent port {dest}")
            }
            RoutingError::Mismatch { slot } => {
                write!(f, "slot {slot} has a value without a destination or vice versa")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SorterError {
    UnsupportedWindowSize { ws: usize, k: usize, p: usize },
    CapacityExceeded { capacity: usize },
    Config(ConfigError),
}

impl From<ConfigError> for SorterError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::UnsupportedWindowSize { ws, k, p } => {
                SorterError::UnsupportedWindowSize { ws, k, p }
            }
            other => SorterError::Config(other),
        }
    }
}

impl fmt::Display for SorterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SorterError::UnsupportedWindowSize { ws, k, p } => {
                ConfigError::UnsupportedWindowSize { ws: *ws, k: *k, p: *p }.fmt(f)
            }
            SorterError::CapacityExceeded { capacity } => {
                write!(f, "linear sorter of capacity {capacity} is full")
            }
            SorterError::Config(e) => e.fmt(f),
        }
    }
}

/// Runtime failure while streaming through an engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineError {
    /// Group order (or key order within a group, when the operator needs it)
    /// broke at this stream position.
    UnsortedInput { position: u64 },
    ValueOutOfRange { position: u64 },
    InvalidBatch { expected: usize, found: usize },
    /// A non-final batch was not dense, or valid slots were not a prefix.
    SparseBatch,
    /// A batch arrived after the stream's eos batch and before `flush`.
    StreamClosed,
    Routing(RoutingError),
    Sorter(SorterError),
}

impl From<RoutingError> for EngineError {
    fn from(e: RoutingError) -> Self {
        EngineError::Routing(e)
    }
}

impl From<SorterError> for EngineError {
    fn from(e: SorterError) -> Self {
        EngineError::Sorter(e)
    }
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::UnsortedInput { position } => {
                write!(f, "input is not sorted at tuple {position}")
            }
            EngineError::ValueOutOfRange { position } => {
                write!(f, "tuple {position} does not fit the configured field widths")
            }
            EngineError::InvalidBatch { expected, found } => {
                write!(f, "batch has {found} slots, engine expects {expected}")
            }
            EngineError::SparseBatch => {
                f.write_str("only the final batch may be partial, with valid slots first")
            }
            EngineError::StreamClosed => f.write_str("stream already ended; flush first"),
            EngineError::Routing(e) => e.fmt(f),
            EngineError::Sorter(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for ConfigError {}
impl core::error::Error for RoutingError {}
impl core::error::Error for SorterError {}
impl core::error::Error for EngineError {}
