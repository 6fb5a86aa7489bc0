//! Count-based sliding windows over a stream, one window at a time.
//!
//! Tuples land in a ring of `2·WS` slots. Whenever window
//! `[n·WA, n·WA + WS)` is complete it is read out, sorted with group
//! cardinalities attached, and streamed `P` tuples at a time through:
//!
//! 1. a segmented scan giving every tuple its 1-based index within its group
//!    (and the running aggregate for scalar operators),
//! 2. selection: the tuple whose index equals the cardinality carries the
//!    group's result; for min/median/max the tuples at indices `1`,
//!    `ceil(card/2)` and `card` are kept,
//! 3. a second scan over the selection flags for output positions,
//! 4. round-robin compaction through the reverse butterfly.
//!
//! Nothing but the ring survives from one window to the next.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use crate::compaction::{compute_dest_indices, ReverseButterfly};
use crate::error::{ConfigError, EngineError};
use crate::groupby::{prefix_scan_batch, ScanState};
use crate::scan::KoggeStone;
use crate::sorter::{sort_window, CardTuple, CompareMode, SortPlan, SorterConfig};
use crate::tuple::{Batch, Operator, Tuple, Widths};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwagConfig {
    pub ws: usize,
    pub wa: usize,
    pub op: Operator,
    pub p: usize,
    /// Sorter capacity.
    pub k: usize,
    /// `false` treats the whole window as one group.
    pub grouped: bool,
    pub widths: Widths,
}

impl SwagConfig {
    pub fn new(ws: usize, wa: usize, op: Operator, p: usize, k: usize) -> Self {
        SwagConfig { ws, wa, op, p, k, grouped: true, widths: Widths::default() }
    }

    pub fn grouped(self, grouped: bool) -> Self {
        SwagConfig { grouped, ..self }
    }

    pub fn with_widths(self, widths: Widths) -> Self {
        SwagConfig { widths, ..self }
    }

    /// The sorter compares keys only when the operator depends on key order.
    pub fn sorter(&self) -> Result<SorterConfig, ConfigError> {
        let mode = if self.op.needs_key_order() { CompareMode::GroupKey } else { CompareMode::GroupOnly };
        SorterConfig::new(self.k, self.p, mode)
    }

    pub fn validate(&self) -> Result<SortPlan, ConfigError> {
        let p = self.p;
        if !crate::is_valid_parallelism(p) {
            return Err(ConfigError::InvalidParallelism(p));
        }
        if self.ws == 0 || self.wa == 0 {
            return Err(ConfigError::EmptyWindow);
        }
        if self.wa > self.ws {
            return Err(ConfigError::AdvanceExceedsSize { ws: self.ws, wa: self.wa });
        }
        for (what, value) in [("window size", self.ws), ("window advance", self.wa)] {
            if value % p != 0 {
                return Err(ConfigError::NotMultipleOfParallelism { what, value, p });
            }
        }
        self.sorter()?.plan(self.ws)
    }
}

/// Which of min, median and max a selected tuple stands for. Coinciding
/// positions yield one tuple holding several roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Roles(u8);

impl Roles {
    pub const MIN: Roles = Roles(1);
    pub const MED: Roles = Roles(2);
    pub const MAX: Roles = Roles(4);
    pub const ALL: Roles = Roles(7);

    pub const fn with(self, other: Roles) -> Roles {
        Roles(self.0 | other.0)
    }

    pub const fn contains(self, other: Roles) -> bool {
        self.0 & other.0 == other.0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Roles of the tuple at 1-based position `idx` of a group of `card`.
    pub fn at(idx: u32, card: u32) -> Roles {
        let mut r = Roles(0);
        if idx == 1 {
            r = r.with(Roles::MIN);
        }
        if idx == card.div_ceil(2) {
            r = r.with(Roles::MED);
        }
        if idx == card {
            r = r.with(Roles::MAX);
        }
        r
    }
}

impl fmt::Display for Roles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sep = "";
        for (r, name) in [(Roles::MIN, "min"), (Roles::MED, "med"), (Roles::MAX, "max")] {
            if self.contains(r) {
                write!(f, "{sep}{name}")?;
                sep = "+";
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResultKind {
    Scalar,
    Select(Roles),
}

impl fmt::Display for ResultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResultKind::Scalar => f.write_str("scalar"),
            ResultKind::Select(r) => r.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwagResult {
    pub window_id: u64,
    pub group: u64,
    pub kind: ResultKind,
    pub value: u64,
}

/// Ring of `2·WS` tuples the windows are read from.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    ring: VecDeque<Tuple>,
    capacity: usize,
    /// Stream offset of the oldest stored tuple.
    start: u64,
    /// Next window to read.
    next_window: u64,
}

impl WindowBuffer {
    pub fn new(ws: usize) -> Self {
        WindowBuffer { ring: VecDeque::with_capacity(2 * ws), capacity: 2 * ws, start: 0, next_window: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stored(&self) -> usize {
        self.ring.len()
    }

    pub fn free(&self) -> usize {
        self.capacity - self.ring.len()
    }

    /// Stream offset one past the newest stored tuple.
    pub fn end(&self) -> u64 {
        self.start + self.ring.len() as u64
    }

    pub fn next_window(&self) -> u64 {
        self.next_window
    }

    fn push(&mut self, t: Tuple) {
        debug_assert!(self.ring.len() < self.capacity);
        self.ring.push_back(t);
    }

    /// Copies out the next window if it is complete, then frees the tuples
    /// that no later window needs.
    fn take_window(&mut self, ws: usize, wa: usize) -> Option<(u64, Vec<Tuple>)> {
        let n = self.next_window;
        let from = n * wa as u64;
        if from + ws as u64 > self.end() {
            return None;
        }
        let off = (from - self.start) as usize;
        let window = self.ring.range(off..off + ws).copied().collect();
        self.next_window += 1;
        let keep_from = self.next_window * wa as u64;
        while self.start < keep_from && !self.ring.is_empty() {
            self.ring.pop_front();
            self.start += 1;
        }
        Some((n, window))
    }
}

/// Sliding-window engine.
#[derive(Debug, Clone)]
pub struct SwagEngine {
    cfg: SwagConfig,
    sorter: SorterConfig,
    scan: KoggeStone,
    net: ReverseButterfly,
    buffer: WindowBuffer,
    base: usize,
    position: u64,
    ended: bool,
}

impl SwagEngine {
    pub fn configure(cfg: SwagConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(SwagEngine {
            cfg,
            sorter: cfg.sorter()?,
            scan: KoggeStone::new(cfg.p)?,
            net: ReverseButterfly::new(cfg.p)?,
            buffer: WindowBuffer::new(cfg.ws),
            base: 0,
            position: 0,
            ended: false,
        })
    }

    pub fn config(&self) -> &SwagConfig {
        &self.cfg
    }

    pub fn buffer(&self) -> &WindowBuffer {
        &self.buffer
    }

    /// Round-robin port the next result goes to.
    pub fn base(&self) -> usize {
        self.base
    }

    /// Offers a batch. `Ok(false)` is backpressure: fewer than `P` ring
    /// slots are free until [`poll`](Self::poll) consumes a window. Errors
    /// are malformed batches only.
    pub fn offer(&mut self, batch: &Batch) -> Result<bool, EngineError> {
        if self.ended {
            return Err(EngineError::StreamClosed);
        }
        batch.validate(self.cfg.p)?;
        if self.buffer.free() < self.cfg.p {
            return Ok(false);
        }
        for t in batch.tuples() {
            self.cfg.widths.check(&t, self.position)?;
            self.position += 1;
            self.buffer.push(if self.cfg.grouped { t } else { Tuple::ungrouped(t.key) });
        }
        self.ended = batch.is_eos();
        Ok(true)
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    /// Processes every window that is complete.
    pub fn poll(&mut self) -> Result<Vec<SwagResult>, EngineError> {
        let mut out = Vec::new();
        while let Some((id, window)) = self.buffer.take_window(self.cfg.ws, self.cfg.wa) {
            self.process_window(id, &window, &mut out)?;
        }
        Ok(out)
    }

    /// Runs one window through sort, scans, selection and compaction.
    pub fn process_window(&mut self, id: u64, window: &[Tuple], out: &mut Vec<SwagResult>) -> Result<(), EngineError> {
        let sorted = sort_window(window, &self.sorter)?;
        let p = self.cfg.p;
        let mut carry: Option<ScanState> = None;
        for chunk in sorted.chunks(p) {
            let states: Vec<ScanState> = (0..p).map(|i| ScanState::lift(chunk.get(i).map(|c| c.tuple), false)).collect();
            let scanned = prefix_scan_batch(&states, carry.as_ref().map(|c| &c.agg));
            carry = scanned.iter().rev().find(|s| s.tuple.is_some()).copied();

            let selected: Vec<Option<SwagResult>> = (0..p)
                .map(|i| chunk.get(i).and_then(|c| self.select(id, c, &scanned[i])))
                .collect();
            let valid: Vec<bool> = selected.iter().map(Option::is_some).collect();
            let counts = self.scan.prefix_count(&valid);
            let (dest, next) = compute_dest_indices(&valid, self.base);
            debug_assert!(dest.iter().zip(&counts).all(|(d, &c)| d.is_none_or(|d| d == (self.base + c as usize - 1) % p)));
            let ports = self.net.route(selected, &dest, self.base)?;
            self.base = next;
            out.extend(ports.into_ordered());
        }
        Ok(())
    }

    fn select(&self, id: u64, c: &CardTuple, s: &ScanState) -> Option<SwagResult> {
        let idx = s.agg.cnt;
        let (kind, value) = if self.cfg.op.is_selection() {
            let roles = Roles::at(idx, c.card);
            if roles.is_empty() {
                return None;
            }
            (ResultKind::Select(roles), c.tuple.key)
        } else {
            if idx != c.card {
                return None;
            }
            let v = s.agg.finalize(self.cfg.op, self.cfg.widths).expect("scalar operator");
            (ResultKind::Scalar, v)
        };
        Some(SwagResult { window_id: id, group: c.tuple.group, kind, value })
    }

    /// Feeds a whole stream, polling after every batch, and collects the
    /// results of every full window.
    pub fn run(&mut self, stream: &[Tuple]) -> Result<Vec<SwagResult>, EngineError> {
        let mut out = Vec::new();
        for b in Batch::split_stream(stream, self.cfg.p) {
            while !self.offer(&b)? {
                out.extend(self.poll()?);
            }
            out.extend(self.poll()?);
        }
        Ok(out)
    }
}
