//! Sorter that appends each tuple's group cardinality.
//!
//! `P` linear sorters of `k/P` cells feed a tree of 2-way mergers. A window
//! of at most `k` tuples is dealt round-robin to the linear sorters and
//! merged straight out (sort mode). A larger window is first sorted in
//! chunks of `k`; the sorted chunks then re-enter with each linear sorter
//! keeping only the heads of its chunks (merge mode), which reaches `k²`
//! tuples. The merge tree needs at least `P` chunks to keep every linear
//! sorter busy, so windows strictly between `k` and `P·k` are rejected.
//!
//! Cardinalities are counted on the way through. Inside a linear sorter a
//! fresh insertion adds its weight to every resident of its group and the
//! newcomer adopts the updated count. Inside a merger two same-group heads
//! from different lists sum their counts (cond1), and a head that meets an
//! already-summed one adopts it (cond2). Each merger also remembers the last
//! tuple it emitted, for runs of a group that only one list still holds.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{ConfigError, SorterError};
use crate::tuple::Tuple;

/// A tuple carrying its group's count within the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CardTuple {
    pub tuple: Tuple,
    pub card: u32,
    /// Cardinality already reconciled inside the current merger.
    pub merged: bool,
    /// Input side of the current merger: `false` for A, `true` for B.
    pub src: bool,
    /// Arrival order, the final tiebreak.
    pub seq: u64,
}

impl CardTuple {
    pub fn new(tuple: Tuple, seq: u64) -> Self {
        CardTuple { tuple, card: 1, merged: false, src: false, seq }
    }

    fn group(&self) -> u64 {
        self.tuple.group
    }
}

/// What the sorter orders by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompareMode {
    /// `(group, key)`, needed when an operator depends on key order.
    #[default]
    GroupKey,
    /// Group only; keys keep arrival order within a group.
    GroupOnly,
}

impl CompareMode {
    fn rank(self, t: &CardTuple) -> (u64, u64, u64) {
        match self {
            CompareMode::GroupKey => (t.tuple.group, t.tuple.key, t.seq),
            CompareMode::GroupOnly => (t.tuple.group, 0, t.seq),
        }
    }

    fn less(self, a: &CardTuple, b: &CardTuple) -> bool {
        self.rank(a) < self.rank(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SorterConfig {
    /// Total cells over all linear sorters.
    pub k: usize,
    pub p: usize,
    pub compare: CompareMode,
}

/// How a window passes through the sorter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortPlan {
    Sort,
    /// Chunk sort then merge of `runs` sorted chunks.
    Merge { runs: usize },
}

impl SorterConfig {
    pub fn new(k: usize, p: usize, compare: CompareMode) -> Result<Self, ConfigError> {
        if !crate::is_valid_parallelism(p) {
            return Err(ConfigError::InvalidParallelism(p));
        }
        if k == 0 || !k.is_multiple_of(p) {
            return Err(ConfigError::InvalidSorterCapacity { k, p });
        }
        Ok(SorterConfig { k, p, compare })
    }

    /// Cells per linear sorter.
    pub fn lane_capacity(&self) -> usize {
        self.k / self.p
    }

    pub fn plan(&self, ws: usize) -> Result<SortPlan, ConfigError> {
        let (k, p) = (self.k, self.p);
        if ws <= k {
            Ok(SortPlan::Sort)
        } else if ws >= p * k && ws <= k * k {
            Ok(SortPlan::Merge { runs: ws.div_ceil(k) })
        } else {
            Err(ConfigError::UnsupportedWindowSize { ws, k, p })
        }
    }

    pub fn supports(&self, ws: usize) -> bool {
        self.plan(ws).is_ok()
    }
}

/// Insertion-sort chain of cells, kept sorted after every step.
///
/// Each cell also records a caller tag; merge mode uses it for the chunk a
/// head came from.
#[derive(Debug, Clone)]
pub struct LinearSorter {
    capacity: usize,
    compare: CompareMode,
    cells: Vec<(CardTuple, usize)>,
    /// Group and count of the last extracted tuple.
    last_out: Option<(u64, u32)>,
}

impl LinearSorter {
    pub fn new(capacity: usize, compare: CompareMode) -> Self {
        LinearSorter { capacity, compare, cells: Vec::with_capacity(capacity), last_out: None }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &CardTuple> {
        self.cells.iter().map(|(c, _)| c)
    }

    /// Inserts `t`.
    ///
    /// With `Some(weight)` the tuple opens its group's run in this sorter's
    /// input: every resident of the group grows by `weight` and the newcomer
    /// takes the updated count, or `weight` if it is alone. With `None` it
    /// continues a run already counted and only copies the count, from a
    /// resident or else from the last tuple extracted.
    pub fn insert(&mut self, mut t: CardTuple, weight: Option<u32>, tag: usize) -> Result<(), SorterError> {
        if self.cells.len() >= self.capacity {
            return Err(SorterError::CapacityExceeded { capacity: self.capacity });
        }
        let g = t.group();
        let mut neighbour = None;
        for (cell, _) in self.cells.iter_mut().filter(|(c, _)| c.group() == g) {
            if let Some(w) = weight {
                cell.card = cell.card.wrapping_add(w);
            }
            neighbour = Some(cell.card);
        }
        t.card = match (weight, neighbour) {
            (_, Some(c)) => c,
            (Some(w), None) => w,
            (None, None) => match self.last_out {
                Some((lg, c)) if lg == g => c,
                _ => t.card,
            },
        };
        let at = self.cells.iter().position(|(c, _)| self.compare.less(&t, c)).unwrap_or(self.cells.len());
        self.cells.insert(at, (t, tag));
        Ok(())
    }

    /// Removes the smallest cell.
    pub fn pop(&mut self) -> Option<(CardTuple, usize)> {
        if self.cells.is_empty() {
            return None;
        }
        let (t, tag) = self.cells.remove(0);
        self.last_out = Some((t.group(), t.card));
        Some((t, tag))
    }

    pub fn drain(&mut self) -> Vec<CardTuple> {
        core::iter::from_fn(|| self.pop().map(|(t, _)| t)).collect()
    }
}

/// Sorts a fresh insert of `t` into `sorter` with unit weight.
pub fn linear_insert(sorter: &mut LinearSorter, t: Tuple, seq: u64) -> Result<(), SorterError> {
    sorter.insert(CardTuple::new(t, seq), Some(1), 0)
}

/// Compare-and-swap with cardinality reconciliation.
pub fn cas_merge(a: CardTuple, b: CardTuple, compare: CompareMode) -> (CardTuple, CardTuple) {
    let (mut a, mut b) = (a, b);
    if a.group() == b.group() {
        match (a.merged, b.merged) {
            (false, false) if a.src != b.src => {
                let sum = a.card.wrapping_add(b.card);
                a.card = sum;
                b.card = sum;
                a.merged = true;
                b.merged = true;
            }
            (true, false) => {
                b.card = a.card;
                b.merged = true;
            }
            (false, true) => {
                a.card = b.card;
                a.merged = true;
            }
            _ => {}
        }
    }
    if compare.less(&b, &a) {
        (b, a)
    } else {
        (a, b)
    }
}

/// 2-way merger of the merge tree.
fn merge_two(a: Vec<CardTuple>, b: Vec<CardTuple>, compare: CompareMode) -> Vec<CardTuple> {
    let tag = |v: Vec<CardTuple>, src: bool| -> VecDeque<CardTuple> {
        v.into_iter().map(|t| CardTuple { merged: false, src, ..t }).collect()
    };
    let mut lists = [tag(a, false), tag(b, true)];
    let mut out = Vec::with_capacity(lists[0].len() + lists[1].len());
    let mut memory: Option<CardTuple> = None;
    let recall = |t: &mut CardTuple, memory: &Option<CardTuple>| {
        if let Some(m) = memory {
            if m.merged && !t.merged && m.group() == t.group() {
                t.card = m.card;
                t.merged = true;
            }
        }
    };
    loop {
        for l in lists.iter_mut() {
            if let Some(h) = l.front_mut() {
                recall(h, &memory);
            }
        }
        let lo = match (lists[0].pop_front(), lists[1].pop_front()) {
            (Some(x), Some(y)) => {
                let (lo, hi) = cas_merge(x, y, compare);
                lists[usize::from(hi.src)].push_front(hi);
                lo
            }
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => break,
        };
        memory = Some(lo);
        out.push(lo);
    }
    out
}

/// Merge tree over sorted lists (the count need not be a power of two).
pub fn merge_tree(mut lists: Vec<Vec<CardTuple>>, compare: CompareMode) -> Vec<CardTuple> {
    if lists.is_empty() {
        return Vec::new();
    }
    while lists.len() > 1 {
        let mut next = Vec::with_capacity(lists.len().div_ceil(2));
        let mut it = lists.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge_two(a, b, compare),
                None => a,
            });
        }
        lists = next;
    }
    let mut out = lists.pop().unwrap_or_default();
    for t in out.iter_mut() {
        t.merged = false;
        t.src = false;
    }
    out
}

/// Sort mode on up to `k` tuples; `seq` numbers continue from `seq0`.
fn sort_chunk(chunk: &[Tuple], cfg: &SorterConfig, seq0: u64) -> Result<Vec<CardTuple>, SorterError> {
    let mut lanes: Vec<LinearSorter> =
        (0..cfg.p).map(|_| LinearSorter::new(cfg.lane_capacity(), cfg.compare)).collect();
    for (i, t) in chunk.iter().enumerate() {
        linear_insert(&mut lanes[i % cfg.p], *t, seq0 + i as u64)?;
    }
    Ok(merge_tree(lanes.iter_mut().map(LinearSorter::drain).collect(), cfg.compare))
}

/// One linear sorter merging sorted runs through their heads.
fn lane_merge(runs: Vec<Vec<CardTuple>>, cfg: &SorterConfig) -> Result<Vec<CardTuple>, SorterError> {
    let mut lane = LinearSorter::new(cfg.lane_capacity(), cfg.compare);
    let mut runs: Vec<VecDeque<CardTuple>> = runs.into_iter().map(VecDeque::from).collect();
    for (r, run) in runs.iter_mut().enumerate() {
        if let Some(h) = run.pop_front() {
            lane.insert(h, Some(h.card), r)?;
        }
    }
    let mut out = Vec::new();
    while let Some((t, r)) = lane.pop() {
        if let Some(next) = runs[r].pop_front() {
            let weight = (next.group() != t.group()).then_some(next.card);
            lane.insert(next, weight, r)?;
        }
        out.push(t);
    }
    Ok(out)
}

/// Sorts a window and appends every tuple's group cardinality.
pub fn sort_window(window: &[Tuple], cfg: &SorterConfig) -> Result<Vec<CardTuple>, SorterError> {
    match cfg.plan(window.len())? {
        SortPlan::Sort => sort_chunk(window, cfg, 0),
        SortPlan::Merge { .. } => {
            let mut lanes: Vec<Vec<Vec<CardTuple>>> = (0..cfg.p).map(|_| Vec::new()).collect();
            for (r, chunk) in window.chunks(cfg.k).enumerate() {
                lanes[r % cfg.p].push(sort_chunk(chunk, cfg, (r * cfg.k) as u64)?);
            }
            let merged = lanes.into_iter().map(|runs| lane_merge(runs, cfg)).collect::<Result<Vec<_>, _>>()?;
            Ok(merge_tree(merged, cfg.compare))
        }
    }
}

/// Sorts an arbitrarily long stream: chunks of `k` in sort mode, then the
/// merge tree applied over all chunks. Stable; cardinalities are dropped.
pub fn sort_stream(stream: &[Tuple], cfg: &SorterConfig) -> Result<Vec<Tuple>, SorterError> {
    let runs = stream
        .chunks(cfg.k)
        .enumerate()
        .map(|(r, c)| sort_chunk(c, cfg, (r * cfg.k) as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_tree(runs, cfg.compare).into_iter().map(|t| t.tuple).collect())
}
