//! Cycle accounting for both pipelines and the unit-entity complexity model.
//!
//! The sliding-window timing is a per-window recurrence over the resources
//! that actually serialise work:
//!
//! * the input port accepts one batch per cycle while the `2·WS` ring has
//!   `P` free slots; a window's slots free up once the sorter has read it,
//! * the sorter reads a window at `P` tuples per cycle, never ahead of the
//!   input; a tuple needs `k/P` cycles to cross a linear sorter,
//! * in sort mode (`WS <= k`) window `n+1` is read while `n` drains,
//! * in merge mode the same hardware alternates: chunk-sort pass of window
//!   `n`, merge pass of window `n`, chunk-sort pass of `n+1`, ... The merge
//!   pass first loads every chunk head, `ceil(R/P)` cycles for `R` chunks,
//! * the aggregation stages after the sorter add a fixed depth.
//!
//! Every figure is in cycles of `P` tuple slots.

use alloc::collections::BTreeMap;
use num_rational::Ratio;

use crate::compaction::ReverseButterfly;
use crate::error::ConfigError;
use crate::scan::KoggeStone;
use crate::sorter::SortPlan;
use crate::swag::SwagConfig;
use crate::tuple::Tuple;
use crate::{is_valid_parallelism, log2};

/// First-out latency in cycles of the group-by pipeline: `log2 P` scan
/// stages, the rollover stage and `log2 P` butterfly stages.
pub fn pipeline_latency_groupby(p: usize) -> Result<u64, ConfigError> {
    if !is_valid_parallelism(p) {
        return Err(ConfigError::InvalidParallelism(p));
    }
    Ok(1 + 2 * u64::from(log2(p)))
}

/// Highest result rate an ideal sliding-window engine could sustain:
/// every input batch finishes `WS/WA` windows.
pub fn ideal_swag_output_rate(p: usize, ws: usize, wa: usize) -> Result<Ratio<u64>, ConfigError> {
    if ws == 0 || wa == 0 {
        return Err(ConfigError::EmptyWindow);
    }
    if wa > ws {
        return Err(ConfigError::AdvanceExceedsSize { ws, wa });
    }
    Ok(Ratio::new(p as u64 * ws as u64, wa as u64))
}

/// Registered depth from the sorter's output to the output ports: merge
/// tree, first scan, selection, second scan, butterfly.
pub fn swag_engine_depth(p: usize) -> u64 {
    1 + 4 * u64::from(log2(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStats {
    /// Cycles up to and including the last output beat.
    pub cycles: u64,
    pub tuples_in: u64,
    pub tuples_out: u64,
    /// Cycle of the first output beat, counting the first input at cycle 0.
    pub first_out_latency_cycles: u64,
    pub input_rate: f64,
    /// `input_rate` over `min(P, P·WA/WS)`, the rate at which an engine
    /// bound by reading every window once would accept input.
    pub normalized_rate: f64,
    pub windows: u64,
}

/// Result count per window from a sliding per-group count.
struct OutputCounter {
    counts: BTreeMap<u64, u32>,
    selection: bool,
    distinct: u64,
    capped: u64,
}

impl OutputCounter {
    fn add(&mut self, g: u64, delta: i32) {
        let c = self.counts.entry(g).or_insert(0);
        let before = *c;
        *c = (*c as i64 + delta as i64) as u32;
        let after = *c;
        self.distinct = self.distinct + u64::from(after > 0) - u64::from(before > 0);
        self.capped = self.capped + u64::from(after.min(3)) - u64::from(before.min(3));
        if after == 0 {
            self.counts.remove(&g);
        }
    }

    fn results(&self) -> u64 {
        if self.selection {
            self.capped
        } else {
            self.distinct
        }
    }
}

/// Simulates the sliding-window engine over `stream`.
pub fn simulate(cfg: &SwagConfig, stream: &[Tuple]) -> Result<CycleStats, ConfigError> {
    let plan = cfg.validate()?;
    let p = cfg.p as u64;
    let (ws, wa, k) = (cfg.ws as u64, cfg.wa as u64, cfg.k as u64);
    let n = stream.len() as u64;
    let batches = n.div_ceil(p);
    let l = ws / p;
    let fill = k / p;
    let depth = swag_engine_depth(cfg.p);
    let group = |i: u64| if cfg.grouped { stream[i as usize].group } else { 0 };

    let mut counter = OutputCounter {
        counts: BTreeMap::new(),
        selection: cfg.op.is_selection(),
        distinct: 0,
        capped: 0,
    };
    let mut windows_read_end: alloc::vec::Vec<u64> = alloc::vec::Vec::new();
    let mut accept = alloc::vec::Vec::with_capacity(batches as usize);
    let mut next_batch = 0u64;
    let accept_batch = |j: u64, read_end: &[u64], accept: &mut alloc::vec::Vec<u64>| {
        let mut t = if j == 0 { 0 } else { accept[j as usize - 1] + 1 };
        let need = (j * p + p).saturating_sub(2 * ws);
        if need > 0 {
            // first window whose release brings the freed count to `need`
            let m = need.div_ceil(wa) - 1;
            t = t.max(read_end[m as usize]);
        }
        accept.push(t);
    };

    let mut tuples_out = 0u64;
    let mut first_out = None;
    let mut last_beat = 0u64;
    // sorter free for the next read / emission stage free for the next drain
    let mut sorter_free = 0u64;
    let mut emit_free = 0u64;
    let mut win = 0u64;
    let mut entered = 0u64;
    while win * wa + ws <= n {
        let end_batch = (win * wa + ws) / p - 1;
        while next_batch <= end_batch {
            accept_batch(next_batch, &windows_read_end, &mut accept);
            next_batch += 1;
        }
        let arrive_first = accept[(win * wa / p) as usize];
        let arrive_last = accept[end_batch as usize];

        let read_end = (sorter_free + l).max(arrive_last + 1);
        let read_start = read_end - l;
        let first_beat = match plan {
            SortPlan::Sort => {
                let start = read_end.max(read_start.max(arrive_first) + fill).max(emit_free);
                emit_free = start + l;
                sorter_free = read_end;
                start
            }
            SortPlan::Merge { runs } => {
                let heads = (runs as u64).div_ceil(p);
                let beat = read_end + fill + heads + 1;
                emit_free = beat + l;
                sorter_free = emit_free;
                beat
            }
        };
        windows_read_end.push(read_end);

        while entered < win * wa + ws {
            counter.add(group(entered), 1);
            entered += 1;
        }
        if win > 0 {
            for i in (win - 1) * wa..win * wa {
                counter.add(group(i), -1);
            }
        }
        tuples_out += counter.results();
        first_out.get_or_insert(first_beat + depth);
        last_beat = emit_free - 1 + depth;
        win += 1;
    }
    while next_batch < batches {
        accept_batch(next_batch, &windows_read_end, &mut accept);
        next_batch += 1;
    }
    let last_in = accept.last().copied().unwrap_or(0);
    let cycles = last_beat.max(last_in) + 1;
    let input_rate = if n == 0 { 0.0 } else { n as f64 / cycles as f64 };
    let bound = (p as f64).min(p as f64 * wa as f64 / ws as f64);
    Ok(CycleStats {
        cycles,
        tuples_in: n,
        tuples_out,
        first_out_latency_cycles: first_out.unwrap_or(0),
        input_rate,
        normalized_rate: input_rate / bound,
        windows: win,
    })
}

/// Hardware organisations compared by the complexity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Two complete compactors around separate marking, rollover and
    /// finalisation stages.
    ComposedPrra,
    /// The single pipeline: one shared scan and one butterfly.
    Integrated,
}

/// Unit entities of one building block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entities {
    pub scan_nodes: usize,
    pub switches: usize,
    pub per_lane: usize,
}

impl Entities {
    pub fn total(&self) -> usize {
        self.scan_nodes + self.switches + self.per_lane
    }
}

/// A round-robin compactor: a prefix count plus a reverse butterfly, each
/// node and each 2:1 selector counting as one entity.
fn prra(p: usize) -> Result<Entities, ConfigError> {
    Ok(Entities {
        scan_nodes: KoggeStone::new(p)?.node_count(),
        switches: ReverseButterfly::new(p)?.entity_count(),
        per_lane: 0,
    })
}

/// Builds the design's blocks and counts their entities.
pub fn entity_count(design: Design, p: usize) -> Result<usize, ConfigError> {
    let block = prra(p)?;
    Ok(match design {
        Design::Integrated => Entities { per_lane: 2 * p, ..block }.total(),
        Design::ComposedPrra => 3 * p + 2 * block.total(),
    })
}
