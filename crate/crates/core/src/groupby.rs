//! Group-by aggregation over a sorted stream.
//!
//! A batch moves through five steps:
//!
//! 1. it is held for one batch so the group of the following tuple is known,
//! 2. the final tuple of each group is flagged `last`,
//! 3. a segmented Kogge–Stone scan folds keys per group and counts `last`
//!    flags for the output index,
//! 4. the rollover stage merges the aggregate carried over from the previous
//!    batch and replaces each `last` tuple's key by the finalised result,
//! 5. a reverse butterfly packs the results onto ports round-robin.
//!
//! [`GroupByEngine`] applies the steps batch by batch. [`StagedGroupBy`]
//! clocks the same stage functions through registers, one stage per cycle,
//! and is what the latency figures are measured on.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::agg::{combine_opt, AggState};
use crate::compaction::{compute_dest_indices, PortVector, ReverseButterfly};
use crate::error::{ConfigError, EngineError};
use crate::scan::KoggeStone;
use crate::tuple::{Batch, Operator, Tuple, Widths};

/// One aggregate emitted for a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupResult {
    pub group: u64,
    pub value: u64,
}

/// Per-slot carrier inside the prefix scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanState {
    pub tuple: Option<Tuple>,
    pub agg: AggState,
    pub last: bool,
    /// Inclusive count of `last` flags up to this slot.
    pub idx_partial: u32,
}

impl ScanState {
    pub fn lift(tuple: Option<Tuple>, last: bool) -> Self {
        ScanState {
            tuple,
            agg: AggState::unit(tuple.unwrap_or_default()),
            last: last && tuple.is_some(),
            idx_partial: u32::from(last && tuple.is_some()),
        }
    }
}

/// Flags the final tuple of every group in `current`.
///
/// `next_first_group` is the group of the tuple after this batch, `None`
/// when the stream ends here.
pub fn mark_last(current: &Batch, next_first_group: Option<u64>) -> Vec<bool> {
    let slots = current.slots();
    let n = current.len();
    (0..slots.len())
        .map(|i| match slots[i] {
            None => false,
            Some(t) if i + 1 < n => slots[i + 1].is_some_and(|u| u.group != t.group),
            Some(t) => next_first_group != Some(t.group),
        })
        .collect()
}

/// Lifts a marked batch into scan carriers.
pub fn lift_batch(batch: &Batch, marks: &[bool]) -> Vec<ScanState> {
    batch.slots().iter().zip(marks).map(|(t, &m)| ScanState::lift(*t, m)).collect()
}

/// One Kogge–Stone stage of the group-by scan.
pub fn scan_stage(net: &KoggeStone, states: &mut [ScanState], distance: usize) {
    net.stage(states, distance, |earlier, later| {
        let (Some(e), Some(l)) = (earlier.tuple, later.tuple) else {
            return None;
        };
        let agg = if e.group == l.group { earlier.agg.combine(&later.agg) } else { later.agg };
        Some(ScanState { agg, idx_partial: earlier.idx_partial + later.idx_partial, ..*later })
    });
}

/// In-batch segmented scan, then the carried aggregate folded into the
/// leading run of its group.
///
/// Slot `i` ends up with the fold of every same-group tuple at positions
/// `<= i`, and `idx_partial` with the inclusive count of `last` flags.
pub fn prefix_scan_batch(states: &[ScanState], carry: Option<&AggState>) -> Vec<ScanState> {
    let mut out = states.to_vec();
    let net = KoggeStone::new(out.len()).expect("batch width is a power of two");
    for d in net.distances() {
        scan_stage(&net, &mut out, d);
    }
    if carry.is_some() {
        for s in out.iter_mut().filter(|s| s.tuple.is_some()) {
            s.agg = combine_opt(carry, &s.agg);
        }
    }
    out
}

/// State of the rollover stage and of the one-batch hold ahead of it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RolloverState {
    /// Aggregate of the group still open at the end of the previous batch.
    pub carry: Option<AggState>,
    /// Next output port.
    pub base: usize,
    pub pending: Option<Batch>,
}

impl RolloverState {
    /// Emits the finalised aggregate of every `last` slot. `states` come
    /// from the in-batch scan (without carry).
    pub fn finalize(
        &mut self,
        states: &[ScanState],
        op: Operator,
        widths: Widths,
    ) -> Result<Vec<Option<GroupResult>>, ConfigError> {
        let p = states.len();
        let mut emitted = 0;
        let mut tail: Option<AggState> = None;
        let mut results = Vec::with_capacity(p);
        for s in states {
            let Some(t) = s.tuple else {
                results.push(None);
                continue;
            };
            let agg = combine_opt(self.carry.as_ref(), &s.agg);
            if s.last {
                emitted += 1;
                results.push(Some(GroupResult { group: t.group, value: agg.finalize(op, widths)? }));
                tail = None;
            } else {
                results.push(None);
                tail = Some(agg);
            }
        }
        if states.iter().any(|s| s.tuple.is_some()) {
            self.carry = tail;
        }
        self.base = (self.base + emitted) % p;
        Ok(results)
    }
}

/// Functional form of the rollover step.
pub fn rollover_finalize(
    states: &[ScanState],
    ro: &RolloverState,
    op: Operator,
    widths: Widths,
) -> Result<(Vec<Option<GroupResult>>, RolloverState), ConfigError> {
    let mut next = ro.clone();
    let results = next.finalize(states, op, widths)?;
    Ok((results, next))
}

/// Ingest checks: field widths, group order, and key order within a group
/// when the operator needs it.
#[derive(Debug, Clone, Default)]
struct OrderCheck {
    last: Option<Tuple>,
    position: u64,
}

impl OrderCheck {
    fn check(&mut self, batch: &Batch, key_order: bool, widths: Widths) -> Result<(), EngineError> {
        for t in batch.tuples() {
            widths.check(&t, self.position)?;
            if let Some(prev) = self.last {
                let broken = t.group < prev.group || (key_order && t.group == prev.group && t.key < prev.key);
                if broken {
                    return Err(EngineError::UnsortedInput { position: self.position });
                }
            }
            self.last = Some(t);
            self.position += 1;
        }
        Ok(())
    }
}

fn check_config(p: usize, op: Operator) -> Result<(KoggeStone, ReverseButterfly), ConfigError> {
    if op.is_selection() {
        return Err(ConfigError::OperatorNotSupported(op));
    }
    Ok((KoggeStone::new(p)?, ReverseButterfly::new(p)?))
}

/// Group-by engine, one batch per call.
#[derive(Debug, Clone)]
pub struct GroupByEngine {
    p: usize,
    op: Operator,
    widths: Widths,
    net: ReverseButterfly,
    ro: RolloverState,
    order: OrderCheck,
    closed: bool,
}

impl GroupByEngine {
    pub fn new(p: usize, op: Operator) -> Result<Self, ConfigError> {
        Self::with_widths(p, op, Widths::default())
    }

    pub fn with_widths(p: usize, op: Operator, widths: Widths) -> Result<Self, ConfigError> {
        let (_, net) = check_config(p, op)?;
        Ok(GroupByEngine {
            p,
            op,
            widths,
            net,
            ro: RolloverState::default(),
            order: OrderCheck::default(),
            closed: false,
        })
    }

    pub fn parallelism(&self) -> usize {
        self.p
    }

    pub fn operator(&self) -> Operator {
        self.op
    }

    pub fn rollover(&self) -> &RolloverState {
        &self.ro
    }

    /// Accepts the next batch and returns the results of the batch it
    /// releases from the hold (the previous one). Never refuses input.
    pub fn push_batch(&mut self, batch: Batch) -> Result<PortVector<GroupResult>, EngineError> {
        if self.closed {
            return Err(EngineError::StreamClosed);
        }
        batch.validate(self.p)?;
        self.order.check(&batch, self.op.needs_key_order(), self.widths)?;
        let out = match self.ro.pending.take() {
            Some(prev) => self.process(&prev, batch.first_group())?,
            None => PortVector::empty(self.p, self.ro.base),
        };
        self.closed = batch.is_eos();
        self.ro.pending = Some(batch);
        Ok(out)
    }

    /// Ends the stream: releases the held batch as final and resets the
    /// engine for a new stream.
    pub fn flush(&mut self) -> Result<PortVector<GroupResult>, EngineError> {
        let out = match self.ro.pending.take() {
            Some(prev) => self.process(&prev, None)?,
            None => PortVector::empty(self.p, self.ro.base),
        };
        debug_assert!(self.ro.carry.is_none());
        self.ro = RolloverState::default();
        self.order = OrderCheck::default();
        self.closed = false;
        Ok(out)
    }

    fn process(&mut self, batch: &Batch, next_first: Option<u64>) -> Result<PortVector<GroupResult>, EngineError> {
        let marks = mark_last(batch, next_first);
        let scanned = prefix_scan_batch(&lift_batch(batch, &marks), None);
        let base = self.ro.base;
        let results = self
            .ro
            .finalize(&scanned, self.op, self.widths)
            .expect("operator validated at construction");
        let valid: Vec<bool> = results.iter().map(Option::is_some).collect();
        let (dest, next) = compute_dest_indices(&valid, base);
        debug_assert_eq!(next, self.ro.base);
        debug_assert!(scanned
            .iter()
            .zip(&dest)
            .all(|(s, d)| d.is_none_or(|d| d == (base + s.idx_partial as usize - 1) % self.p)));
        Ok(self.net.route(results, &dest, base)?)
    }

    /// Streams `tuples` through the engine and reads every result in port
    /// order.
    pub fn run(&mut self, tuples: &[Tuple]) -> Result<Vec<GroupResult>, EngineError> {
        let mut out = Vec::new();
        for b in Batch::split_stream(tuples, self.p) {
            out.extend(self.push_batch(b)?.into_ordered());
        }
        out.extend(self.flush()?.into_ordered());
        Ok(out)
    }
}

enum Payload {
    Scanning(Vec<ScanState>),
    Routing(Vec<Option<(GroupResult, usize)>>, usize),
}

/// Register-level model of the group-by pipeline.
///
/// Registers sit after each of the `log2 P` scan stages, the rollover stage
/// and the `log2 P` butterfly stages, so a batch leaves `1 + 2·log2 P`
/// cycles after it is released from the one-batch hold.
pub struct StagedGroupBy {
    p: usize,
    op: Operator,
    widths: Widths,
    scan: KoggeStone,
    net: ReverseButterfly,
    ro: RolloverState,
    order: OrderCheck,
    hold: Option<Batch>,
    hold_is_final: bool,
    regs: VecDeque<Option<Payload>>,
    cycle: u64,
}

/// What one clock edge produced.
#[derive(Debug, Clone, Default)]
pub struct Tick {
    pub released: bool,
    pub output: Option<PortVector<GroupResult>>,
}

impl StagedGroupBy {
    pub fn new(p: usize, op: Operator) -> Result<Self, ConfigError> {
        let (scan, net) = check_config(p, op)?;
        let depth = Self::depth_of(p);
        Ok(StagedGroupBy {
            p,
            op,
            widths: Widths::default(),
            scan,
            net,
            ro: RolloverState::default(),
            order: OrderCheck::default(),
            hold: None,
            hold_is_final: false,
            regs: (0..depth).map(|_| None).collect(),
            cycle: 0,
        })
    }

    fn depth_of(p: usize) -> usize {
        1 + 2 * crate::log2(p) as usize
    }

    /// Registered stages between release and output.
    pub fn depth(&self) -> usize {
        self.regs.len()
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn is_idle(&self) -> bool {
        self.hold.is_none() && self.regs.iter().all(Option::is_none)
    }

    /// Advances one clock. `input` is the batch presented this cycle, if any.
    pub fn tick(&mut self, input: Option<Batch>) -> Result<Tick, EngineError> {
        let log_p = self.scan.depth() as usize;
        let mut tick = Tick::default();

        if let Some(Some(Payload::Routing(lanes, base))) = self.regs.pop_back() {
            tick.output = Some(self.net.finish(lanes, base));
        }
        for (i, reg) in self.regs.iter_mut().enumerate() {
            let stage = i + 1;
            if let Some(payload) = reg.take() {
                *reg = Some(Self::advance(
                    stage, log_p, payload, &self.scan, &self.net, &mut self.ro, self.op, self.widths,
                )?);
            }
        }

        let released = match input {
            Some(b) => {
                if self.hold_is_final {
                    return Err(EngineError::StreamClosed);
                }
                b.validate(self.p)?;
                self.order.check(&b, self.op.needs_key_order(), self.widths)?;
                let next_first = b.first_group();
                let prev = self.hold.replace(b);
                self.hold_is_final = self.hold.as_ref().is_some_and(Batch::is_eos);
                prev.map(|prev| (prev, next_first))
            }
            None if self.hold_is_final => {
                self.hold_is_final = false;
                self.order = OrderCheck::default();
                self.hold.take().map(|b| (b, None))
            }
            None => None,
        };
        let entry = match released {
            Some((batch, next_first)) => {
                tick.released = true;
                let states = lift_batch(&batch, &mark_last(&batch, next_first));
                Some(Self::advance(
                    0,
                    log_p,
                    Payload::Scanning(states),
                    &self.scan,
                    &self.net,
                    &mut self.ro,
                    self.op,
                    self.widths,
                )?)
            }
            None => None,
        };
        self.regs.push_front(entry);
        self.cycle += 1;
        Ok(tick)
    }

    /// Applies stage `stage` (0-based) to data entering its register.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        stage: usize,
        log_p: usize,
        payload: Payload,
        scan: &KoggeStone,
        net: &ReverseButterfly,
        ro: &mut RolloverState,
        op: Operator,
        widths: Widths,
    ) -> Result<Payload, EngineError> {
        Ok(match payload {
            Payload::Scanning(mut states) if stage < log_p => {
                scan_stage(scan, &mut states, 1 << stage);
                Payload::Scanning(states)
            }
            Payload::Scanning(states) => {
                debug_assert_eq!(stage, log_p);
                let base = ro.base;
                let results = ro.finalize(&states, op, widths).expect("operator validated");
                let valid: Vec<bool> = results.iter().map(Option::is_some).collect();
                let (dest, _) = compute_dest_indices(&valid, base);
                Payload::Routing(net.lanes(results, &dest)?, base)
            }
            Payload::Routing(lanes, base) => {
                let s = (stage - log_p - 1) as u32;
                Payload::Routing(net.stage(lanes, s)?, base)
            }
        })
    }
}
