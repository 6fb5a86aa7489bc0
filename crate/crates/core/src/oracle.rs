//! Brute-force references for tests and `--verify`.
//!
//! Nothing here touches the segment algebra or the sorter: every result is
//! recomputed from the raw keys of its group.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::sorter::CompareMode;
use crate::swag::{ResultKind, Roles, SwagResult};
use crate::tuple::{Operator, Tuple, Widths};

fn scalar(keys: &[u64], op: Operator, widths: Widths) -> u64 {
    let mask = widths.key_mask();
    let sum = keys.iter().fold(0u64, |a, &k| a.wrapping_add(k)) & mask;
    match op {
        Operator::Min => *keys.iter().min().expect("non-empty group"),
        Operator::Max => *keys.iter().max().expect("non-empty group"),
        Operator::Sum => sum,
        Operator::Count => keys.len() as u64,
        Operator::DistinctCount => {
            let mut d = keys.to_vec();
            d.sort_unstable();
            d.dedup();
            d.len() as u64
        }
        Operator::Average => sum / keys.len() as u64,
        Operator::MinMedMax => panic!("selection operator has no scalar result"),
    }
}

fn by_group(tuples: &[Tuple]) -> BTreeMap<u64, Vec<u64>> {
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for t in tuples {
        groups.entry(t.group).or_default().push(t.key);
    }
    groups
}

/// Per-group aggregate, ascending by group (the termination order of a
/// sorted stream).
pub fn oracle_groupby(stream: &[Tuple], op: Operator, widths: Widths) -> Vec<(u64, u64)> {
    by_group(stream).into_iter().map(|(g, keys)| (g, scalar(&keys, op, widths))).collect()
}

/// Results of one window: ascending by group, and for min/median/max by
/// position within the group.
pub fn oracle_window(window: &[Tuple], op: Operator, widths: Widths) -> Vec<(u64, ResultKind, u64)> {
    let mut out = Vec::new();
    for (g, mut keys) in by_group(window) {
        if !op.is_selection() {
            out.push((g, ResultKind::Scalar, scalar(&keys, op, widths)));
            continue;
        }
        keys.sort_unstable();
        let n = keys.len();
        // 1-based positions of min, lower median, max
        let picks = [(1, Roles::MIN), (n.div_ceil(2), Roles::MED), (n, Roles::MAX)];
        let mut last: Option<(usize, Roles)> = None;
        for (pos, role) in picks {
            match last {
                Some((p, r)) if p == pos => last = Some((p, r.with(role))),
                Some((p, r)) => {
                    out.push((g, ResultKind::Select(r), keys[p - 1]));
                    last = Some((pos, role));
                }
                None => last = Some((pos, role)),
            }
        }
        if let Some((p, r)) = last {
            out.push((g, ResultKind::Select(r), keys[p - 1]));
        }
    }
    out
}

/// Every full window `[n·wa, n·wa + ws)` recomputed from scratch. Partial
/// trailing windows produce nothing. `grouped == false` folds every tuple
/// into group 0.
pub fn oracle_swag(
    stream: &[Tuple],
    ws: usize,
    wa: usize,
    op: Operator,
    grouped: bool,
    widths: Widths,
) -> Vec<SwagResult> {
    assert!(ws > 0 && wa > 0 && wa <= ws);
    let mut out = Vec::new();
    let mut n = 0usize;
    while n * wa + ws <= stream.len() {
        let window: Vec<Tuple> = stream[n * wa..n * wa + ws]
            .iter()
            .map(|t| if grouped { *t } else { Tuple::ungrouped(t.key) })
            .collect();
        for (group, kind, value) in oracle_window(&window, op, widths) {
            out.push(SwagResult { window_id: n as u64, group, kind, value });
        }
        n += 1;
    }
    out
}

/// Stable sort of the window with each tuple's group count.
pub fn oracle_cardinality(window: &[Tuple], mode: CompareMode) -> Vec<(Tuple, u32)> {
    let mut sorted = window.to_vec();
    match mode {
        CompareMode::GroupKey => sorted.sort_by_key(|t| (t.group, t.key)),
        CompareMode::GroupOnly => sorted.sort_by_key(|t| t.group),
    }
    let counts = by_group(window);
    sorted.into_iter().map(|t| (t, counts[&t.group].len() as u32)).collect()
}
