//! Round-robin stream compaction.
//!
//! Valid slots of a batch are packed onto consecutive output ports, starting
//! where the previous batch stopped and wrapping modulo `P`. The structural
//! path routes the packing through a reverse butterfly whose stage `s` sets
//! destination bit `s` (distances `1, 2, .., P/2`); every round-robin
//! pattern passes that network without a switch conflict.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::RoutingError;
use crate::{is_valid_parallelism, log2, ConfigError};

/// One batch worth of output ports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortVector<T> {
    pub ports: Vec<Option<T>>,
    /// Port the first result of this batch was placed on.
    pub base: usize,
}

impl<T> PortVector<T> {
    pub fn empty(width: usize, base: usize) -> Self {
        PortVector { ports: (0..width).map(|_| None).collect(), base }
    }

    pub fn width(&self) -> usize {
        self.ports.len()
    }

    pub fn occupied(&self) -> usize {
        self.ports.iter().filter(|p| p.is_some()).count()
    }

    /// Base for the batch that follows.
    pub fn next_base(&self) -> usize {
        (self.base + self.occupied()) % self.width().max(1)
    }

    /// Occupied ports in cyclic order from `base`.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let w = self.width();
        (0..w).filter_map(move |j| self.ports[(self.base + j) % w].as_ref())
    }

    pub fn into_ordered(self) -> Vec<T> {
        let w = self.width();
        let base = self.base;
        let mut ports = self.ports;
        ports.rotate_left(base % w.max(1));
        ports.into_iter().flatten().collect()
    }
}

/// Destination port of every valid slot: the `j`-th valid slot goes to
/// `(base + j) mod P`. Returns the destinations and the next base.
pub fn compute_dest_indices(valid: &[bool], base: usize) -> (Vec<Option<usize>>, usize) {
    let p = valid.len();
    let mut next = 0usize;
    let dest = valid
        .iter()
        .map(|&v| {
            v.then(|| {
                let d = (base + next) % p;
                next += 1;
                d
            })
        })
        .collect();
    (dest, (base + next) % p.max(1))
}

/// Reverse butterfly switching network of width `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReverseButterfly {
    width: usize,
}

impl ReverseButterfly {
    pub fn new(width: usize) -> Result<Self, ConfigError> {
        if !is_valid_parallelism(width) {
            return Err(ConfigError::InvalidParallelism(width));
        }
        Ok(ReverseButterfly { width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> u32 {
        log2(self.width)
    }

    /// 2×2 switches: `P/2` per stage.
    pub fn switch_count(&self) -> usize {
        self.width / 2 * self.depth() as usize
    }

    /// Unit entities, one per 2:1 output selector (two per switch).
    pub fn entity_count(&self) -> usize {
        2 * self.switch_count()
    }

    /// Pairs a value with its destination, checking both line up.
    pub fn lanes<T>(
        &self,
        values: Vec<Option<T>>,
        dest: &[Option<usize>],
    ) -> Result<Vec<Option<(T, usize)>>, RoutingError> {
        values
            .into_iter()
            .zip(dest)
            .enumerate()
            .map(|(slot, (v, d))| match (v, *d) {
                (Some(v), Some(d)) if d < self.width => Ok(Some((v, d))),
                (Some(_), Some(d)) => Err(RoutingError::InvalidDestination { slot, dest: d }),
                (None, None) => Ok(None),
                _ => Err(RoutingError::Mismatch { slot }),
            })
            .collect()
    }

    /// One switching stage: each value moves across its switch iff its
    /// current port and destination disagree on bit `stage`.
    pub fn stage<T>(
        &self,
        lanes: Vec<Option<(T, usize)>>,
        stage: u32,
    ) -> Result<Vec<Option<(T, usize)>>, RoutingError> {
        let bit = 1usize << stage;
        let mut out: Vec<Option<(T, usize)>> = (0..self.width).map(|_| None).collect();
        for (port, lane) in lanes.into_iter().enumerate() {
            if let Some((v, d)) = lane {
                let next = (port & !bit) | (d & bit);
                if out[next].is_some() {
                    return Err(RoutingError::Conflict { stage, port: next });
                }
                out[next] = Some((v, d));
            }
        }
        Ok(out)
    }

    pub fn finish<T>(&self, lanes: Vec<Option<(T, usize)>>, base: usize) -> PortVector<T> {
        debug_assert!(lanes.iter().enumerate().all(|(i, l)| l.as_ref().is_none_or(|(_, d)| *d == i)));
        PortVector { ports: lanes.into_iter().map(|l| l.map(|(v, _)| v)).collect(), base }
    }

    pub fn route<T>(
        &self,
        values: Vec<Option<T>>,
        dest: &[Option<usize>],
        base: usize,
    ) -> Result<PortVector<T>, RoutingError> {
        let mut lanes = self.lanes(values, dest)?;
        for s in 0..self.depth() {
            lanes = self.stage(lanes, s)?;
        }
        Ok(self.finish(lanes, base))
    }
}

/// Routes `values` to `dest` through a reverse butterfly of matching width.
pub fn route_reverse_butterfly<T>(
    values: Vec<Option<T>>,
    dest: &[Option<usize>],
    base: usize,
) -> Result<PortVector<T>, RoutingError> {
    let net = ReverseButterfly::new(values.len()).map_err(|_| RoutingError::InvalidDestination {
        slot: 0,
        dest: values.len(),
    })?;
    net.route(values, dest, base)
}

/// Functional reference: writes each value straight to its port.
pub fn scatter<T: Clone>(values: &[Option<T>], dest: &[Option<usize>], base: usize) -> PortVector<T> {
    let mut ports = vec![None; values.len()];
    for (v, d) in values.iter().zip(dest) {
        if let (Some(v), Some(d)) = (v, d) {
            ports[*d] = Some(v.clone());
        }
    }
    PortVector { ports, base }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T: bool = true;
    const F: bool = false;

    #[test]
    fn dest_indices_examples() {
        assert_eq!(compute_dest_indices(&[T, T, F, F], 0), (vec![Some(0), Some(1), None, None], 2));
        assert_eq!(compute_dest_indices(&[F; 4], 3), (vec![None; 4], 3));
        assert_eq!(
            compute_dest_indices(&[T, T, T, F], 3),
            (vec![Some(3), Some(0), Some(1), None], 2)
        );
    }

    #[test]
    fn route_examples() {
        let pv = route_reverse_butterfly(
            vec![Some('a'), Some('b'), None, None],
            &[Some(0), Some(1), None, None],
            0,
        )
        .unwrap();
        assert_eq!(pv.ports, vec![Some('a'), Some('b'), None, None]);

        let pv = route_reverse_butterfly(
            vec![Some('x'), Some('y'), Some('z'), None],
            &[Some(2), Some(3), Some(0), None],
            2,
        )
        .unwrap();
        assert_eq!(pv.ports, vec![Some('z'), None, Some('x'), Some('y')]);
        assert_eq!(pv.iter().copied().collect::<Vec<_>>(), vec!['x', 'y', 'z']);
        assert_eq!(pv.next_base(), 1);
    }

    #[test]
    fn exhaustive_round_robin_patterns_route_like_scatter() {
        for p in [2usize, 4, 8, 16] {
            let net = ReverseButterfly::new(p).unwrap();
            for mask in 0u32..(1 << p) {
                let valid: Vec<bool> = (0..p).map(|i| mask >> i & 1 == 1).collect();
                let values: Vec<Option<usize>> =
                    valid.iter().enumerate().map(|(i, &v)| v.then_some(i)).collect();
                for base in 0..p {
                    let (dest, _) = compute_dest_indices(&valid, base);
                    let routed = net.route(values.clone(), &dest, base).unwrap();
                    assert_eq!(routed, scatter(&values, &dest, base), "p={p} mask={mask:b} base={base}");
                }
            }
        }
    }

    #[test]
    fn conflicting_permutation_is_reported() {
        // slots 0 and 1 both need port 0 after the bit-0 stage
        let net = ReverseButterfly::new(4).unwrap();
        let values = vec![Some(0), Some(1), Some(2), Some(3)];
        let dest = [Some(0), Some(2), Some(1), Some(3)];
        assert_eq!(net.route(values, &dest, 0), Err(RoutingError::Conflict { stage: 0, port: 0 }));
    }

    #[test]
    fn mismatched_lanes_are_rejected() {
        let err = route_reverse_butterfly(vec![Some(1), None], &[None, None], 0).unwrap_err();
        assert_eq!(err, RoutingError::Mismatch { slot: 0 });
        let err = route_reverse_butterfly(vec![Some(1), None], &[Some(5), None], 0).unwrap_err();
        assert_eq!(err, RoutingError::InvalidDestination { slot: 0, dest: 5 });
    }

    #[test]
    fn switch_counts() {
        for (p, s) in [(2, 1), (4, 4), (8, 12), (16, 32)] {
            let net = ReverseButterfly::new(p).unwrap();
            assert_eq!(net.switch_count(), s);
            assert_eq!(net.entity_count(), p * net.depth() as usize);
        }
    }

    proptest! {
        /// Reading occupied ports from each call's base reproduces the
        /// valid inputs in order, across any sequence of batches.
        #[test]
        fn compaction_is_lossless_and_ordered(p_exp in 1u32..5, masks in proptest::collection::vec(any::<u16>(), 1..20)) {
            let p = 1usize << p_exp;
            let net = ReverseButterfly::new(p).unwrap();
            let mut base = 0;
            let mut seq = 0usize;
            let mut expected = Vec::new();
            let mut got = Vec::new();
            for m in masks {
                let valid: Vec<bool> = (0..p).map(|i| m >> i & 1 == 1).collect();
                let values: Vec<Option<usize>> = valid
                    .iter()
                    .map(|&v| v.then(|| { seq += 1; seq }))
                    .collect();
                expected.extend(values.iter().flatten().copied());
                let (dest, next) = compute_dest_indices(&valid, base);
                let pv = net.route(values, &dest, base).unwrap();
                prop_assert_eq!(pv.next_base(), next);
                got.extend(pv.iter().copied());
                base = next;
            }
            prop_assert_eq!(got, expected);
        }
    }
}
