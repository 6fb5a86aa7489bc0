//! Kogge–Stone prefix-scan network.
//!
//! Stage `s` has distance `2^s`; node `i` of that stage reads slot `i - d`
//! and slot `i` of the previous stage. Segmentation is left to the combine
//! closure, which may decline to combine (different groups).

use alloc::vec::Vec;

use crate::{is_valid_parallelism, log2, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KoggeStone {
    width: usize,
}

impl KoggeStone {
    pub fn new(width: usize) -> Result<Self, ConfigError> {
        if !is_valid_parallelism(width) {
            return Err(ConfigError::InvalidParallelism(width));
        }
        Ok(KoggeStone { width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> u32 {
        log2(self.width)
    }

    /// Distances `1, 2, .., P/2`.
    pub fn distances(&self) -> impl Iterator<Item = usize> {
        (0..self.depth()).map(|s| 1usize << s)
    }

    /// Combining nodes: `P - d` per stage, `P·log2 P - P + 1` in total.
    pub fn node_count(&self) -> usize {
        self.distances().map(|d| self.width - d).sum()
    }

    /// Runs one stage in place. `combine(earlier, later)` returns the new
    /// value of the later slot, or `None` to keep it.
    pub fn stage<T: Clone>(
        &self,
        values: &mut [T],
        distance: usize,
        mut combine: impl FnMut(&T, &T) -> Option<T>,
    ) {
        debug_assert_eq!(values.len(), self.width);
        let prev: Vec<T> = values.to_vec();
        for i in distance..self.width {
            if let Some(v) = combine(&prev[i - distance], &prev[i]) {
                values[i] = v;
            }
        }
    }

    /// Full inclusive scan.
    pub fn scan<T: Clone>(&self, values: &mut [T], mut combine: impl FnMut(&T, &T) -> Option<T>) {
        for d in self.distances() {
            self.stage(values, d, &mut combine);
        }
    }

    /// Inclusive prefix count of `true` flags.
    pub fn prefix_count(&self, flags: &[bool]) -> Vec<u32> {
        let mut counts: Vec<u32> = flags.iter().map(|&f| u32::from(f)).collect();
        self.scan(&mut counts, |a, b| Some(a + b));
        counts
    }
}
