//! Seeded synthetic streams.
//!
//! `d` distinct groups are drawn for `n` tuples: the first `d` tuples take
//! groups `0..d` so every group occurs, the rest pick uniformly among them,
//! and the whole stream is shuffled. `d = n` is the all-unique case and
//! `d = 1` the single-group case.

use aggpipe_core::Tuple;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distinct {
    Groups(u64),
    /// Percentage of the stream length, `0..=100`.
    UniquePct(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub distinct: Distinct,
    /// Keys are uniform in `0..key_range`.
    pub key_range: u64,
    pub sorted: bool,
    pub seed: u64,
}

impl GenSpec {
    pub fn groups(&self) -> Result<u64, AppError> {
        let d = match self.distinct {
            Distinct::Groups(0) => return Err(AppError::Config("--groups must be at least 1".into())),
            Distinct::Groups(g) => g,
            Distinct::UniquePct(p) if !(0.0..=100.0).contains(&p) => {
                return Err(AppError::Config(format!("--unique-pct {p} is outside 0..=100")))
            }
            Distinct::UniquePct(p) => ((self.n as f64 * p / 100.0).round() as u64).max(1),
        };
        if d > u64::from(u32::MAX) + 1 {
            return Err(AppError::Config("group ids must fit 32 bits".into()));
        }
        Ok(d)
    }
}

pub fn generate(spec: &GenSpec) -> Result<Vec<Tuple>, AppError> {
    let d = spec.groups()?;
    if spec.key_range == 0 || spec.key_range > u64::from(u32::MAX) + 1 {
        return Err(AppError::Config("--key-range must be in 1..=2^32".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out: Vec<Tuple> = (0..spec.n as u64)
        .map(|i| {
            let g = if i < d { i } else { rng.gen_range(0..d) };
            Tuple::new(g, rng.gen_range(0..spec.key_range))
        })
        .collect();
    out.shuffle(&mut rng);
    if spec.sorted {
        out.sort_unstable();
    }
    Ok(out)
}
