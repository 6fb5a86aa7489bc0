//! Perf sweeps.
//!
//! A grid spec is a `;`-separated list of `name=values`. Values are a
//! single integer, a comma list, or `a..b` for the powers of two from `a`
//! to `b`. Names: `p`, `k`, `ws`, `wa`, `op` (comma list of operator
//! names), and optionally `n` (tuples per point, default `max(32·WS, 8192)`),
//! `pct` (percentage of unique groups in the generated stream, default 50),
//! `groups` (`on`/`off`) and `seed`.

use std::io::Write;

use aggpipe_core::perf::{simulate, CycleStats};
use aggpipe_core::{ConfigError, Operator, SwagConfig};

use crate::gen::{generate, Distinct, GenSpec};
use crate::AppError;

pub const DEFAULT_GRID: &str = "p=4;k=128;ws=4..16384;wa=4..16384;op=sum";

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub p: Vec<usize>,
    pub k: Vec<usize>,
    pub ws: Vec<usize>,
    pub wa: Vec<usize>,
    pub ops: Vec<Operator>,
    pub n: Option<usize>,
    pub unique_pct: f64,
    pub grouped: bool,
    pub seed: u64,
}

fn bad(msg: impl Into<String>) -> AppError {
    AppError::Config(format!("grid: {}", msg.into()))
}

fn numbers(name: &str, v: &str) -> Result<Vec<usize>, AppError> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(format!("{name}: {s:?} is not an integer")));
    if let Some((a, b)) = v.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a == 0 || !a.is_power_of_two() || a > b {
            return Err(bad(format!("{name}: range {v} must start at a power of two no larger than its end")));
        }
        Ok(std::iter::successors(Some(a), |x| x.checked_mul(2)).take_while(|&x| x <= b).collect())
    } else {
        v.split(',').map(num).collect()
    }
}

impl Grid {
    pub fn parse(spec: &str) -> Result<Grid, AppError> {
        let mut g = Grid {
            p: vec![4],
            k: vec![128],
            ws: Vec::new(),
            wa: Vec::new(),
            ops: vec![Operator::Sum],
            n: None,
            unique_pct: 50.0,
            grouped: true,
            seed: 1,
        };
        for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, v) = part.split_once('=').ok_or_else(|| bad(format!("{part:?} is not name=value")))?;
            let v = v.trim();
            match name.trim() {
                "p" => g.p = numbers("p", v)?,
                "k" => g.k = numbers("k", v)?,
                "ws" => g.ws = numbers("ws", v)?,
                "wa" => g.wa = numbers("wa", v)?,
                "op" => {
                    g.ops = v
                        .split(',')
                        .map(|o| o.trim().parse::<Operator>().map_err(|e| bad(e.to_string())))
                        .collect::<Result<_, _>>()?
                }
                "n" => g.n = Some(v.parse().map_err(|_| bad("n must be an integer"))?),
                "pct" => g.unique_pct = v.parse().map_err(|_| bad("pct must be a number"))?,
                "seed" => g.seed = v.parse().map_err(|_| bad("seed must be an integer"))?,
                "groups" => {
                    g.grouped = match v {
                        "on" => true,
                        "off" => false,
                        _ => return Err(bad("groups must be on or off")),
                    }
                }
                other => return Err(bad(format!("unknown field {other:?}"))),
            }
        }
        if g.ws.is_empty() {
            return Err(bad("ws is required"));
        }
        if g.wa.is_empty() {
            g.wa = g.ws.clone();
        }
        if [&g.p, &g.k].iter().any(|v| v.is_empty()) || g.ops.is_empty() {
            return Err(bad("p, k and op need at least one value"));
        }
        Ok(g)
    }

    pub fn points(&self) -> impl Iterator<Item = SwagConfig> + '_ {
        self.p.iter().flat_map(move |&p| {
            self.k.iter().flat_map(move |&k| {
                self.ws.iter().flat_map(move |&ws| {
                    self.wa.iter().filter(move |&&wa| wa <= ws).flat_map(move |&wa| {
                        self.ops.iter().map(move |&op| SwagConfig::new(ws, wa, op, p, k).grouped(self.grouped))
                    })
                })
            })
        })
    }

    pub fn tuples_for(&self, ws: usize) -> usize {
        self.n.unwrap_or((32 * ws).max(8192))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cfg: SwagConfig,
    /// `None` when the sorter cannot hold the window.
    pub stats: Option<CycleStats>,
}

/// Simulates every point of the grid. Points with `WA > WS` are skipped;
/// window sizes the sorter cannot take come back without stats.
pub fn run(grid: &Grid) -> Result<Vec<Row>, AppError> {
    let longest = grid.ws.iter().map(|&ws| grid.tuples_for(ws)).max().unwrap_or(0);
    let stream = generate(&GenSpec {
        n: longest,
        distinct: Distinct::UniquePct(grid.unique_pct),
        key_range: 1 << 16,
        sorted: false,
        seed: grid.seed,
    })?;
    let mut rows = Vec::new();
    for cfg in grid.points() {
        let n = grid.tuples_for(cfg.ws);
        let stats = match simulate(&cfg, &stream[..n]) {
            Ok(s) => Some(s),
            Err(ConfigError::UnsupportedWindowSize { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push(Row { cfg, stats });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "P,k,WS,WA,op,input_rate,normalized_rate,latency_cycles";

pub fn write_csv(rows: &[Row], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let c = &r.cfg;
        write!(w, "{},{},{},{},{},", c.p, c.k, c.ws, c.wa, c.op)?;
        match &r.stats {
            Some(s) => writeln!(w, "{:.4},{:.4},{}", s.input_rate, s.normalized_rate, s.first_out_latency_cycles)?,
            None => writeln!(w, "unsupported,unsupported,unsupported")?,
        }
    }
    Ok(())
}
