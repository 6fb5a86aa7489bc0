//! `aggpipe` subcommands.
//!
//! Exit codes: 0 success, 2 bad configuration or arguments, 3 unsorted
//! group-by input, 4 `--verify` mismatch, 5 I/O or malformed input file.

use std::path::PathBuf;
use std::process::ExitCode;

use aggpipe_core::oracle::{oracle_groupby, oracle_swag};
use aggpipe_core::sorter::sort_stream;
use aggpipe_core::{
    CompareMode, GroupByEngine, GroupResult, Operator, SorterConfig, SwagConfig, SwagEngine, SwagResult, Tuple,
    Widths,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::gen::{generate, Distinct, GenSpec};
use crate::grid::{self, Grid};
use crate::io::{read_tuples, with_output, write_tuples, Format};
use crate::AppError;

#[derive(Debug, Parser)]
#[command(name = "aggpipe", version, about = "Batch-parallel group-by and sliding-window aggregation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic stream.
    Gen(GenArgs),
    /// Aggregate a group-sorted stream per group.
    Groupby(GroupbyArgs),
    /// Evaluate sliding windows over a stream.
    Swag(SwagArgs),
    /// Sweep the cycle model over a grid and write CSV.
    Perf(PerfArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Number of distinct groups.
    #[arg(long, conflicts_with = "unique_pct")]
    pub groups: Option<u64>,
    /// Distinct groups as a percentage of `n`.
    #[arg(long)]
    pub unique_pct: Option<f64>,
    #[arg(long, default_value_t = 1 << 16)]
    pub key_range: u64,
    /// Sort by (group, key), as the group-by path expects.
    #[arg(long)]
    pub sorted: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Stream file, `-` for standard input.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Input format; by default `.bin` files are binary and the rest CSV.
    #[arg(long, value_enum)]
    pub format_in: Option<Format>,
    #[arg(long)]
    pub op: Operator,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format_out: OutFormat,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Cross-check every result against the brute-force reference.
    #[arg(long)]
    pub verify: bool,
}

impl InputArgs {
    fn read(&self, grouped: bool) -> Result<Vec<Tuple>, AppError> {
        let format = self.format_in.unwrap_or_else(|| Format::from_path(&self.input));
        read_tuples(&self.input, format, grouped)
    }
}

#[derive(Debug, Args)]
pub struct GroupbyArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Sort the input first with the cardinality sorter.
    #[arg(long)]
    pub presort: bool,
    /// Sorter capacity used by `--presort`.
    #[arg(long, default_value_t = 128)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct SwagArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub ws: usize,
    #[arg(long)]
    pub wa: usize,
    #[arg(long, default_value_t = 128)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub groups: OnOff,
}

#[derive(Debug, Args)]
pub struct PerfArgs {
    #[arg(long, default_value = grid::DEFAULT_GRID)]
    pub grid: String,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct GroupRow {
    group: u64,
    value: u64,
}

#[derive(Serialize)]
struct SwagRow {
    window_id: u64,
    group: u64,
    kind: String,
    value: u64,
}

fn emit<T: Serialize>(
    out: &std::path::Path,
    format: OutFormat,
    header: &str,
    rows: &[T],
    csv: impl Fn(&T) -> String,
) -> Result<(), AppError> {
    with_output(out, |w| {
        match format {
            OutFormat::Csv => {
                writeln!(w, "{header}")?;
                for r in rows {
                    writeln!(w, "{}", csv(r))?;
                }
            }
            OutFormat::Json => {
                serde_json::to_writer(&mut *w, rows)?;
                writeln!(w)?;
            }
        }
        Ok(())
    })
}

pub fn cmd_gen(a: &GenArgs) -> Result<(), AppError> {
    let distinct = match (a.groups, a.unique_pct) {
        (Some(g), _) => Distinct::Groups(g),
        (None, Some(p)) => Distinct::UniquePct(p),
        (None, None) => Distinct::UniquePct(50.0),
    };
    let spec = GenSpec { n: a.n, distinct, key_range: a.key_range, sorted: a.sorted, seed: a.seed };
    let tuples = generate(&spec)?;
    let format = a.format.unwrap_or_else(|| Format::from_path(&a.out));
    write_tuples(&a.out, &tuples, format, true)
}

pub fn groupby(tuples: &[Tuple], op: Operator, p: usize) -> Result<Vec<GroupResult>, AppError> {
    Ok(GroupByEngine::new(p, op)?.run(tuples)?)
}

pub fn cmd_groupby(a: &GroupbyArgs) -> Result<(), AppError> {
    let mut tuples = a.io.read(true)?;
    let mut engine = GroupByEngine::new(a.io.p, a.io.op)?;
    if a.presort {
        tuples = sort_stream(&tuples, &SorterConfig::new(a.k, a.io.p, CompareMode::GroupKey)?)?;
    }
    let results = engine.run(&tuples)?;
    if a.io.verify {
        let want = oracle_groupby(&tuples, a.io.op, Widths::default());
        let got: Vec<(u64, u64)> = results.iter().map(|r| (r.group, r.value)).collect();
        if got != want {
            let at = got.iter().zip(&want).position(|(x, y)| x != y).unwrap_or(got.len().min(want.len()));
            return Err(AppError::Verify(format!(
                "group-by output differs from the reference at row {at} ({} rows vs {})",
                got.len(),
                want.len()
            )));
        }
    }
    let rows: Vec<GroupRow> = results.iter().map(|r| GroupRow { group: r.group, value: r.value }).collect();
    emit(&a.io.out, a.io.format_out, "group,value", &rows, |r| format!("{},{}", r.group, r.value))
}

pub fn swag(tuples: &[Tuple], cfg: SwagConfig) -> Result<Vec<SwagResult>, AppError> {
    Ok(SwagEngine::configure(cfg)?.run(tuples)?)
}

pub fn cmd_swag(a: &SwagArgs) -> Result<(), AppError> {
    let grouped = a.groups == OnOff::On;
    let cfg = SwagConfig::new(a.ws, a.wa, a.io.op, a.io.p, a.k).grouped(grouped);
    let mut engine = SwagEngine::configure(cfg)?;
    let tuples = a.io.read(grouped)?;
    let results = engine.run(&tuples)?;
    if a.io.verify {
        let want = oracle_swag(&tuples, a.ws, a.wa, a.io.op, grouped, cfg.widths);
        if results != want {
            let at = results.iter().zip(&want).position(|(x, y)| x != y).unwrap_or(results.len().min(want.len()));
            return Err(AppError::Verify(format!(
                "window output differs from the reference at row {at} ({} rows vs {})",
                results.len(),
                want.len()
            )));
        }
    }
    let rows: Vec<SwagRow> = results
        .iter()
        .map(|r| SwagRow { window_id: r.window_id, group: r.group, kind: r.kind.to_string(), value: r.value })
        .collect();
    emit(&a.io.out, a.io.format_out, "window_id,group,kind,value", &rows, |r| {
        format!("{},{},{},{}", r.window_id, r.group, r.kind, r.value)
    })
}

pub fn cmd_perf(a: &PerfArgs) -> Result<(), AppError> {
    let grid = Grid::parse(&a.grid)?;
    let rows = grid::run(&grid)?;
    with_output(&a.out, |w| grid::write_csv(&rows, w))
}

pub fn run(cli: &Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Groupby(a) => cmd_groupby(a),
        Command::Swag(a) => cmd_swag(a),
        Command::Perf(a) => cmd_perf(a),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed early, e.g. `| head`
        Err(AppError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aggpipe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
