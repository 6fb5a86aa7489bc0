//! File formats, dataset generation, perf sweeps and the `aggpipe` command
//! line, on top of [`aggpipe_core`].

pub mod cli;
pub mod error;
pub mod gen;
pub mod grid;
pub mod io;

pub use error::AppError;
