//! Stream files.
//!
//! CSV holds one `group,key` pair of decimal integers per line, or just the
//! key when the stream has no groups. Blank lines and lines starting with
//! `#` are skipped. The binary form is a packed array of little-endian
//! `u32` records: group then key, or key only.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use aggpipe_core::Tuple;

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    /// `.bin` means binary, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("bin") => Format::Bin,
            _ => Format::Csv,
        }
    }

    pub fn record_size(self, grouped: bool) -> usize {
        if grouped {
            8
        } else {
            4
        }
    }
}

fn field(path: &Path, line: usize, s: &str) -> Result<u64, AppError> {
    s.trim().parse::<u32>().map(u64::from).map_err(|_| AppError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("{:?} is not a 32-bit unsigned integer", s.trim()),
    })
}

/// Parses CSV text. In group-less mode a line may still carry a group
/// column; it is ignored.
pub fn parse_csv(text: impl BufRead, grouped: bool, path: &Path) -> Result<Vec<Tuple>, AppError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let n = i + 1;
        let cols: Vec<&str> = l.split(',').collect();
        let t = match (cols.as_slice(), grouped) {
            ([g, k], true) => Tuple::new(field(path, n, g)?, field(path, n, k)?),
            ([_, k], false) | ([k], false) => Tuple::ungrouped(field(path, n, k)?),
            _ => {
                return Err(AppError::Parse {
                    path: path.to_path_buf(),
                    line: n,
                    msg: format!("expected {} column(s), found {}", if grouped { 2 } else { 1 }, cols.len()),
                })
            }
        };
        out.push(t);
    }
    Ok(out)
}

pub fn parse_bin(bytes: &[u8], grouped: bool, path: &Path) -> Result<Vec<Tuple>, AppError> {
    let rec = Format::Bin.record_size(grouped);
    if !bytes.len().is_multiple_of(rec) {
        return Err(AppError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("length {} is not a multiple of the {rec}-byte record", bytes.len()),
        });
    }
    let word = |b: &[u8]| u64::from(u32::from_le_bytes(b.try_into().expect("4-byte slice")));
    Ok(bytes
        .chunks_exact(rec)
        .map(|r| if grouped { Tuple::new(word(&r[..4]), word(&r[4..])) } else { Tuple::ungrouped(word(r)) })
        .collect())
}

/// Reads a stream file; `-` is standard input.
pub fn read_tuples(path: &Path, format: Format, grouped: bool) -> Result<Vec<Tuple>, AppError> {
    let mut bytes = Vec::new();
    if path == Path::new("-") {
        std::io::stdin().read_to_end(&mut bytes).map_err(|e| AppError::io(path, e))?;
    } else {
        bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    }
    match format {
        Format::Csv => parse_csv(BufReader::new(bytes.as_slice()), grouped, path),
        Format::Bin => parse_bin(&bytes, grouped, path),
    }
}

fn narrow(v: u64) -> std::io::Result<u32> {
    u32::try_from(v).map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{v} exceeds 32 bits")))
}

pub fn encode(tuples: &[Tuple], format: Format, grouped: bool, mut w: impl Write) -> std::io::Result<()> {
    for t in tuples {
        match (format, grouped) {
            (Format::Csv, true) => writeln!(w, "{},{}", t.group, t.key)?,
            (Format::Csv, false) => writeln!(w, "{}", t.key)?,
            (Format::Bin, true) => {
                w.write_all(&narrow(t.group)?.to_le_bytes())?;
                w.write_all(&narrow(t.key)?.to_le_bytes())?;
            }
            (Format::Bin, false) => w.write_all(&narrow(t.key)?.to_le_bytes())?,
        }
    }
    w.flush()
}

/// Writes to a file, or standard output for `-`.
pub fn with_output<F>(path: &Path, f: F) -> Result<(), AppError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let res = if path == Path::new("-") {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        f(&mut lock)
    } else {
        fs::File::create(path).and_then(|file| {
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        })
    };
    res.map_err(|e| AppError::io(PathBuf::from(path), e))
}

pub fn write_tuples(path: &Path, tuples: &[Tuple], format: Format, grouped: bool) -> Result<(), AppError> {
    with_output(path, |w| encode(tuples, format, grouped, w))
}
