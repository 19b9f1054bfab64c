//! On-disk formats: feature matrices, labels, tags, packed codes, traces
//! and block dumps.
//!
//! Binary formats are little-endian with a four-byte magic. Text readers
//! report the 1-based line of the first malformed entry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::blocks::BlockPartition;
use crate::data::RawDataset;
use crate::error::{Error, Result};
use crate::inference::{words_for_bits, CodeMatrix};

pub const FEATURE_MAGIC: &[u8; 4] = b"THD1";
pub const CODE_MAGIC: &[u8; 4] = b"FHCB";

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_owned(), line, message: message.into() }
}

pub(crate) fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn ensure_eof<R: Read>(r: &mut R, what: &str) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::format(format!("trailing bytes after {what}"))),
    }
}

/// Writes the binary feature format. Values are narrowed to `f32`.
pub fn write_features_binary<W: Write>(mut w: W, data: &RawDataset) -> Result<()> {
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(data.n() as u32).to_le_bytes())?;
    w.write_all(&(data.d() as u32).to_le_bytes())?;
    for &v in data.values() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Reads the binary feature format after its magic has been consumed.
fn read_features_binary_body<R: Read>(mut r: R) -> Result<RawDataset> {
    let n = read_u32(&mut r, "feature header")? as usize;
    let d = read_u32(&mut r, "feature header")? as usize;
    let count = n.checked_mul(d).ok_or_else(|| Error::format("feature matrix too large"))?;
    let mut bytes = vec![0u8; count.checked_mul(4).ok_or_else(|| Error::format("feature matrix too large"))?];
    read_exact_or(&mut r, &mut bytes, "feature matrix")?;
    ensure_eof(&mut r, "feature matrix")?;
    let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    RawDataset::new(n, d, values)
}

pub fn read_features_binary<R: Read>(mut r: R) -> Result<RawDataset> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "feature header")?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::format("not a binary feature file"));
    }
    read_features_binary_body(r)
}

/// One row per point, comma-separated, no header.
pub fn read_features_csv<R: BufRead>(r: R, path: &str) -> Result<RawDataset> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                let v: f64 = t.trim().parse().map_err(|_| parse_err(path, lineno, format!("not a number: {t:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(path, lineno, "non-finite value"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("{} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::input(format!("{path}: no feature rows")));
    }
    RawDataset::from_rows(&rows)
}

pub fn write_features_csv<W: Write>(mut w: W, data: &RawDataset) -> Result<()> {
    for i in 0..data.n() {
        let row: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Loads features, choosing the format by the file's leading magic.
pub fn load_features(path: &Path) -> Result<RawDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let head = r.fill_buf()?;
    if head.starts_with(FEATURE_MAGIC) {
        r.consume(4);
        read_features_binary_body(r)
    } else {
        read_features_csv(r, &path.display().to_string())
    }
}

pub fn save_features_binary(path: &Path, data: &RawDataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_features_binary(&mut w, data)?;
    w.flush()?;
    Ok(())
}

/// One integer label per line.
pub fn read_labels<R: BufRead>(r: R, path: &str) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            return Err(parse_err(path, idx + 1, "empty label line"));
        }
        out.push(t.parse().map_err(|_| parse_err(path, idx + 1, format!("not an integer label: {t:?}")))?);
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[i64]) -> Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<i64>> {
    read_labels(BufReader::new(File::open(path)?), &path.display().to_string())
}

/// One line per point, whitespace-separated tag tokens. An empty line is a
/// point without tags.
pub fn read_tags<R: BufRead>(r: R) -> Result<Vec<Vec<String>>> {
    r.lines()
        .map(|line| Ok(line?.split_whitespace().map(str::to_owned).collect()))
        .collect()
}

pub fn load_tags(path: &Path) -> Result<Vec<Vec<String>>> {
    read_tags(BufReader::new(File::open(path)?))
}

/// Packed code file: header, then `ceil(m/64)` words per point.
pub fn write_codes<W: Write>(mut w: W, codes: &CodeMatrix) -> Result<()> {
    w.write_all(CODE_MAGIC)?;
    w.write_all(&(codes.n() as u32).to_le_bytes())?;
    w.write_all(&(codes.m() as u32).to_le_bytes())?;
    for &word in codes.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_codes<R: Read>(mut r: R) -> Result<CodeMatrix> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "code header")?;
    if &magic != CODE_MAGIC {
        return Err(Error::format("not a code file"));
    }
    let n = read_u32(&mut r, "code header")? as usize;
    let m = read_u32(&mut r, "code header")? as usize;
    let count = n
        .checked_mul(words_for_bits(m))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::format("code matrix too large"))?;
    let mut bytes = vec![0u8; count];
    read_exact_or(&mut r, &mut bytes, "code words")?;
    ensure_eof(&mut r, "code words")?;
    let words = bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
    CodeMatrix::from_words(m, n, words)
}

pub fn save_codes(path: &Path, codes: &CodeMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_codes(&mut w, codes)?;
    w.flush()?;
    Ok(())
}

pub fn load_codes(path: &Path) -> Result<CodeMatrix> {
    read_codes(BufReader::new(File::open(path)?))
}

/// `bit,sweep,objective` rows; sweep 0 is the objective after
/// initialisation. Bits are 1-based.
pub fn write_objective_trace<W: Write>(mut w: W, traces: &[Vec<i64>]) -> Result<()> {
    writeln!(w, "bit,sweep,objective")?;
    for (k, t) in traces.iter().enumerate() {
        for (s, v) in t.iter().enumerate() {
            writeln!(w, "{},{s},{v}", k + 1)?;
        }
    }
    Ok(())
}

pub fn read_objective_trace<R: BufRead>(r: R, path: &str) -> Result<Vec<(usize, usize, i64)>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim() != "bit,sweep,objective" {
                return Err(parse_err(path, 1, "expected header bit,sweep,objective"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || parse_err(path, idx + 1, format!("malformed trace row {line:?}"));
        if f.len() != 3 {
            return Err(bad());
        }
        out.push((
            f[0].parse().map_err(|_| bad())?,
            f[1].parse().map_err(|_| bad())?,
            f[2].parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}

/// Per-bit boosting loss, `bit,round,loss`; round 0 is the initial loss.
pub fn write_loss_trace<W: Write>(mut w: W, traces: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "bit,round,loss")?;
    for (k, t) in traces.iter().enumerate() {
        for (q, v) in t.iter().enumerate() {
            writeln!(w, "{},{q},{v}", k + 1)?;
        }
    }
    Ok(())
}

/// One block per line, members separated by spaces.
pub fn write_blocks<W: Write>(mut w: W, partition: &BlockPartition) -> Result<()> {
    for b in partition.blocks() {
        let line: Vec<String> = b.members().iter().map(|i| i.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads a block dump; `n` is the number of points it must cover.
pub fn read_blocks<R: BufRead>(r: R, path: &str, n: Option<usize>) -> Result<BlockPartition> {
    let mut blocks = Vec::new();
    let mut max = 0usize;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let members = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| parse_err(path, idx + 1, format!("not an index: {t:?}"))))
            .collect::<Result<Vec<u32>>>()?;
        max = max.max(members.iter().map(|&i| i as usize + 1).max().unwrap_or(0));
        blocks.push(crate::blocks::Block::new(members));
    }
    BlockPartition::new(blocks, n.unwrap_or(max))
}
