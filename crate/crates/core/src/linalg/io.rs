//! Text and binary matrix files.
//!
//! Text: a `rows cols` header line followed by `rows` lines of `cols`
//! whitespace-separated reals. Binary: the magic bytes `PATN`, `rows` and
//! `cols` as little-endian `u64`, then `rows * cols` little-endian `f64`
//! values in row-major order. A file may hold several matrices back to
//! back; all must use the same encoding.

use std::io::{Read, Write};

use super::DenseMatrix;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"PATN";

/// Reads every matrix in `reader`, detecting the encoding from the first
/// four bytes.
pub fn read_matrices<R: Read>(mut reader: R) -> Result<Vec<DenseMatrix>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format {
            line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
            message: "file is neither UTF-8 text nor PATN binary".into(),
        })?;
        read_text(text)
    }
}

fn read_text(text: &str) -> Result<Vec<DenseMatrix>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut out = Vec::new();
    while let Some((line, header)) = lines.next() {
        let dims = parse_fields::<usize>(header, line)?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Format {
                line,
                message: format!("expected `rows cols`, found {} fields", dims.len()),
            });
        };
        if rows == 0 || cols == 0 {
            return Err(Error::Format {
                line,
                message: format!("matrix shape {rows}x{cols} is empty"),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let Some((line, body)) = lines.next() else {
                return Err(Error::Format {
                    line: line + r + 1,
                    message: format!("expected {rows} rows, file ended after {r}"),
                });
            };
            let vals = parse_fields::<f64>(body, line)?;
            if vals.len() != cols {
                return Err(Error::Format {
                    line,
                    message: format!("expected {cols} values, found {}", vals.len()),
                });
            }
            if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                return Err(Error::Format {
                    line,
                    message: format!("non-finite value {v}"),
                });
            }
            data.extend(vals);
        }
        out.push(DenseMatrix::from_raw(rows, cols, data));
    }
    if out.is_empty() {
        return Err(Error::Format {
            line: 1,
            message: "no matrix found".into(),
        });
    }
    Ok(out)
}

fn parse_fields<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| Error::Format {
                line,
                message: format!("cannot parse `{tok}`"),
            })
        })
        .collect()
}

fn read_binary(mut bytes: &[u8]) -> Result<Vec<DenseMatrix>> {
    // Binary files have no lines; the "line" reported is the matrix index.
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let idx = out.len() + 1;
        let err = |message: String| Error::Format { line: idx, message };
        if bytes.len() < 20 || &bytes[..4] != BINARY_MAGIC {
            return Err(err("missing PATN header".into()));
        }
        let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        bytes = &bytes[20..];
        let count = rows
            .checked_mul(cols)
            .filter(|&c| c > 0)
            .ok_or_else(|| err(format!("invalid shape {rows}x{cols}")))?;
        if bytes.len() < count * 8 {
            return Err(err(format!(
                "truncated payload: need {} bytes, have {}",
                count * 8,
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes[..count * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        bytes = &bytes[count * 8..];
        let m = DenseMatrix::new(rows, cols, data).map_err(|e| err(e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

/// Writes `m` in the text encoding using shortest round-trip formatting.
pub fn write_text<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let mut first = true;
        for v in m.row(i) {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            write!(w, "{v:?}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
