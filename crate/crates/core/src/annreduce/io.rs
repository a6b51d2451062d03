//! Point-set files: a `n d` header line, then `2n` lines of `d`
//! space-separated `0`/`1` digits, the `A` block followed by the `B` block.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

/// Parses a point-set file into `(A, B)`. Blank lines are skipped; errors
/// carry the 1-based line number.
pub fn read_points<R: BufRead>(reader: R) -> Result<(Vec<Vec<u8>>, Vec<Vec<u8>>)> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (hline, header) = match lines.next() {
        Some((no, l)) => (no, l?),
        None => return Err(format_err(1, "empty file, expected `n d` header")),
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format_err(hline, format!("bad header `{header}`")))?;
    let [n, d] = dims[..] else {
        return Err(format_err(hline, format!("header needs two integers, got `{header}`")));
    };

    let mut points = Vec::with_capacity(2 * n);
    for (no, line) in lines.by_ref().take(2 * n) {
        let line = line?;
        let p = line
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(format_err(no, format!("expected 0 or 1, got `{tok}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if p.len() != d {
            return Err(format_err(no, format!("expected {d} digits, got {}", p.len())));
        }
        points.push(p);
    }
    if points.len() < 2 * n {
        return Err(format_err(
            hline + points.len() + 1,
            format!("expected {} point lines, found {}", 2 * n, points.len()),
        ));
    }
    if let Some((no, _)) = lines.next() {
        return Err(format_err(no, "trailing data after the B block"));
    }
    let b = points.split_off(n);
    Ok((points, b))
}

pub fn write_points<W: Write>(mut w: W, a: &[Vec<u8>], b: &[Vec<u8>]) -> Result<()> {
    let d = a.first().map_or(0, Vec::len);
    writeln!(w, "{} {}", a.len(), d)?;
    for p in a.iter().chain(b) {
        let row: Vec<&str> = p.iter().map(|&x| if x == 0 { "0" } else { "1" }).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}
