//! Text formats for matrices and vectors.
//!
//! Matrix: `%%OMV bitmatrix <m> <n>`, then `dense` (m lines of n `0`/`1`
//! characters) or `coo` (one `i j` pair per line until EOF).
//! Vector: one decimal per line.

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::BitMatrix;
use crate::error::{OmvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Dense,
    Coo,
}

pub(crate) fn parse_header(line: &str, lineno: usize, kind: &str) -> Result<Vec<usize>> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("%%OMV") || tokens.next() != Some(kind) {
        return Err(OmvError::parse(
            lineno,
            format!("expected header `%%OMV {kind} ...`"),
        ));
    }
    tokens
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| OmvError::parse(lineno, format!("bad dimension `{t}`")))
        })
        .collect()
}

pub fn read_matrix<R: BufRead>(reader: R) -> Result<BitMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(OmvError::parse(1, "empty input")),
    };
    let dims = parse_header(&header, lineno, "bitmatrix")?;
    let &[rows, cols] = dims.as_slice() else {
        return Err(OmvError::parse(lineno, "header needs exactly <m> <n>"));
    };
    let (lineno, mode) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(OmvError::parse(2, "missing `dense` or `coo` line")),
    };
    let mut m = BitMatrix::zeros(rows, cols);
    match mode.trim() {
        "dense" => {
            for i in 0..rows {
                let (lineno, line) = match lines.next() {
                    Some((n, l)) => (n, l?),
                    None => {
                        return Err(OmvError::parse(
                            lineno + i + 1,
                            format!("expected {rows} rows, found {i}"),
                        ))
                    }
                };
                let line = line.trim_end();
                if line.len() != cols {
                    return Err(OmvError::parse(
                        lineno,
                        format!("expected {cols} columns, found {}", line.len()),
                    ));
                }
                for (j, c) in line.bytes().enumerate() {
                    match c {
                        b'0' => {}
                        b'1' => m.set(i, j, true),
                        other => {
                            return Err(OmvError::parse(
                                lineno,
                                format!("illegal character `{}`", other as char),
                            ))
                        }
                    }
                }
            }
            for (lineno, line) in lines {
                if !line?.trim().is_empty() {
                    return Err(OmvError::parse(lineno, "more rows than declared"));
                }
            }
        }
        "coo" => {
            for (lineno, line) in lines {
                let line = line?;
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let parsed: Vec<usize> = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse()
                            .map_err(|_| OmvError::parse(lineno, format!("bad index `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                let &[i, j] = parsed.as_slice() else {
                    return Err(OmvError::parse(lineno, "expected `i j`"));
                };
                if i >= rows || j >= cols {
                    return Err(OmvError::parse(
                        lineno,
                        format!("entry ({i}, {j}) outside {rows}x{cols}"),
                    ));
                }
                m.set(i, j, true);
            }
        }
        other => {
            return Err(OmvError::parse(
                lineno,
                format!("expected `dense` or `coo`, found `{other}`"),
            ))
        }
    }
    Ok(m)
}

pub fn write_matrix<W: Write>(m: &BitMatrix, mut w: W, format: MatrixFormat) -> Result<()> {
    writeln!(w, "%%OMV bitmatrix {} {}", m.rows(), m.cols())?;
    match format {
        MatrixFormat::Dense => {
            writeln!(w, "dense")?;
            let mut line = String::with_capacity(m.cols());
            for i in 0..m.rows() {
                line.clear();
                line.extend((0..m.cols()).map(|j| if m.get(i, j) { '1' } else { '0' }));
                writeln!(w, "{line}")?;
            }
        }
        MatrixFormat::Coo => {
            writeln!(w, "coo")?;
            for (i, j) in m.coords() {
                writeln!(w, "{i} {j}")?;
            }
        }
    }
    Ok(())
}

/// Reads one value per non-blank line.
pub fn read_vector<T: FromStr, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| OmvError::parse(i + 1, format!("bad number `{t}`")))?,
        );
    }
    Ok(out)
}

pub fn write_vector<T: Display, W: Write>(v: &[T], mut w: W) -> Result<()> {
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}
