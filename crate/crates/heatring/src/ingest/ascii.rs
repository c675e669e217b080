//! ESRI ASCII Grid reader/writer.
//!
//! Layout: six header lines (NCOLS, NROWS, XLLCORNER, YLLCORNER, CELLSIZE,
//! NODATA_VALUE, keys case-insensitive, in that order), then `nrows` lines of
//! `ncols` whitespace-separated numbers, row 0 = north. Cells equal to the
//! NODATA sentinel become NaN in memory; `write_grid` reinstates the
//! sentinel. Numbers are written with Rust's shortest round-trip formatting,
//! so write-then-read is the identity on values.

use std::fs;
use std::path::Path;

use crate::error::{GridParseError, GridParseErrorKind, IngestError};
use crate::grid::GridSpec;
use crate::stack::Grid;

const HEADER_KEYS: [&str; 6] =
    ["NCOLS", "NROWS", "XLLCORNER", "YLLCORNER", "CELLSIZE", "NODATA_VALUE"];

/// Tokens of one line with their 1-based starting columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i > start {
            out.push((start + 1, &line[start..i]));
        }
    }
    out
}

fn err(line: usize, col: usize, kind: GridParseErrorKind) -> GridParseError {
    GridParseError { line, col, kind }
}

/// Parses a complete ASCII grid document. Must never panic: malformed input
/// yields an error naming the offending line and column. Memory use is
/// proportional to the input length, not to the header's claimed dimensions.
pub fn parse_grid(text: &str) -> Result<Grid, GridParseError> {
    let mut lines = text.lines().enumerate();

    let mut header = [0.0f64; 6];
    for (i, key) in HEADER_KEYS.iter().enumerate() {
        let line_no = i + 1;
        let (_, line) = lines
            .next()
            .ok_or_else(|| err(line_no, 1, GridParseErrorKind::MissingHeader { expected: key }))?;
        let toks = tokens(line);
        let (kcol, ktok) = *toks
            .first()
            .ok_or_else(|| err(line_no, 1, GridParseErrorKind::MissingHeader { expected: key }))?;
        if !ktok.eq_ignore_ascii_case(key) {
            return Err(err(
                line_no,
                kcol,
                GridParseErrorKind::BadHeaderKey { expected: key, found: ktok.to_string() },
            ));
        }
        let bad_value = |col: usize, token: &str| {
            err(line_no, col, GridParseErrorKind::BadHeaderValue { key, token: token.to_string() })
        };
        let (vcol, vtok) =
            *toks.get(1).ok_or_else(|| bad_value(line.len() + 1, ""))?;
        if let Some(&(extra_col, extra)) = toks.get(2) {
            return Err(bad_value(extra_col, extra));
        }
        header[i] = if i < 2 {
            // Dimensions must be non-negative integers; range is checked by
            // GridSpec::validate below.
            vtok.parse::<u64>().map_err(|_| bad_value(vcol, vtok))? as f64
        } else {
            let v: f64 = vtok.parse().map_err(|_| bad_value(vcol, vtok))?;
            if !v.is_finite() {
                return Err(bad_value(vcol, vtok));
            }
            v
        };
    }

    let spec = GridSpec::new(
        header[0] as usize,
        header[1] as usize,
        header[2],
        header[3],
        header[4],
        header[5],
    )
    .map_err(|e| err(6, 1, e.into()))?;

    let mut values = Vec::new();
    let mut rows_read = 0usize;
    let mut last_line_no = 6;
    for (i, line) in lines {
        let line_no = i + 1;
        last_line_no = line_no;
        let toks = tokens(line);
        if rows_read == spec.nrows {
            // Only whitespace may follow the data block.
            if let Some(&(col, _)) = toks.first() {
                return Err(err(
                    line_no,
                    col,
                    GridParseErrorKind::TrailingData { expected: spec.nrows },
                ));
            }
            continue;
        }
        if toks.len() != spec.ncols {
            let col = toks.get(spec.ncols).map_or(line.len() + 1, |&(c, _)| c);
            return Err(err(
                line_no,
                col,
                GridParseErrorKind::WrongCellCount { expected: spec.ncols, found: toks.len() },
            ));
        }
        for (col, tok) in toks {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(line_no, col, GridParseErrorKind::BadNumber { token: tok.to_string() }))?;
            if v.is_infinite() {
                return Err(err(line_no, col, GridParseErrorKind::BadNumber { token: tok.to_string() }));
            }
            values.push(if v == spec.nodata { f64::NAN } else { v });
        }
        rows_read += 1;
    }
    if rows_read < spec.nrows {
        return Err(err(
            last_line_no + 1,
            1,
            GridParseErrorKind::MissingRow { expected: spec.nrows, found: rows_read },
        ));
    }
    Ok(Grid { spec, values })
}

/// Serializes a grid back to the ASCII format. NaN cells are written as the
/// spec's NODATA sentinel.
pub fn write_grid(grid: &Grid) -> String {
    use std::fmt::Write;
    let s = &grid.spec;
    let mut out = String::new();
    let _ = writeln!(out, "NCOLS {}", s.ncols);
    let _ = writeln!(out, "NROWS {}", s.nrows);
    let _ = writeln!(out, "XLLCORNER {}", s.xll_deg);
    let _ = writeln!(out, "YLLCORNER {}", s.yll_deg);
    let _ = writeln!(out, "CELLSIZE {}", s.cellsize_deg);
    let _ = writeln!(out, "NODATA_VALUE {}", s.nodata);
    for row in grid.values.chunks(s.ncols) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if v.is_nan() {
                let _ = write!(out, "{}", s.nodata);
            } else {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn load_grid(path: &Path) -> Result<Grid, IngestError> {
    let text = fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_grid(&text)
        .map_err(|source| IngestError::GridParse { path: path.to_path_buf(), source })
}

pub fn save_grid(path: &Path, grid: &Grid) -> Result<(), IngestError> {
    fs::write(path, write_grid(grid))
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}
