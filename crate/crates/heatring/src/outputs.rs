//! Result files: CSV tables and JSON summaries. Writers emit exactly the
//! bytes the determinism contract promises (LF line endings, 9 significant
//! digits, `NaN` for missing), and readers parse those files back for
//! downstream stages.

use std::io::{self, Write};

use crate::anomaly::{
    AggregateBand, AggregateRow, Crossing, DecayMetrics, EpochDeltaSeries, RadialProfile,
    SiteRingDelta, TableRow,
};
use crate::error::Error;
use crate::exposure::ExposureHistogram;
use crate::numfmt::fmt_csv;
use crate::preprocess::DropReason;

pub const EPOCH_BAND_HEADER: &str = "i,mean,min,max,p2.5,p97.5,n_sites";
pub const RADIAL_HEADER: &str = "r_mid_km,mean,min,max,p2.5,p97.5,n_sites";
pub const TABLE_HEADER: &str = "k,average,minimum,maximum";
pub const HIST_HEADER: &str = "bin_lo_degC,bin_hi_degC,population";
pub const DROPPED_HEADER: &str = "site_id,reason_code,valid_fraction";
pub const SITE_EPOCH_HEADER: &str = "site_id,i,delta_degC";
pub const SITE_RADIAL_HEADER: &str = "site_id,r_mid_km,delta_degC";

/// A site removed before analysis; `valid_fraction` is NaN when the reason
/// is not validity-based.
#[derive(Debug, Clone)]
pub struct DroppedSite {
    pub site_id: String,
    pub reason: DropReason,
    pub valid_fraction: f64,
}

/// Quotes a CSV field only when it needs it, so the common case stays
/// byte-stable and diff-friendly.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_aggregate_row<W: Write>(w: &mut W, label: &str, row: &AggregateRow) -> io::Result<()> {
    writeln!(
        w,
        "{label},{},{},{},{},{},{}",
        fmt_csv(row.mean),
        fmt_csv(row.min),
        fmt_csv(row.max),
        fmt_csv(row.p_lo),
        fmt_csv(row.p_hi),
        row.n_sites
    )
}

pub fn write_epoch_band_csv<W: Write>(w: &mut W, band: &AggregateBand) -> io::Result<()> {
    writeln!(w, "{EPOCH_BAND_HEADER}")?;
    for (idx, row) in band.rows.iter().enumerate() {
        let i = idx as i64 - band.horizon as i64;
        write_aggregate_row(w, &i.to_string(), row)?;
    }
    Ok(())
}

pub fn write_radial_csv<W: Write>(w: &mut W, profile: &RadialProfile) -> io::Result<()> {
    writeln!(w, "{RADIAL_HEADER}")?;
    for (mid, row) in profile.r_mid_km.iter().zip(&profile.rows) {
        write_aggregate_row(w, &fmt_csv(*mid), row)?;
    }
    Ok(())
}

pub fn write_table_csv<W: Write>(w: &mut W, rows: &[TableRow]) -> io::Result<()> {
    writeln!(w, "{TABLE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.k,
            fmt_csv(r.average),
            fmt_csv(r.minimum),
            fmt_csv(r.maximum)
        )?;
    }
    Ok(())
}

pub fn write_hist_csv<W: Write>(w: &mut W, hist: &ExposureHistogram) -> io::Result<()> {
    writeln!(w, "{HIST_HEADER}")?;
    for (i, pop) in hist.bins.iter().enumerate() {
        let (lo, hi) = hist.bin_edges(i);
        writeln!(w, "{},{},{}", fmt_csv(lo), fmt_csv(hi), fmt_csv(*pop))?;
    }
    Ok(())
}

pub fn write_dropped_csv<W: Write>(w: &mut W, rows: &[DroppedSite]) -> io::Result<()> {
    writeln!(w, "{DROPPED_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", csv_field(&r.site_id), r.reason.code(), fmt_csv(r.valid_fraction))?;
    }
    Ok(())
}

/// Long-format per-site epoch deltas, i = -horizon..=horizon per site.
pub fn write_site_epoch_csv<W: Write>(w: &mut W, series: &[EpochDeltaSeries]) -> io::Result<()> {
    writeln!(w, "{SITE_EPOCH_HEADER}")?;
    for s in series {
        for (idx, delta) in s.deltas.iter().enumerate() {
            let i = idx as i64 - s.horizon as i64;
            writeln!(w, "{},{},{}", csv_field(&s.site_id), i, fmt_csv(*delta))?;
        }
    }
    Ok(())
}

/// Long-format per-site ring deltas.
pub fn write_site_radial_csv<W: Write>(w: &mut W, rows: &[SiteRingDelta]) -> io::Result<()> {
    writeln!(w, "{SITE_RADIAL_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            csv_field(&r.site_id),
            fmt_csv(r.r_mid_km),
            fmt_csv(r.delta)
        )?;
    }
    Ok(())
}

fn crossing_json(c: &Crossing) -> serde_json::Value {
    match c {
        Crossing::AtKm(km) => serde_json::json!(km),
        Crossing::BeyondRange => serde_json::Value::Null,
    }
}

/// Decay metrics as a JSON document. Crossings beyond the profiled range
/// serialize as null.
pub fn decay_metrics_json(m: &DecayMetrics) -> String {
    let doc = serde_json::json!({
        "peak_degC": m.peak,
        "fraction": m.fraction,
        "d_fraction_km": crossing_json(&m.d_fraction_km),
        "abs_level_degC": m.abs_level_degc,
        "d_abs_km": crossing_json(&m.d_abs_km),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("finite fields");
    s.push('\n');
    s
}

pub fn exposure_summary_json(
    hist: &ExposureHistogram,
    r_max_km: f64,
    min_delta: f64,
    total_affected: f64,
) -> String {
    let doc = serde_json::json!({
        "total_population_binned": hist.total,
        "min_delta_degC": min_delta,
        "total_affected": total_affected,
        "dedup": hist.dedup.label(),
        "r_max_km": r_max_km,
        "bin_width_degC": hist.bin_width,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("finite fields");
    s.push('\n');
    s
}

fn parse_f64(field: &str, line: u64, text: &str) -> Result<f64, Error> {
    text.parse::<f64>().map_err(|_| {
        Error::Config(crate::error::ConfigError::Parse(format!(
            "line {line}: bad {field} value {text:?}"
        )))
    })
}

/// One parsed row of an aggregate CSV (epoch band or radial profile).
#[derive(Debug, Clone)]
pub struct AggregateCsvRow {
    /// Epoch index i or ring midpoint km, per file kind.
    pub x: f64,
    pub row: AggregateRow,
}

fn read_aggregate_csv(text: &str, header: &str) -> Result<Vec<AggregateCsvRow>, Error> {
    let bad = |msg: String| Error::Config(crate::error::ConfigError::Parse(msg));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        other => return Err(bad(format!("expected header {header:?}, got {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i as u64 + 2;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(format!("line {line_no}: expected 7 fields, got {}", f.len())));
        }
        rows.push(AggregateCsvRow {
            x: parse_f64("x", line_no, f[0])?,
            row: AggregateRow {
                mean: parse_f64("mean", line_no, f[1])?,
                min: parse_f64("min", line_no, f[2])?,
                max: parse_f64("max", line_no, f[3])?,
                p_lo: parse_f64("p_lo", line_no, f[4])?,
                p_hi: parse_f64("p_hi", line_no, f[5])?,
                n_sites: f[6]
                    .parse()
                    .map_err(|_| bad(format!("line {line_no}: bad n_sites {:?}", f[6])))?,
            },
        });
    }
    Ok(rows)
}

pub fn read_epoch_band_csv(text: &str) -> Result<Vec<AggregateCsvRow>, Error> {
    read_aggregate_csv(text, EPOCH_BAND_HEADER)
}

pub fn read_radial_csv(text: &str) -> Result<Vec<AggregateCsvRow>, Error> {
    read_aggregate_csv(text, RADIAL_HEADER)
}

/// Parsed histogram row: [lo, hi) and its population.
#[derive(Debug, Clone, Copy)]
pub struct HistCsvRow {
    pub lo: f64,
    pub hi: f64,
    pub population: f64,
}

pub fn read_hist_csv(text: &str) -> Result<Vec<HistCsvRow>, Error> {
    let bad = |msg: String| Error::Config(crate::error::ConfigError::Parse(msg));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HIST_HEADER => {}
        other => return Err(bad(format!("expected header {HIST_HEADER:?}, got {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i as u64 + 2;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad(format!("line {line_no}: expected 3 fields, got {}", f.len())));
        }
        rows.push(HistCsvRow {
            lo: parse_f64("bin_lo", line_no, f[0])?,
            hi: parse_f64("bin_hi", line_no, f[1])?,
            population: parse_f64("population", line_no, f[2])?,
        });
    }
    Ok(rows)
}
