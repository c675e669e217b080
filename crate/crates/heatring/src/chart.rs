//! Plain-SVG chart emission: an epoch band chart, a radial decay chart, and
//! an exposure bar chart. Output is deterministic (no timestamps, fixed
//! number formatting), so rerenders of the same data are byte-identical.

use std::fmt::Write;

use crate::anomaly::{AggregateBand, AggregateRow, RadialProfile};
use crate::exposure::ExposureHistogram;
use crate::numfmt::fmt_sig;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 48.0;

/// Maps data coordinates onto the plot rectangle.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Frame {
        // Degenerate ranges still need a finite scale.
        let (y0, y1) = if y0 == y1 { (y0 - 1.0, y1 + 1.0) } else { (y0, y1) };
        let (x0, x1) = if x0 == x1 { (x0 - 1.0, x1 + 1.0) } else { (x0, x1) };
        Frame { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_B - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn c(v: f64) -> String {
    fmt_sig(v, 6)
}

fn svg_open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<title>{title}</title>\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (px0, px1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (py0, py1) = (HEIGHT - MARGIN_B, MARGIN_T);
    let _ = write!(
        out,
        "<line x1=\"{px0}\" y1=\"{py0}\" x2=\"{px1}\" y2=\"{py0}\" stroke=\"black\"/>\n\
         <line x1=\"{px0}\" y1=\"{py0}\" x2=\"{px0}\" y2=\"{py1}\" stroke=\"black\"/>\n"
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let xp = f.x(xv);
        let yp = f.y(yv);
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{py0}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            c(xp),
            c(xp),
            py0 + 4.0,
            c(xp),
            py0 + 18.0,
            fmt_sig(xv, 4)
        );
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{px0}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            px0 - 4.0,
            c(yp),
            c(yp),
            px0 - 8.0,
            c(yp + 4.0),
            fmt_sig(yv, 4)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (px0 + px1) / 2.0,
        HEIGHT - 12.0,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0
    );
}

/// Contiguous runs of points where `value(row)` is finite.
fn finite_runs(xs: &[f64], rows: &[AggregateRow], value: impl Fn(&AggregateRow) -> f64) -> Vec<Vec<(f64, f64)>> {
    let mut runs = Vec::new();
    let mut run = Vec::new();
    for (&x, row) in xs.iter().zip(rows) {
        let v = value(row);
        if v.is_finite() {
            run.push((x, v));
        } else if !run.is_empty() {
            runs.push(std::mem::take(&mut run));
        }
    }
    if !run.is_empty() {
        runs.push(run);
    }
    runs
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], stroke: &str) {
    if pts.len() < 2 {
        if let Some(&(x, y)) = pts.first() {
            let _ = write!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"{stroke}\"/>\n",
                c(f.x(x)),
                c(f.y(y))
            );
        }
        return;
    }
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", c(f.x(x)), c(f.y(y)))).collect();
    let _ = write!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>\n",
        coords.join(" ")
    );
}

/// min-max envelope as a filled polygon per contiguous finite run.
fn band_polygon(out: &mut String, f: &Frame, xs: &[f64], rows: &[AggregateRow]) {
    let mut run: Vec<(f64, f64, f64)> = Vec::new();
    let flush = |run: &mut Vec<(f64, f64, f64)>, out: &mut String| {
        if run.len() >= 2 {
            let mut pts = String::new();
            for &(x, _, hi) in run.iter() {
                let _ = write!(pts, "{},{} ", c(f.x(x)), c(f.y(hi)));
            }
            for &(x, lo, _) in run.iter().rev() {
                let _ = write!(pts, "{},{} ", c(f.x(x)), c(f.y(lo)));
            }
            let _ = write!(
                out,
                "<polygon points=\"{}\" fill=\"#c6dbef\" stroke=\"none\"/>\n",
                pts.trim_end()
            );
        }
        run.clear();
    };
    for (&x, row) in xs.iter().zip(rows) {
        if row.min.is_finite() && row.max.is_finite() {
            run.push((x, row.min, row.max));
        } else {
            flush(&mut run, out);
        }
    }
    flush(&mut run, out);
}

fn whiskers(out: &mut String, f: &Frame, xs: &[f64], rows: &[AggregateRow]) {
    for (&x, row) in xs.iter().zip(rows) {
        if !(row.p_lo.is_finite() && row.p_hi.is_finite()) {
            continue;
        }
        let xp = c(f.x(x));
        let _ = write!(
            out,
            "<line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#2171b5\"/>\n",
            c(f.y(row.p_lo)),
            c(f.y(row.p_hi))
        );
    }
}

fn aggregate_chart(
    xs: &[f64],
    rows: &[AggregateRow],
    title: &str,
    x_label: &str,
    extra: impl Fn(&mut String, &Frame),
) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in rows {
        for v in [row.mean, row.min, row.max, row.p_lo, row.p_hi] {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let pad = 0.05 * (hi - lo).max(1e-12);
    let f = Frame::new(
        xs.first().copied().unwrap_or(0.0),
        xs.last().copied().unwrap_or(1.0),
        lo - pad,
        hi + pad,
    );
    let mut out = String::new();
    svg_open(&mut out, title);
    band_polygon(&mut out, &f, xs, rows);
    whiskers(&mut out, &f, xs, rows);
    for run in finite_runs(xs, rows, |r| r.mean) {
        polyline(&mut out, &f, &run, "#08306b");
    }
    extra(&mut out, &f);
    axes(&mut out, &f, x_label, "delta degC");
    out.push_str("</svg>\n");
    out
}

/// Mean line, min-max shading, and quantile whiskers on the epoch axis,
/// with a marker at i = 0.
pub fn epoch_band_svg(band: &AggregateBand) -> String {
    let xs: Vec<f64> =
        (0..band.rows.len()).map(|idx| idx as f64 - band.horizon as f64).collect();
    aggregate_chart(
        &xs,
        &band.rows,
        "delta by epoch month",
        "epoch month i",
        |out, f| {
            let xp = c(f.x(0.0));
            let _ = write!(
                out,
                "<line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
                HEIGHT - MARGIN_B,
                MARGIN_T
            );
        },
    )
}

pub fn radial_profile_svg(profile: &RadialProfile) -> String {
    aggregate_chart(
        &profile.r_mid_km,
        &profile.rows,
        "delta by distance",
        "distance km",
        |_, _| {},
    )
}

/// Population per delta bin as bars.
pub fn exposure_svg(hist: &ExposureHistogram) -> String {
    let n = hist.bins.len().max(1);
    let x1 = n as f64 * hist.bin_width;
    let top = hist.bins.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let f = Frame::new(0.0, x1, 0.0, top * 1.05);
    let mut out = String::new();
    svg_open(&mut out, "population by delta bin");
    for (i, &pop) in hist.bins.iter().enumerate() {
        if pop <= 0.0 {
            continue;
        }
        let (lo, hi) = hist.bin_edges(i);
        let x = f.x(lo);
        let w = f.x(hi) - f.x(lo);
        let y = f.y(pop);
        let h = f.y(0.0) - y;
        let _ = write!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#6baed6\" stroke=\"#08306b\"/>\n",
            c(x),
            c(y),
            c(w),
            c(h)
        );
    }
    axes(&mut out, &f, "delta degC", "population");
    out.push_str("</svg>\n");
    out
}
