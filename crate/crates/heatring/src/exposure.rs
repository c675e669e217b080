//! Population exposure: coarsen fine population grids by block sums, map
//! each population cell to the delta it experiences via the radial profile,
//! and histogram population by that delta.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::anomaly::RadialProfile;
use crate::error::ExposureError;
use crate::grid::{cells_within_radius, GeoPoint, GridSpec};
use crate::stack::Grid;

/// How overlapping site disks are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dedup {
    /// Each person counted once, at the maximum delta over covering sites.
    Max,
    /// No dedup: a cell contributes once per covering site.
    PerSite,
}

impl Dedup {
    pub fn label(&self) -> &'static str {
        match self {
            Dedup::Max => "max",
            Dedup::PerSite => "per-site",
        }
    }
}

/// Population binned by experienced delta. Bin i covers
/// [i·bin_width, (i+1)·bin_width); bin 0 starts at 0 °C, and cells with a
/// negative delta are not counted.
#[derive(Debug, Clone)]
pub struct ExposureHistogram {
    pub bin_width: f64,
    pub bins: Vec<f64>,
    pub total: f64,
    pub dedup: Dedup,
}

impl ExposureHistogram {
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        (i as f64 * self.bin_width, (i + 1) as f64 * self.bin_width)
    }
}

#[derive(Debug, Clone)]
pub struct CoarsenOutcome {
    pub grid: Grid,
    /// Fine NODATA cells treated as zero population.
    pub nodata_as_zero: usize,
}

/// Sums factor×factor blocks of a fine population grid (counts per cell)
/// into a coarse grid. NODATA cells count as zero and are tallied. Block
/// sums run in row-major order, so totals of integer-valued populations are
/// preserved exactly.
pub fn coarsen_population(fine: &Grid, factor: usize) -> Result<CoarsenOutcome, ExposureError> {
    if factor == 0 {
        return Err(ExposureError::BadFactor);
    }
    let spec = fine.spec;
    if spec.nrows % factor != 0 || spec.ncols % factor != 0 {
        return Err(ExposureError::NotDivisible {
            nrows: spec.nrows,
            ncols: spec.ncols,
            factor,
        });
    }
    let coarse_spec = GridSpec {
        ncols: spec.ncols / factor,
        nrows: spec.nrows / factor,
        cellsize_deg: spec.cellsize_deg * factor as f64,
        ..spec
    };
    let mut grid = Grid::constant(coarse_spec, 0.0);
    let mut nodata_as_zero = 0usize;
    for crow in 0..coarse_spec.nrows {
        for ccol in 0..coarse_spec.ncols {
            let mut sum = 0.0;
            for dr in 0..factor {
                for dc in 0..factor {
                    let v = fine.get(crow * factor + dr, ccol * factor + dc);
                    if v.is_nan() {
                        nodata_as_zero += 1;
                    } else {
                        sum += v;
                    }
                }
            }
            grid.set(crow, ccol, sum);
        }
    }
    Ok(CoarsenOutcome { grid, nodata_as_zero })
}

/// Radial delta as a function of distance: piecewise-linear between ring
/// midpoints, constant inside the first midpoint and from the last midpoint
/// out to r_max, zero beyond r_max. Rings without data are skipped.
#[derive(Debug, Clone)]
pub struct DeltaCurve {
    pub r_max_km: f64,
    /// (midpoint km, delta °C), strictly increasing in km, NaN-free.
    pub points: Vec<(f64, f64)>,
}

impl DeltaCurve {
    pub fn new(
        label: &str,
        r_max_km: f64,
        mids: &[f64],
        deltas: &[f64],
    ) -> Result<Self, ExposureError> {
        let points: Vec<(f64, f64)> = mids
            .iter()
            .zip(deltas)
            .filter(|(_, d)| !d.is_nan())
            .map(|(&x, &d)| (x, d))
            .collect();
        if points.is_empty() {
            return Err(ExposureError::EmptyProfile { site_id: label.to_string() });
        }
        Ok(DeltaCurve { r_max_km, points })
    }

    /// Curve through the MEAN rows of an aggregate profile.
    pub fn from_profile(profile: &RadialProfile) -> Result<Self, ExposureError> {
        let means: Vec<f64> = profile.rows.iter().map(|r| r.mean).collect();
        DeltaCurve::new("aggregate", profile.r_max_km, &profile.r_mid_km, &means)
    }

    pub fn delta_at(&self, d_km: f64) -> f64 {
        debug_assert!(d_km >= 0.0);
        if d_km > self.r_max_km {
            return 0.0;
        }
        let first = self.points[0];
        if d_km <= first.0 {
            return first.1;
        }
        for w in self.points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if d_km <= x1 {
                return y0 + (y1 - y0) * (d_km - x0) / (x1 - x0);
            }
        }
        self.points[self.points.len() - 1].1
    }
}

/// One site's contribution to the exposure scan.
#[derive(Debug, Clone)]
pub struct SiteExposure {
    pub site_id: String,
    pub point: GeoPoint,
    pub curve: DeltaCurve,
}

/// Bins population by the delta each coarse cell experiences. Cells outside
/// all site disks are ignored; a cell with a negative delta is not counted
/// (bins start at 0 °C). Bin count covers the largest delta observed.
pub fn exposure_histogram(
    sites: &[SiteExposure],
    pop: &Grid,
    r_max_km: f64,
    bin_width: f64,
    dedup: Dedup,
) -> Result<ExposureHistogram, ExposureError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(ExposureError::BadBinWidth(bin_width));
    }

    // Per-site disk scan: (cell, delta) pairs, parallel across sites.
    let scans: Vec<Vec<(usize, usize, f64)>> = sites
        .par_iter()
        .map(|site| {
            cells_within_radius(&pop.spec, site.point, r_max_km)
                .cells
                .iter()
                .map(|c| (c.row, c.col, site.curve.delta_at(c.distance_km)))
                .collect()
        })
        .collect();

    let mut bins: Vec<f64> = Vec::new();
    let mut add = |delta: f64, persons: f64| {
        if delta < 0.0 || persons.is_nan() || persons == 0.0 {
            return;
        }
        let bin = (delta / bin_width).floor() as usize;
        if bin >= bins.len() {
            bins.resize(bin + 1, 0.0);
        }
        bins[bin] += persons;
    };

    match dedup {
        Dedup::Max => {
            // Per-cell max over covering sites; max is order-independent,
            // and the final binning pass runs in sorted cell order.
            let mut best: HashMap<(usize, usize), f64> = HashMap::new();
            for scan in &scans {
                for &(row, col, delta) in scan {
                    let e = best.entry((row, col)).or_insert(f64::NEG_INFINITY);
                    if delta > *e {
                        *e = delta;
                    }
                }
            }
            let mut cells: Vec<((usize, usize), f64)> = best.into_iter().collect();
            cells.sort_by_key(|&(cell, _)| cell);
            for ((row, col), delta) in cells {
                add(delta, pop.get(row, col));
            }
        }
        Dedup::PerSite => {
            for scan in &scans {
                for &(row, col, delta) in scan {
                    add(delta, pop.get(row, col));
                }
            }
        }
    }

    let total = bins.iter().sum();
    Ok(ExposureHistogram { bin_width, bins, total, dedup })
}

/// Population in bins whose lower edge is at least `min_delta`.
pub fn total_affected(hist: &ExposureHistogram, min_delta: f64) -> f64 {
    hist.bins
        .iter()
        .enumerate()
        .filter(|(i, _)| hist.bin_edges(*i).0 >= min_delta)
        .map(|(_, &p)| p)
        .sum()
}
