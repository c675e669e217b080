//! The math core: temporal deltas against a k-month baseline, ring-mean
//! deltas, epoch alignment around each site's start of operations,
//! cross-site aggregation bands, radial profiles, and decay metrics.
//!
//! The temporal delta at month i is T_i minus the mean of the k preceding
//! months, where the baseline mean runs over VALID months only and the
//! whole delta is NaN when fewer than `min_valid_fraction` of the k
//! baseline months are valid (or month i itself is not).

use rayon::prelude::*;

use crate::error::AnomalyError;
use crate::grid::{ring_partition, CellDistance, RingSpec};
use crate::ingest::SiteRecord;
use crate::stack::{MonthSeries, RasterStack};
use crate::timeline::MonthKey;

/// Monthly mean over one ring's member cells, NaN for months with zero
/// valid cells.
#[derive(Debug, Clone)]
pub struct RingSeries {
    pub site_id: String,
    pub ring: usize,
    pub r_mid_km: f64,
    pub series: MonthSeries,
    pub valid_counts: Vec<u32>,
}

/// Epoch-aligned deltas for one site: index 0 of `deltas` is i = -horizon,
/// the last is i = +horizon, with i = 0 at the start-of-operations month.
#[derive(Debug, Clone)]
pub struct EpochDeltaSeries {
    pub site_id: String,
    pub k: usize,
    pub horizon: usize,
    pub deltas: Vec<f64>,
    /// True when some i fell outside the series axis entirely (as opposed
    /// to being NaN for data-validity reasons).
    pub insufficient_history: bool,
}

impl EpochDeltaSeries {
    pub fn delta(&self, i: i64) -> f64 {
        self.deltas[(i + self.horizon as i64) as usize]
    }
}

/// How the aggregation band's quantile bounds are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    /// Central 95% interval: p2.5 and p97.5.
    Central95,
    /// One-sided upper bound: p_lo is NaN, p_hi is p95.
    UpperP95,
}

/// Cross-site statistics for one epoch index or one ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub n_sites: usize,
}

const NODATA_ROW: AggregateRow = AggregateRow {
    mean: f64::NAN,
    min: f64::NAN,
    max: f64::NAN,
    p_lo: f64::NAN,
    p_hi: f64::NAN,
    n_sites: 0,
};

/// Per-epoch-index aggregation band across sites.
#[derive(Debug, Clone)]
pub struct AggregateBand {
    pub k: usize,
    pub horizon: usize,
    /// Index 0 is i = -horizon.
    pub rows: Vec<AggregateRow>,
}

/// Ring-midpoint profile of delta-at-origin across sites.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub dr_km: f64,
    pub r_max_km: f64,
    pub r_mid_km: Vec<f64>,
    pub rows: Vec<AggregateRow>,
}

/// One site's delta at one ring, for the per-site CSV.
#[derive(Debug, Clone)]
pub struct SiteRingDelta {
    pub site_id: String,
    pub r_mid_km: f64,
    pub delta: f64,
}

/// A site's ring-0 series plus everything needed to align its epoch axis.
#[derive(Debug, Clone)]
pub struct SiteSeries {
    pub site_id: String,
    pub start: MonthKey,
    pub series: MonthSeries,
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub k: usize,
    pub average: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub n_sites: usize,
}

#[derive(Debug, Clone)]
pub struct TableExclusion {
    pub site_id: String,
    pub k: usize,
    pub reason: &'static str,
}

/// First-crossing distance, or a marker that the profile never reaches the
/// level within r_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    AtKm(f64),
    BeyondRange,
}

#[derive(Debug, Clone, Copy)]
pub struct DecayMetrics {
    pub peak: f64,
    pub fraction: f64,
    pub d_fraction_km: Crossing,
    pub abs_level_degc: f64,
    pub d_abs_km: Crossing,
}

/// Linear-interpolation empirical quantile at fractional index (n-1)·q of a
/// sorted, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn ring_series(
    anom: &RasterStack,
    site_id: &str,
    ring: usize,
    r_mid_km: f64,
    cells: &[CellDistance],
) -> Result<RingSeries, AnomalyError> {
    if cells.is_empty() {
        return Err(AnomalyError::EmptyRing { site_id: site_id.to_string(), ring });
    }
    let (series, valid_counts) = anom.cell_mean_series(cells);
    Ok(RingSeries { site_id: site_id.to_string(), ring, r_mid_km, series, valid_counts })
}

/// Delta at absolute month `i_month` against the mean of the `k` preceding
/// months. The baseline mean runs over valid months only; the result is NaN
/// when month i is invalid or fewer than `min_valid_fraction`·k baseline
/// months are valid. Months missing from the axis entirely are an error.
pub fn temporal_delta(
    series: &MonthSeries,
    i_month: MonthKey,
    k: usize,
    min_valid_fraction: f64,
) -> Result<f64, AnomalyError> {
    assert!(k >= 1, "baseline window must be at least one month");
    let need_start = i_month.offset(-(k as i64));
    if series.is_empty() || need_start < series.start || i_month > series.end() {
        return Err(AnomalyError::InsufficientHistory {
            need_start: need_start.to_string(),
            need_end: i_month.to_string(),
            have_start: if series.is_empty() { "-".into() } else { series.start.to_string() },
            have_end: if series.is_empty() { "-".into() } else { series.end().to_string() },
        });
    }
    let t_i = series.get(i_month).expect("checked in range");
    if t_i.is_nan() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    let mut valid = 0usize;
    for j in 1..=k as i64 {
        let v = series.get(i_month.offset(-j)).expect("checked in range");
        if !v.is_nan() {
            sum += v;
            valid += 1;
        }
    }
    if valid == 0 || (valid as f64) < min_valid_fraction * k as f64 {
        return Ok(f64::NAN);
    }
    Ok(t_i - sum / valid as f64)
}

/// All deltas for i in [-horizon, +horizon] with i = 0 at month `s`. Axis
/// positions outside the series become NaN and set the summary flag; they
/// never abort the series.
pub fn epoch_delta_series(
    series: &MonthSeries,
    site_id: &str,
    s: MonthKey,
    k: usize,
    horizon: usize,
    min_valid_fraction: f64,
) -> EpochDeltaSeries {
    let h = horizon as i64;
    let mut deltas = Vec::with_capacity(2 * horizon + 1);
    let mut insufficient = false;
    for i in -h..=h {
        match temporal_delta(series, s.offset(i), k, min_valid_fraction) {
            Ok(v) => deltas.push(v),
            Err(_) => {
                deltas.push(f64::NAN);
                insufficient = true;
            }
        }
    }
    EpochDeltaSeries {
        site_id: site_id.to_string(),
        k,
        horizon,
        deltas,
        insufficient_history: insufficient,
    }
}

/// Ring-mean delta at the site's start month: the temporal delta applied to
/// the ring's mean series (mean-then-delta).
pub fn spatial_delta(
    anom: &RasterStack,
    site: &SiteRecord,
    ring: usize,
    r_mid_km: f64,
    cells: &[CellDistance],
    k: usize,
    min_valid_fraction: f64,
) -> Result<f64, AnomalyError> {
    let rs = ring_series(anom, &site.site_id, ring, r_mid_km, cells)?;
    temporal_delta(&rs.series, site.start_of_operations, k, min_valid_fraction)
}

fn aggregate_row(valid: &[f64], band: BandKind) -> AggregateRow {
    if valid.is_empty() {
        return NODATA_ROW;
    }
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    let mut sorted = valid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (p_lo, p_hi) = match band {
        BandKind::Central95 => {
            (quantile_sorted(&sorted, 0.025), quantile_sorted(&sorted, 0.975))
        }
        BandKind::UpperP95 => (f64::NAN, quantile_sorted(&sorted, 0.95)),
    };
    AggregateRow {
        mean,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        p_lo,
        p_hi,
        n_sites: valid.len(),
    }
}

/// Per-epoch-index statistics across sites. Sites whose delta is NaN at an
/// index are excluded from that index only; an index with zero valid sites
/// yields a NODATA row. The input order fixes the reduction order, so
/// callers pass sites sorted by site_id.
pub fn aggregate_sites(
    list: &[EpochDeltaSeries],
    band: BandKind,
) -> Result<AggregateBand, AnomalyError> {
    let first = list.first().ok_or(AnomalyError::EmptyAggregate)?;
    let (k, horizon) = (first.k, first.horizon);
    debug_assert!(list.iter().all(|e| e.k == k && e.horizon == horizon));
    let rows = (0..2 * horizon + 1)
        .map(|idx| {
            let valid: Vec<f64> =
                list.iter().map(|e| e.deltas[idx]).filter(|v| !v.is_nan()).collect();
            aggregate_row(&valid, band)
        })
        .collect();
    Ok(AggregateBand { k, horizon, rows })
}

/// Delta-at-origin statistics for each baseline length in `k_list`. Sites
/// whose series cannot support a k (missing axis months, or an invalid
/// delta) are excluded from that k's row and reported in the diagnostics.
pub fn table_sweep(
    sites: &[SiteSeries],
    k_list: &[usize],
    min_valid_fraction: f64,
) -> (Vec<TableRow>, Vec<TableExclusion>) {
    let mut rows = Vec::with_capacity(k_list.len());
    let mut excluded = Vec::new();
    for &k in k_list {
        let mut valid = Vec::new();
        for site in sites {
            match temporal_delta(&site.series, site.start, k, min_valid_fraction) {
                Ok(v) if !v.is_nan() => valid.push(v),
                Ok(_) => excluded.push(TableExclusion {
                    site_id: site.site_id.clone(),
                    k,
                    reason: "invalid-delta",
                }),
                Err(_) => excluded.push(TableExclusion {
                    site_id: site.site_id.clone(),
                    k,
                    reason: "insufficient-history",
                }),
            }
        }
        let agg = aggregate_row(&valid, BandKind::Central95);
        rows.push(TableRow {
            k,
            average: agg.mean,
            minimum: agg.min,
            maximum: agg.max,
            n_sites: agg.n_sites,
        });
    }
    (rows, excluded)
}

/// Mean/band of the ring delta at origin, per ring midpoint. A site is
/// skipped for a ring when the ring has no cells or its delta is undefined;
/// per-site deltas (including NaN placeholders) are returned for the
/// per-site CSV. Sites are processed in input order.
pub fn radial_profile(
    anom: &RasterStack,
    sites: &[SiteRecord],
    r_max_km: f64,
    dr_km: f64,
    k: usize,
    min_valid_fraction: f64,
    band: BandKind,
) -> Result<(RadialProfile, Vec<SiteRingDelta>), AnomalyError> {
    if sites.is_empty() {
        return Err(AnomalyError::EmptyAggregate);
    }
    let template = RingSpec::new(sites[0].point, r_max_km, dr_km)
        .map_err(|e| AnomalyError::InvalidRings { reason: e.to_string() })?;
    let n_rings = template.n_rings();

    let per_site: Vec<Vec<f64>> = sites
        .par_iter()
        .map(|site| {
            let ring = RingSpec { center: site.point, ..template };
            let part = ring_partition(&anom.spec, &ring);
            (0..n_rings)
                .map(|n| {
                    let cells = &part.rings[n];
                    if cells.is_empty() {
                        return f64::NAN;
                    }
                    let (series, _) = anom.cell_mean_series(cells);
                    temporal_delta(&series, site.start_of_operations, k, min_valid_fraction)
                        .unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect();

    let r_mid_km: Vec<f64> = (0..n_rings).map(|n| template.ring_mid_km(n)).collect();
    let rows: Vec<AggregateRow> = (0..n_rings)
        .map(|n| {
            let valid: Vec<f64> =
                per_site.iter().map(|deltas| deltas[n]).filter(|v| !v.is_nan()).collect();
            aggregate_row(&valid, band)
        })
        .collect();

    let mut site_rows = Vec::with_capacity(sites.len() * n_rings);
    for (site, deltas) in sites.iter().zip(&per_site) {
        for (n, &delta) in deltas.iter().enumerate() {
            site_rows.push(SiteRingDelta {
                site_id: site.site_id.clone(),
                r_mid_km: r_mid_km[n],
                delta,
            });
        }
    }
    Ok((RadialProfile { dr_km, r_max_km, r_mid_km, rows }, site_rows))
}

/// First distances at which the mean profile decays to `fraction`·peak and
/// to `abs_level_degc`, by linear interpolation between ring midpoints.
/// Rings with no data are skipped. A profile already at or below a target
/// at ring 0 crosses at the first midpoint; one that never reaches a target
/// within r_max returns the beyond-range marker for it.
pub fn decay_metrics(
    profile: &RadialProfile,
    fraction: f64,
    abs_level_degc: f64,
) -> Result<DecayMetrics, AnomalyError> {
    let points: Vec<(f64, f64)> = profile
        .r_mid_km
        .iter()
        .zip(&profile.rows)
        .filter(|(_, row)| !row.mean.is_nan())
        .map(|(&x, row)| (x, row.mean))
        .collect();
    if points.is_empty() {
        return Err(AnomalyError::EmptyProfile);
    }
    let peak = profile.rows[0].mean;
    if !(peak > 0.0) {
        return Err(AnomalyError::NonPositivePeak { peak });
    }

    let first_crossing = |target: f64| -> Crossing {
        if points[0].1 <= target {
            return Crossing::AtKm(points[0].0);
        }
        for w in points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if y0 > target && y1 <= target {
                return Crossing::AtKm(x0 + (x1 - x0) * (y0 - target) / (y0 - y1));
            }
        }
        Crossing::BeyondRange
    };

    Ok(DecayMetrics {
        peak,
        fraction,
        d_fraction_km: first_crossing(fraction * peak),
        abs_level_degc,
        d_abs_km: first_crossing(abs_level_degc),
    })
}
