//! Cleaning chain applied before any anomaly math: daily→monthly
//! aggregation, per-cell monthly climatology, deseasonalization, robust
//! outlier masking, and the site-level validity / dense-urban filters.
//!
//! Every step is elementwise or reduces in a fixed order, so outputs are
//! bit-identical regardless of worker count.

use rayon::prelude::*;

use crate::error::PreprocessError;
use crate::grid::{cells_within_radius, CellDistance, GridSpec};
use crate::ingest::SiteRecord;
use crate::stack::{Grid, RasterStack};
use crate::timeline::{Cadence, MonthKey, Period};

/// Seasonal normal: one grid per calendar month (index 0 = January), each
/// cell the mean of at least `min_samples` valid observations within the
/// baseline window, else NaN.
#[derive(Debug, Clone)]
pub struct Climatology {
    pub spec: GridSpec,
    pub months: Vec<Grid>,
    /// Timeline months that contributed samples.
    pub window: Vec<MonthKey>,
}

/// Why a site was dropped. `code` strings appear verbatim in the
/// dropped-sites CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    InsufficientHistory,
    OriginInvalid,
    LowValidity,
    DenseUrban,
    NoCoverage,
}

impl DropReason {
    pub fn code(&self) -> &'static str {
        match self {
            DropReason::InsufficientHistory => "insufficient-history",
            DropReason::OriginInvalid => "origin-invalid",
            DropReason::LowValidity => "low-validity",
            DropReason::DenseUrban => "dense-urban",
            DropReason::NoCoverage => "no-coverage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteValidity {
    pub keep: bool,
    pub valid_fraction: f64,
    pub reason: Option<DropReason>,
}

/// Collapses a daily stack to monthly means. A month's cell is valid only
/// if it has at least `min_valid_days` valid daily values.
pub fn monthly_from_daily(
    daily: &RasterStack,
    min_valid_days: usize,
) -> Result<RasterStack, PreprocessError> {
    if daily.cadence != Cadence::Daily {
        return Err(PreprocessError::CadenceMismatch {
            expected: "daily",
            found: daily.cadence.to_string(),
        });
    }
    // Consecutive runs of periods sharing a month; periods are sorted.
    let mut groups: Vec<(MonthKey, std::ops::Range<usize>)> = Vec::new();
    for (pos, period) in daily.periods.iter().enumerate() {
        let m = period.month();
        match groups.last_mut() {
            Some((month, range)) if *month == m => range.end = pos + 1,
            _ => groups.push((m, pos..pos + 1)),
        }
    }

    let n_cells = daily.spec.n_cells();
    let grids: Vec<Grid> = groups
        .par_iter()
        .map(|(_, range)| {
            let mut out = Grid::constant(daily.spec, f64::NAN);
            for cell in 0..n_cells {
                let mut sum = 0.0;
                let mut n = 0usize;
                for g in &daily.grids[range.clone()] {
                    let v = g.values[cell];
                    if !v.is_nan() {
                        sum += v;
                        n += 1;
                    }
                }
                if n >= min_valid_days {
                    out.values[cell] = sum / n as f64;
                }
            }
            out
        })
        .collect();

    Ok(RasterStack {
        variable: daily.variable.clone(),
        units: daily.units.clone(),
        cadence: Cadence::Monthly,
        spec: daily.spec,
        periods: groups.iter().map(|(m, _)| Period::Month(*m)).collect(),
        grids,
    })
}

/// Per-cell, per-calendar-month mean over the inclusive baseline window.
/// Window months missing from the timeline simply contribute no samples.
pub fn climatology(
    stack: &RasterStack,
    window: (MonthKey, MonthKey),
    min_samples: usize,
) -> Result<Climatology, PreprocessError> {
    if stack.cadence != Cadence::Monthly {
        return Err(PreprocessError::CadenceMismatch {
            expected: "monthly",
            found: stack.cadence.to_string(),
        });
    }
    let (start, end) = window;
    if start > end {
        return Err(PreprocessError::EmptyWindow);
    }
    let (t0, t1) = (
        stack.first_month().ok_or(PreprocessError::EmptyWindow)?,
        stack.last_month().expect("non-empty stack"),
    );
    if start < t0 || end > t1 {
        return Err(PreprocessError::WindowOutsideTimeline {
            start: start.to_string(),
            end: end.to_string(),
            t0: t0.to_string(),
            t1: t1.to_string(),
        });
    }

    let mut window_months = Vec::new();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); 12];
    for (pos, period) in stack.periods.iter().enumerate() {
        let m = period.month();
        if m >= start && m <= end {
            window_months.push(m);
            groups[m.calendar_index()].push(pos);
        }
    }

    let n_cells = stack.spec.n_cells();
    let months: Vec<Grid> = groups
        .par_iter()
        .map(|positions| {
            let mut out = Grid::constant(stack.spec, f64::NAN);
            for cell in 0..n_cells {
                let mut sum = 0.0;
                let mut n = 0usize;
                for &pos in positions {
                    let v = stack.grids[pos].values[cell];
                    if !v.is_nan() {
                        sum += v;
                        n += 1;
                    }
                }
                if n >= min_samples.max(1) {
                    out.values[cell] = sum / n as f64;
                }
            }
            out
        })
        .collect();

    Ok(Climatology { spec: stack.spec, months, window: window_months })
}

/// Subtracts the calendar-month normal from every grid. A cell is NaN in
/// the output if it is NaN on either side.
pub fn deseasonalize(
    stack: &RasterStack,
    clim: &Climatology,
) -> Result<RasterStack, PreprocessError> {
    if stack.spec != clim.spec {
        return Err(PreprocessError::SpecMismatch);
    }
    let grids: Vec<Grid> = stack
        .grids
        .par_iter()
        .zip(stack.periods.par_iter())
        .map(|(grid, period)| {
            let normal = &clim.months[period.month().calendar_index()];
            let values = grid
                .values
                .iter()
                .zip(&normal.values)
                .map(|(v, c)| v - c) // NaN propagates from either side
                .collect();
            Grid { spec: grid.spec, values }
        })
        .collect();
    Ok(RasterStack { grids, ..stack.clone() })
}

/// Median of a non-empty sorted slice: midpoint average for even lengths.
fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Robust per-cell outlier mask: values farther than `mad_k` scaled MADs
/// from the cell's median become NaN. The scale is s = 1.4826·MAD, floored
/// at `s_floor` so near-constant series do not mask everything.
pub fn mask_outliers(anom: &RasterStack, mad_k: f64, s_floor: f64) -> RasterStack {
    let n_cells = anom.spec.n_cells();
    // Pass 1: per-cell (median, scale).
    let limits: Vec<(f64, f64)> = (0..n_cells)
        .into_par_iter()
        .map(|cell| {
            let mut vals: Vec<f64> = anom
                .grids
                .iter()
                .map(|g| g.values[cell])
                .filter(|v| !v.is_nan())
                .collect();
            if vals.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            vals.sort_by(f64::total_cmp);
            let m = median_sorted(&vals);
            let mut dev: Vec<f64> = vals.iter().map(|v| (v - m).abs()).collect();
            dev.sort_by(f64::total_cmp);
            let s = (1.4826 * median_sorted(&dev)).max(s_floor);
            (m, s)
        })
        .collect();

    // Pass 2: elementwise mask.
    let grids: Vec<Grid> = anom
        .grids
        .par_iter()
        .map(|grid| {
            let values = grid
                .values
                .iter()
                .zip(&limits)
                .map(|(&v, &(m, s))| {
                    if !v.is_nan() && (v - m).abs() > mad_k * s {
                        f64::NAN
                    } else {
                        v
                    }
                })
                .collect();
            Grid { spec: grid.spec, values }
        })
        .collect();
    RasterStack { grids, ..anom.clone() }
}

/// Keep/drop decision for one site. The required span is
/// [start − (k + horizon), start + horizon]; a site is kept iff that span
/// lies inside the timeline, the month of `start` itself is valid in the
/// ring-0 mean series, and at least `min_valid_fraction` of span months are
/// valid. When several conditions fail, the most specific reason wins:
/// insufficient history, then invalid origin, then low validity.
pub fn site_validity(
    anom: &RasterStack,
    site: &SiteRecord,
    ring0: &[CellDistance],
    k: usize,
    horizon: usize,
    min_valid_fraction: f64,
) -> SiteValidity {
    let (series, _) = anom.cell_mean_series(ring0);
    let start = site.start_of_operations.offset(-((k + horizon) as i64));
    let end = site.start_of_operations.offset(horizon as i64);
    let span_len = (k + 2 * horizon + 1) as f64;

    let mut valid = 0usize;
    let mut m = start;
    while m <= end {
        if series.get(m).is_some_and(|v| !v.is_nan()) {
            valid += 1;
        }
        m = m.offset(1);
    }
    let valid_fraction = valid as f64 / span_len;

    let drop = |reason| SiteValidity { keep: false, valid_fraction, reason: Some(reason) };
    if start < series.start || end > series.end() {
        return drop(DropReason::InsufficientHistory);
    }
    if !series.get(site.start_of_operations).is_some_and(|v| !v.is_nan()) {
        return drop(DropReason::OriginInvalid);
    }
    if valid_fraction < min_valid_fraction {
        return drop(DropReason::LowValidity);
    }
    SiteValidity { keep: true, valid_fraction, reason: None }
}

/// Splits sites into (kept, excluded): a site is excluded when the mean
/// population density within `radius_km` STRICTLY exceeds the threshold
/// (persons/km²), or when the population grid does not cover it. Density is
/// total persons over total spherical cell area, valid cells only.
pub fn urban_filter(
    sites: &[SiteRecord],
    pop: &Grid,
    radius_km: f64,
    density_threshold: f64,
) -> (Vec<SiteRecord>, Vec<(SiteRecord, DropReason)>) {
    let decisions: Vec<Option<DropReason>> = sites
        .par_iter()
        .map(|site| {
            if !pop.spec.contains_point(site.point) {
                return Some(DropReason::NoCoverage);
            }
            let disk = cells_within_radius(&pop.spec, site.point, radius_km);
            let mut persons = 0.0;
            let mut area = 0.0;
            for c in &disk.cells {
                let v = pop.get(c.row, c.col);
                if !v.is_nan() {
                    persons += v;
                    area += pop.spec.cell_area_km2(c.row);
                }
            }
            if area == 0.0 {
                return Some(DropReason::NoCoverage);
            }
            if persons / area > density_threshold {
                return Some(DropReason::DenseUrban);
            }
            None
        })
        .collect();

    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (site, decision) in sites.iter().zip(decisions) {
        match decision {
            None => kept.push(site.clone()),
            Some(reason) => excluded.push((site.clone(), reason)),
        }
    }
    (kept, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GeoPoint;
    use crate::timeline::DayKey;

    fn spec1() -> GridSpec {
        GridSpec::new(1, 1, 0.0, 0.0, 1.0, -9999.0).unwrap()
    }

    fn month(label: &str) -> MonthKey {
        label.parse().unwrap()
    }

    fn daily_stack(values: &[f64]) -> RasterStack {
        let spec = spec1();
        let start = month("2015-06");
        RasterStack {
            variable: "LST".into(),
            units: "degC".into(),
            cadence: Cadence::Daily,
            spec,
            periods: (0..values.len())
                .map(|d| Period::Day(DayKey { month: start, day: d as u32 + 1 }))
                .collect(),
            grids: values.iter().map(|&v| Grid::constant(spec, v)).collect(),
        }
    }

    fn monthly_stack(start: &str, values: &[f64]) -> RasterStack {
        let spec = spec1();
        let m0 = month(start);
        RasterStack {
            variable: "LST".into(),
            units: "degC".into(),
            cadence: Cadence::Monthly,
            spec,
            periods: (0..values.len()).map(|i| Period::Month(m0.offset(i as i64))).collect(),
            grids: values.iter().map(|&v| Grid::constant(spec, v)).collect(),
        }
    }

    #[test]
    fn monthly_mean_of_identical_days() {
        let daily = daily_stack(&[21.5; 30]);
        let monthly = monthly_from_daily(&daily, 8).unwrap();
        assert_eq!(monthly.len(), 1);
        assert_eq!(monthly.grids[0].values[0], 21.5);
        assert_eq!(monthly.cadence, Cadence::Monthly);
    }

    #[test]
    fn too_few_valid_days_is_nodata() {
        let mut vals = vec![f64::NAN; 30];
        for v in vals.iter_mut().take(5) {
            *v = 10.0;
        }
        let monthly = monthly_from_daily(&daily_stack(&vals), 8).unwrap();
        assert!(monthly.grids[0].values[0].is_nan());
        // Exactly at the threshold counts.
        for v in vals.iter_mut().take(8) {
            *v = 10.0;
        }
        let monthly = monthly_from_daily(&daily_stack(&vals), 8).unwrap();
        assert_eq!(monthly.grids[0].values[0], 10.0);
    }

    #[test]
    fn monthly_mean_of_one_to_thirty() {
        let vals: Vec<f64> = (1..=30).map(f64::from).collect();
        let monthly = monthly_from_daily(&daily_stack(&vals), 8).unwrap();
        assert_eq!(monthly.grids[0].values[0], 15.5);
    }

    #[test]
    fn monthly_from_daily_needs_daily_cadence() {
        let e = monthly_from_daily(&monthly_stack("2015-01", &[1.0]), 8).unwrap_err();
        assert!(matches!(e, PreprocessError::CadenceMismatch { .. }));
    }

    #[test]
    fn climatology_of_constant_stack() {
        let stack = monthly_stack("2010-01", &[4.25; 48]);
        let clim =
            climatology(&stack, (month("2010-01"), month("2013-12")), 3).unwrap();
        for g in &clim.months {
            assert_eq!(g.values[0], 4.25);
        }
        assert_eq!(clim.window.len(), 48);
    }

    #[test]
    fn climatology_recovers_pure_sinusoid() {
        let vals: Vec<f64> = (0..120)
            .map(|t| (std::f64::consts::TAU * (t % 12) as f64 / 12.0).sin())
            .collect();
        let stack = monthly_stack("2000-01", &vals);
        let clim = climatology(&stack, (month("2000-01"), month("2009-12")), 3).unwrap();
        for ci in 0..12 {
            let want = (std::f64::consts::TAU * ci as f64 / 12.0).sin();
            assert!((clim.months[ci].values[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn climatology_respects_min_samples() {
        // Two Januaries valid, third NaN: min_samples 3 leaves January NaN.
        let mut stack = monthly_stack("2010-01", &[1.0; 36]);
        stack.grids[24].values[0] = f64::NAN;
        let clim = climatology(&stack, (month("2010-01"), month("2012-12")), 3).unwrap();
        assert!(clim.months[0].values[0].is_nan());
        assert_eq!(clim.months[1].values[0], 1.0);
    }

    #[test]
    fn climatology_window_errors() {
        let stack = monthly_stack("2010-01", &[1.0; 12]);
        assert!(matches!(
            climatology(&stack, (month("2010-06"), month("2010-05")), 3),
            Err(PreprocessError::EmptyWindow)
        ));
        assert!(matches!(
            climatology(&stack, (month("2009-12"), month("2010-05")), 3),
            Err(PreprocessError::WindowOutsideTimeline { .. })
        ));
    }

    #[test]
    fn deseasonalize_zeroes_the_climatology_and_keeps_offsets() {
        let vals: Vec<f64> = (0..48).map(|t| 10.0 + ((t % 12) as f64)).collect();
        let stack = monthly_stack("2010-01", &vals);
        let clim = climatology(&stack, (month("2010-01"), month("2013-12")), 3).unwrap();
        let anom = deseasonalize(&stack, &clim).unwrap();
        for g in &anom.grids {
            assert!(g.values[0].abs() < 1e-12);
        }

        let shifted = monthly_stack("2010-01", &vals.iter().map(|v| v + 2.5).collect::<Vec<_>>());
        let anom = deseasonalize(&shifted, &clim).unwrap();
        for g in &anom.grids {
            assert!((g.values[0] - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn deseasonalize_linear_trend_residual() {
        let b = 0.01;
        let vals: Vec<f64> = (0..24).map(|t| b * t as f64).collect();
        let stack = monthly_stack("2010-01", &vals);
        let clim = climatology(&stack, (month("2010-01"), month("2011-12")), 1).unwrap();
        let anom = deseasonalize(&stack, &clim).unwrap();
        // Calendar month ci appears at t = ci and t = ci + 12; the normal is
        // the mean, so residuals are ±6b.
        for (t, g) in anom.grids.iter().enumerate() {
            let ci = t % 12;
            let mean = b * (ci as f64 + (ci + 12) as f64) / 2.0;
            assert!((g.values[0] - (b * t as f64 - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn deseasonalize_rejects_spec_mismatch() {
        let stack = monthly_stack("2010-01", &[1.0; 12]);
        let clim = climatology(&stack, (month("2010-01"), month("2010-12")), 1).unwrap();
        let other = RasterStack {
            spec: GridSpec::new(2, 1, 0.0, 0.0, 1.0, -9999.0).unwrap(),
            grids: vec![Grid::constant(GridSpec::new(2, 1, 0.0, 0.0, 1.0, -9999.0).unwrap(), 0.0); 12],
            ..stack.clone()
        };
        assert!(matches!(deseasonalize(&other, &clim), Err(PreprocessError::SpecMismatch)));
    }

    #[test]
    fn masking_leaves_constant_series_alone() {
        let stack = monthly_stack("2010-01", &[3.0; 120]);
        let masked = mask_outliers(&stack, 3.0, 0.05);
        assert!(masked.grids.iter().all(|g| g.values[0] == 3.0));
    }

    #[test]
    fn masking_catches_lone_spike_via_floor() {
        let mut vals = vec![0.0; 120];
        vals[60] = 100.0;
        let masked = mask_outliers(&monthly_stack("2010-01", &vals), 3.0, 0.05);
        assert!(masked.grids[60].values[0].is_nan());
        assert_eq!(masked.grids[0].values[0], 0.0);
        let survivors = masked.grids.iter().filter(|g| !g.values[0].is_nan()).count();
        assert_eq!(survivors, 119);
    }

    #[test]
    fn masking_matches_bruteforce_rule_on_known_series() {
        let vals: Vec<f64> = vec![
            0.1, -0.2, 0.3, 1.9, -0.4, 0.0, 0.2, -2.4, 0.1, 0.05, -0.15, 0.25, 3.3, -0.1, 0.12,
            -0.3, 0.4, -0.05, 0.18, -0.22,
        ];
        let masked = mask_outliers(&monthly_stack("2010-01", &vals), 3.0, 0.05);

        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        let m = (sorted[9] + sorted[10]) / 2.0;
        let mut dev: Vec<f64> = vals.iter().map(|v| (v - m).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let s = (1.4826 * (dev[9] + dev[10]) / 2.0).max(0.05);

        for (t, v) in vals.iter().enumerate() {
            let expect_masked = (v - m).abs() > 3.0 * s;
            assert_eq!(masked.grids[t].values[0].is_nan(), expect_masked, "t={t}");
        }
        // The construction actually masks something.
        assert!(masked.grids.iter().any(|g| g.values[0].is_nan()));
    }

    #[test]
    fn masking_is_monotone_in_mad_k() {
        let vals: Vec<f64> =
            (0..60).map(|t| ((t * 2654435761_usize) % 97) as f64 / 10.0 - 4.8).collect();
        let stack = monthly_stack("2010-01", &vals);
        let tight = mask_outliers(&stack, 1.0, 0.05);
        let loose = mask_outliers(&stack, 3.0, 0.05);
        for t in 0..60 {
            if loose.grids[t].values[0].is_nan() {
                assert!(tight.grids[t].values[0].is_nan());
            }
        }
    }

    fn site_at_origin(start: &str) -> SiteRecord {
        SiteRecord {
            site_id: "s".into(),
            point: GeoPoint::new(0.5, 0.5).unwrap(),
            start_of_operations: month(start),
            provider: None,
        }
    }

    fn ring0() -> Vec<CellDistance> {
        vec![CellDistance { row: 0, col: 0, distance_km: 0.0 }]
    }

    #[test]
    fn validity_keeps_fully_valid_series() {
        // k=12, H=2: span is 17 months. Timeline 2010-01..2012-12, start 2011-06.
        let stack = monthly_stack("2010-01", &[1.0; 36]);
        let v = site_validity(&stack, &site_at_origin("2011-06"), &ring0(), 12, 2, 0.5);
        assert!(v.keep);
        assert_eq!(v.valid_fraction, 1.0);
        assert_eq!(v.reason, None);
    }

    #[test]
    fn validity_drops_invalid_origin() {
        let mut vals = vec![1.0; 36];
        vals[17] = f64::NAN; // 2011-06
        let stack = monthly_stack("2010-01", &vals);
        let v = site_validity(&stack, &site_at_origin("2011-06"), &ring0(), 12, 2, 0.5);
        assert!(!v.keep);
        assert_eq!(v.reason, Some(DropReason::OriginInvalid));
    }

    #[test]
    fn validity_drops_low_fraction() {
        // Span 2010-04..2011-08 (17 months, k=12 H=2): keep ~40% valid.
        let mut vals = vec![f64::NAN; 36];
        // Valid: origin plus 6 early months = 7/17 ≈ 0.41.
        for t in [3, 4, 5, 6, 7, 8, 17] {
            vals[t] = 1.0;
        }
        let stack = monthly_stack("2010-01", &vals);
        let v = site_validity(&stack, &site_at_origin("2011-06"), &ring0(), 12, 2, 0.5);
        assert!(!v.keep);
        assert_eq!(v.reason, Some(DropReason::LowValidity));
        assert!((v.valid_fraction - 7.0 / 17.0).abs() < 1e-12);
    }

    #[test]
    fn validity_flags_insufficient_history() {
        let stack = monthly_stack("2011-01", &[1.0; 24]);
        // k=12, H=2 around 2011-06 needs 2010-04: before the timeline.
        let v = site_validity(&stack, &site_at_origin("2011-06"), &ring0(), 12, 2, 0.5);
        assert!(!v.keep);
        assert_eq!(v.reason, Some(DropReason::InsufficientHistory));
    }

    fn pop_grid(value: f64) -> Grid {
        // 1 km-ish cells near the equator.
        let spec = GridSpec::new(40, 40, 0.0, 0.0, 0.009, -9999.0).unwrap();
        Grid::constant(spec, value)
    }

    #[test]
    fn urban_filter_thresholds() {
        let site = SiteRecord {
            site_id: "s".into(),
            point: GeoPoint::new(0.18, 0.18).unwrap(),
            start_of_operations: month("2020-01"),
            provider: None,
        };
        let area = pop_grid(0.0).spec.cell_area_km2(20);

        let (kept, excl) = urban_filter(std::slice::from_ref(&site), &pop_grid(0.0), 5.0, 1500.0);
        assert_eq!((kept.len(), excl.len()), (1, 0));

        let (kept, excl) =
            urban_filter(std::slice::from_ref(&site), &pop_grid(2.0 * 1500.0 * area), 5.0, 1500.0);
        assert_eq!((kept.len(), excl.len()), (0, 1));
        assert_eq!(excl[0].1, DropReason::DenseUrban);

        // Exactly at the threshold: kept (strict inequality). Compute the
        // disk density with the filter's own reduction order and use it as
        // the threshold, so equality is exact.
        let g = pop_grid(800.0);
        let disk = cells_within_radius(&g.spec, site.point, 5.0);
        let (mut persons, mut covered) = (0.0, 0.0);
        for c in &disk.cells {
            persons += g.get(c.row, c.col);
            covered += g.spec.cell_area_km2(c.row);
        }
        let density = persons / covered;
        let (kept, _) = urban_filter(std::slice::from_ref(&site), &g, 5.0, density);
        assert_eq!(kept.len(), 1, "tie goes to kept");
        let (kept, excl) =
            urban_filter(std::slice::from_ref(&site), &g, 5.0, density * (1.0 - 1e-12));
        assert_eq!((kept.len(), excl.len()), (0, 1));
    }

    #[test]
    fn urban_filter_flags_uncovered_sites() {
        let site = SiteRecord {
            site_id: "far".into(),
            point: GeoPoint::new(40.0, 40.0).unwrap(),
            start_of_operations: month("2020-01"),
            provider: None,
        };
        let (kept, excl) = urban_filter(&[site], &pop_grid(0.0), 5.0, 1500.0);
        assert!(kept.is_empty());
        assert_eq!(excl[0].1, DropReason::NoCoverage);
    }

    #[test]
    fn urban_filter_partitions_input() {
        let sites: Vec<SiteRecord> = (0..6)
            .map(|i| SiteRecord {
                site_id: format!("s{i}"),
                point: GeoPoint::new(0.05 + 0.05 * i as f64, 0.18).unwrap(),
                start_of_operations: month("2020-01"),
                provider: None,
            })
            .collect();
        let (kept, excl) = urban_filter(&sites, &pop_grid(1.0), 5.0, 1500.0);
        assert_eq!(kept.len() + excl.len(), sites.len());
        let mut ids: Vec<String> = kept
            .iter()
            .map(|s| s.site_id.clone())
            .chain(excl.iter().map(|(s, _)| s.site_id.clone()))
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), sites.len());
    }
}
