//! Full library-path runs on synthetic scenarios: generated fields pushed
//! through preprocessing and the anomaly stages must land on the
//! closed-form oracle, with and without noise.

use heatring::anomaly::spatial_delta;
use heatring::grid::{ring_partition, GeoPoint, GridSpec, RingSpec};
use heatring::ingest::{load_sites, load_stack, save_sites, save_stack};
use heatring::preprocess::{climatology, deseasonalize, monthly_from_daily};
use heatring::stack::RasterStack;
use heatring::synth::{expected_delta, generate, ScenarioParams, SyntheticSite};
use heatring::timeline::{Cadence, MonthKey};

fn month(label: &str) -> MonthKey {
    label.parse().unwrap()
}

/// Sites on a 7x7 lattice at least 10 km inside the grid edges, plus one
/// off-lattice point once the lattice is exhausted. Grid spans [0, 1]° in
/// both axes at the default scenario scale.
fn lattice_sites(n: usize, onset: MonthKey, amplitude: f64, sigma: f64) -> Vec<SyntheticSite> {
    let mut sites = Vec::with_capacity(n);
    for i in 0..7 {
        for j in 0..7 {
            if sites.len() < n {
                let lat = 0.1 + 0.8 * i as f64 / 6.0;
                let lon = 0.1 + 0.8 * j as f64 / 6.0;
                sites.push(SyntheticSite {
                    point: GeoPoint::new(lat, lon).unwrap(),
                    onset,
                    amplitude_degc: amplitude,
                    sigma_km: sigma,
                });
            }
        }
    }
    if sites.len() < n {
        sites.push(SyntheticSite {
            point: GeoPoint::new(0.3, 0.3).unwrap(),
            onset,
            amplitude_degc: amplitude,
            sigma_km: sigma,
        });
    }
    assert_eq!(sites.len(), n);
    sites
}

/// Pre-onset climatology, removed from the whole stack.
fn deseasonalized(stack: &RasterStack, onset: MonthKey) -> RasterStack {
    let window = (stack.first_month().unwrap(), onset.offset(-1));
    let clim = climatology(stack, window, 3).unwrap();
    deseasonalize(stack, &clim).unwrap()
}

// Two interacting bumps under seasonality and a background trend, no noise:
// every ring's origin delta must match the closed form. The climatology is
// fitted on whole pre-onset years, which leaves a bounded trend residual of
// at most 5.5 months' warming (0.011 °C here) in each delta.
#[test]
fn ring_deltas_match_the_closed_form_through_preprocessing() {
    let onset = month("2004-01");
    let mut sites = lattice_sites(2, onset, 2.0, 4.51);
    sites[0].point = GeoPoint::new(0.2, 0.15).unwrap();
    sites[1].point = GeoPoint::new(0.2, 0.25).unwrap();
    let params = ScenarioParams {
        spec: GridSpec::new(80, 80, 0.0, 0.0, 0.005, -9999.0).unwrap(),
        start: month("2000-01"),
        n_months: 60,
        cadence: Cadence::Monthly,
        base_degc: 20.0,
        seasonal_amp_degc: 5.0,
        seasonal_phase_month: 7.0,
        trend_degc_per_month: 0.002,
        noise_sd_degc: 0.0,
        seed: 7,
        nodata_rate: 0.0,
        sites,
    };
    let scenario = generate(&params).unwrap();
    let anom = deseasonalized(&scenario.stack, onset);
    let k = 24;

    for (idx, site) in scenario.sites.iter().enumerate() {
        let rings = RingSpec::new(site.point, 10.0, 1.0).unwrap();
        let part = ring_partition(&params.spec, &rings);
        for (ring, cells) in part.rings.iter().enumerate() {
            let mid = rings.ring_mid_km(ring);
            let measured = spatial_delta(&anom, site, ring, mid, cells, k, 0.5).unwrap();
            let expected = expected_delta(&params, idx, &rings, mid, k).unwrap();
            assert!(
                (measured - expected).abs() <= 0.02,
                "site {idx} ring {ring}: measured {measured}, expected {expected}"
            );
        }
        // Before onset the only signal is the trend.
        let ring0 = &part.rings[0];
        let trend_only = params.trend_degc_per_month * (k as f64 + 1.0) / 2.0;
        for i in -6i64..=-1 {
            let m = onset.offset(i);
            let (series, _) = anom.cell_mean_series(ring0);
            let d = heatring::anomaly::temporal_delta(&series, m, k, 0.5).unwrap();
            assert!(
                (d - trend_only).abs() <= 0.02,
                "pre-onset month {m}: delta {d}, trend term {trend_only}"
            );
        }
    }
}

// Fifty noisy sites at the documented scenario scale: the across-site mean
// of the origin delta concentrates around the oracle within three standard
// errors of the ring-0 noise plus the deterministic slack.
#[test]
fn aggregate_origin_delta_concentrates_under_noise() {
    let onset = month("2010-01");
    let params = ScenarioParams {
        spec: GridSpec::new(200, 200, 0.0, 0.0, 0.005, -9999.0).unwrap(),
        start: month("2000-01"),
        n_months: 132,
        cadence: Cadence::Monthly,
        base_degc: 20.0,
        seasonal_amp_degc: 5.0,
        seasonal_phase_month: 7.0,
        trend_degc_per_month: 0.0,
        noise_sd_degc: 0.5,
        seed: 424_242,
        nodata_rate: 0.0,
        sites: lattice_sites(50, onset, 2.0, 4.51),
    };
    let scenario = generate(&params).unwrap();
    let anom = deseasonalized(&scenario.stack, onset);
    let k = 60;

    let mut measured_sum = 0.0;
    let mut expected_sum = 0.0;
    let mut inv_cells = 0.0;
    for (idx, site) in scenario.sites.iter().enumerate() {
        let rings = RingSpec::new(site.point, 10.0, 1.0).unwrap();
        let ring0 = &ring_partition(&params.spec, &rings).rings[0];
        measured_sum += spatial_delta(&anom, site, 0, 0.5, ring0, k, 0.5).unwrap();
        expected_sum += expected_delta(&params, idx, &rings, 0.0, k).unwrap();
        inv_cells += 1.0 / ring0.len() as f64;
    }
    let n = scenario.sites.len() as f64;
    let gap = (measured_sum / n - expected_sum / n).abs();
    // Var of the mean delta is at most sd²·(1 + 1/k)·mean(1/n_cells)/n.
    let sem = params.noise_sd_degc * ((1.0 + 1.0 / k as f64) * inv_cells / (n * n)).sqrt();
    assert!(gap <= 3.0 * sem + 0.02, "gap {gap} exceeds 3·{sem} + 0.02");
}

// A daily scenario without noise holds each month's level constant, so the
// monthly collapse must reproduce the monthly scenario.
#[test]
fn daily_generation_collapses_to_the_monthly_scenario() {
    let onset = month("2001-01");
    let mut params = ScenarioParams {
        spec: GridSpec::new(20, 20, 0.0, 0.0, 0.005, -9999.0).unwrap(),
        start: month("2000-03"),
        n_months: 14,
        cadence: Cadence::Daily,
        base_degc: 18.0,
        seasonal_amp_degc: 4.0,
        seasonal_phase_month: 1.0,
        trend_degc_per_month: 0.01,
        noise_sd_degc: 0.0,
        seed: 11,
        nodata_rate: 0.0,
        sites: vec![SyntheticSite {
            point: GeoPoint::new(0.05, 0.05).unwrap(),
            onset,
            amplitude_degc: 1.5,
            sigma_km: 2.0,
        }],
    };
    let daily = generate(&params).unwrap();
    params.cadence = Cadence::Monthly;
    let monthly = generate(&params).unwrap();

    let collapsed = monthly_from_daily(&daily.stack, 8).unwrap();
    assert_eq!(collapsed.periods, monthly.stack.periods);
    for (a, b) in collapsed.grids.iter().zip(&monthly.stack.grids) {
        for (va, vb) in a.values.iter().zip(&b.values) {
            assert!((va - vb).abs() <= 1e-12);
        }
    }
}

// Stacks and site registries written to disk come back bit-identical;
// NODATA holes included.
#[test]
fn scenarios_round_trip_through_the_ascii_store() {
    let params = ScenarioParams {
        spec: GridSpec::new(30, 25, 12.0, 40.0, 0.01, -9999.0).unwrap(),
        start: month("2002-06"),
        n_months: 18,
        cadence: Cadence::Monthly,
        base_degc: 22.0,
        seasonal_amp_degc: 3.0,
        seasonal_phase_month: 7.0,
        trend_degc_per_month: 0.001,
        noise_sd_degc: 0.4,
        seed: 99,
        nodata_rate: 0.05,
        sites: vec![SyntheticSite {
            point: GeoPoint::new(40.12, 12.15).unwrap(),
            onset: month("2003-01"),
            amplitude_degc: 2.0,
            sigma_km: 3.0,
        }],
    };
    let scenario = generate(&params).unwrap();
    assert!(scenario.stack.grids.iter().any(|g| g.missing_count() > 0));

    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_stack(dir.path(), &scenario.stack).unwrap();
    let back = load_stack(&manifest_path).unwrap();
    assert_eq!(back.spec, scenario.stack.spec);
    assert_eq!(back.periods, scenario.stack.periods);
    for (a, b) in back.grids.iter().zip(&scenario.stack.grids) {
        let bits = |g: &heatring::stack::Grid| -> Vec<u64> {
            g.values.iter().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(a), bits(b));
    }

    let sites_path = dir.path().join("sites.csv");
    save_sites(&sites_path, &scenario.sites).unwrap();
    assert_eq!(load_sites(&sites_path).unwrap(), scenario.sites);
}
