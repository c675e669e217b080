//! Synthetic-scenario generator: a seasonal + trend + noise background with
//! step-onset heat islands of known amplitude and Gaussian radial decay.
//! Because every injected quantity has a closed form, generated stacks serve
//! as ground truth for end-to-end recovery tests.
//!
//! # Noise algorithm
//!
//! Noise is counter-based, not sequential: the draw for (period p, cell c)
//! is a pure function of (seed, stream, p, c), so any generation schedule
//! produces the same bits. The fixed algorithm is
//!
//! ```text
//! mix(z)  = splitmix64 finalizer:
//!           z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//!           z = (z ^ z>>27) * 0x94D049BB133111EB
//!           z ^ z>>31
//! h(seed, stream, p, c) = mix(mix(mix(mix(seed ^ PHI) + PHI ^ stream) + PHI ^ p) + PHI ^ c)
//!                         with PHI = 0x9E3779B97F4A7C15, wrapping arithmetic
//! u(x)    = ((x >> 11) + 0.5) / 2^53             (uniform on (0, 1))
//! normal  = sqrt(-2 ln u1) * cos(2π u2)          (Box-Muller)
//!           u1 = u(h(seed, 1, p, 2c)), u2 = u(h(seed, 1, p, 2c+1))
//! ```
//!
//! Stream 1 is temperature noise, stream 2 the NODATA drop mask.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::grid::{haversine_km, ring_partition, GeoPoint, GridSpec, RingSpec};
use crate::ingest::SiteRecord;
use crate::stack::{Grid, RasterStack};
use crate::timeline::{days_in_month, Cadence, DayKey, MonthKey, Period};

/// One injected heat island: a step in time, a Gaussian bump in space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSite {
    pub point: GeoPoint,
    /// First month the step is active.
    pub onset: MonthKey,
    /// Step amplitude at the site itself, °C.
    pub amplitude_degc: f64,
    /// Gaussian decay scale: the bump is amplitude·exp(-d²/(2σ²)).
    pub sigma_km: f64,
}

fn default_nodata_rate() -> f64 {
    0.0
}

fn default_cadence() -> Cadence {
    Cadence::Monthly
}

/// Full description of a synthetic scenario. Serializes to the scenario
/// JSON the CLI consumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub spec: GridSpec,
    pub start: MonthKey,
    pub n_months: usize,
    #[serde(default = "default_cadence")]
    pub cadence: Cadence,
    /// Background level, °C.
    pub base_degc: f64,
    /// Seasonal cosine amplitude, °C.
    pub seasonal_amp_degc: f64,
    /// Calendar month (1..=12) at which the seasonal term peaks.
    pub seasonal_phase_month: f64,
    /// Linear warming applied as trend·t, t = months since `start`.
    pub trend_degc_per_month: f64,
    /// Standard deviation of i.i.d. normal noise per cell per period, °C.
    pub noise_sd_degc: f64,
    pub seed: u64,
    /// Probability that a cell-period is dropped to NODATA.
    #[serde(default = "default_nodata_rate")]
    pub nodata_rate: f64,
    pub sites: Vec<SyntheticSite>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub stack: RasterStack,
    /// Registry rows for the injected sites, onset as start of operations.
    pub sites: Vec<SiteRecord>,
}

const PHI: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_NOISE: u64 = 1;
const STREAM_NODATA: u64 = 2;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn counter_hash(seed: u64, stream: u64, period: u64, counter: u64) -> u64 {
    let mut h = mix(seed ^ PHI);
    h = mix(h.wrapping_add(PHI) ^ stream);
    h = mix(h.wrapping_add(PHI) ^ period);
    mix(h.wrapping_add(PHI) ^ counter)
}

/// Uniform on the open interval (0, 1).
fn unit_open(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw for (period, cell), pure in all arguments.
fn normal_draw(seed: u64, period: u64, cell: u64) -> f64 {
    let u1 = unit_open(counter_hash(seed, STREAM_NOISE, period, 2 * cell));
    let u2 = unit_open(counter_hash(seed, STREAM_NOISE, period, 2 * cell + 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn dropped(seed: u64, period: u64, cell: u64, rate: f64) -> bool {
    rate > 0.0 && unit_open(counter_hash(seed, STREAM_NODATA, period, cell)) < rate
}

fn validate(params: &ScenarioParams) -> Result<(), SynthError> {
    let bad = |reason: String| Err(SynthError::InvalidScenario { reason });
    params.spec.validate().map_err(|e| SynthError::InvalidScenario { reason: e.to_string() })?;
    if params.n_months == 0 {
        return bad("timeline is empty".into());
    }
    for v in [
        params.base_degc,
        params.seasonal_amp_degc,
        params.seasonal_phase_month,
        params.trend_degc_per_month,
    ] {
        if !v.is_finite() {
            return bad(format!("non-finite scenario parameter {v}"));
        }
    }
    if !(params.noise_sd_degc.is_finite() && params.noise_sd_degc >= 0.0) {
        return bad(format!("noise sd must be >= 0, got {}", params.noise_sd_degc));
    }
    if !(0.0..1.0).contains(&params.nodata_rate) {
        return bad(format!("nodata rate must be in [0, 1), got {}", params.nodata_rate));
    }
    let end = params.start.offset(params.n_months as i64 - 1);
    for (i, site) in params.sites.iter().enumerate() {
        if !(site.sigma_km.is_finite() && site.sigma_km > 0.0) {
            return bad(format!("site {i}: sigma must be > 0, got {}", site.sigma_km));
        }
        if !site.amplitude_degc.is_finite() {
            return bad(format!("site {i}: non-finite amplitude"));
        }
        if site.onset < params.start || site.onset > end {
            return bad(format!(
                "site {i}: onset {} outside timeline {}..={}",
                site.onset, params.start, end
            ));
        }
        if !params.spec.contains_point(site.point) {
            return Err(SynthError::SiteOutsideGrid {
                site_id: site_id(i),
                lat_deg: site.point.lat_deg,
                lon_deg: site.point.lon_deg,
            });
        }
    }
    Ok(())
}

fn site_id(index: usize) -> String {
    format!("site-{index:03}")
}

/// Gaussian bump of one site evaluated at every cell center.
fn kernel_field(spec: &GridSpec, site: &SyntheticSite) -> Vec<f64> {
    let denom = 2.0 * site.sigma_km * site.sigma_km;
    let mut field = Vec::with_capacity(spec.n_cells());
    for row in 0..spec.nrows {
        for col in 0..spec.ncols {
            let c = spec.cell_center_unchecked(row, col);
            let d = haversine_km(site.point, c);
            field.push(site.amplitude_degc * (-d * d / denom).exp());
        }
    }
    field
}

/// Generates the full stack plus the site registry. Same params (including
/// seed) give a bit-identical stack on any worker count.
pub fn generate(params: &ScenarioParams) -> Result<Scenario, SynthError> {
    validate(params)?;
    let spec = params.spec;
    let n_cells = spec.n_cells();

    // Sites grouped by onset month; prefix[g] holds the summed bump field of
    // every group up to g, so a month needs a single slice lookup.
    let mut onsets: Vec<i64> = params.sites.iter().map(|s| s.onset.0).collect();
    onsets.sort_unstable();
    onsets.dedup();
    let mut prefix: Vec<Vec<f64>> = Vec::with_capacity(onsets.len());
    for (g, &onset) in onsets.iter().enumerate() {
        let mut field = if g == 0 { vec![0.0; n_cells] } else { prefix[g - 1].clone() };
        for site in params.sites.iter().filter(|s| s.onset.0 == onset) {
            for (acc, v) in field.iter_mut().zip(kernel_field(&spec, site)) {
                *acc += v;
            }
        }
        prefix.push(field);
    }
    let bump_at = |month: MonthKey| -> Option<&[f64]> {
        match onsets.partition_point(|&o| o <= month.0) {
            0 => None,
            g => Some(&prefix[g - 1]),
        }
    };

    let months: Vec<MonthKey> = (0..params.n_months as i64).map(|i| params.start.offset(i)).collect();
    let periods: Vec<Period> = match params.cadence {
        Cadence::Monthly => months.iter().map(|&m| Period::Month(m)).collect(),
        Cadence::Daily => months
            .iter()
            .flat_map(|&m| {
                (1..=days_in_month(m.year(), m.month())).map(move |day| Period::Day(DayKey { month: m, day }))
            })
            .collect(),
    };

    let grids: Vec<Grid> = periods
        .par_iter()
        .enumerate()
        .map(|(p, period)| {
            let month = period.month();
            let t = month.months_since(params.start) as f64;
            let seasonal = params.seasonal_amp_degc
                * (std::f64::consts::TAU * (month.month() as f64 - params.seasonal_phase_month)
                    / 12.0)
                    .cos();
            let level = params.base_degc + seasonal + params.trend_degc_per_month * t;
            let bump = bump_at(month);
            let mut grid = Grid::constant(spec, 0.0);
            for cell in 0..n_cells {
                let v = if dropped(params.seed, p as u64, cell as u64, params.nodata_rate) {
                    f64::NAN
                } else {
                    let noise = if params.noise_sd_degc > 0.0 {
                        params.noise_sd_degc * normal_draw(params.seed, p as u64, cell as u64)
                    } else {
                        0.0
                    };
                    level + bump.map_or(0.0, |b| b[cell]) + noise
                };
                grid.values[cell] = v;
            }
            grid
        })
        .collect();

    let stack = RasterStack {
        variable: "lst_anomaly_input".into(),
        units: "degC".into(),
        cadence: params.cadence,
        spec,
        periods,
        grids,
    };
    debug_assert!(stack.validate().is_ok());

    let sites = params
        .sites
        .iter()
        .enumerate()
        .map(|(i, s)| SiteRecord {
            site_id: site_id(i),
            point: s.point,
            start_of_operations: s.onset,
            provider: None,
        })
        .collect();
    Ok(Scenario { stack, sites })
}

/// Closed-form expectation of the epoch-zero delta at the ring containing
/// `r_km` around site `site_index`, with a k-month baseline.
///
/// Every injected bump contributes `A·exp(-d²/(2σ²))` weighted by how much
/// of it the baseline window has already absorbed; a linear trend adds
/// `trend·(k+1)/2`. Assumes the seasonal term has been removed (the
/// deseasonalize stage) and noise has zero mean. Empty rings yield NaN.
pub fn expected_delta(
    params: &ScenarioParams,
    site_index: usize,
    rings: &RingSpec,
    r_km: f64,
    k: usize,
) -> Result<f64, SynthError> {
    validate(params)?;
    let bad = |reason: String| SynthError::InvalidScenario { reason };
    let target =
        params.sites.get(site_index).ok_or_else(|| bad(format!("no site {site_index}")))?;
    if k == 0 {
        return Err(bad("baseline length k must be >= 1".into()));
    }
    let ring = rings
        .ring_index(r_km)
        .ok_or_else(|| bad(format!("radius {r_km} outside [0, {}]", rings.r_max_km)))?;
    let cells = &ring_partition(&params.spec, rings).rings[ring];
    if cells.is_empty() {
        return Ok(f64::NAN);
    }

    let s = target.onset;
    let mut sum = 0.0;
    for cell in cells {
        let center = params.spec.cell_center_unchecked(cell.row, cell.col);
        for q in &params.sites {
            let active = if s >= q.onset { 1.0 } else { 0.0 };
            let absorbed = s.months_since(q.onset).clamp(0, k as i64) as f64 / k as f64;
            if active == 0.0 && absorbed == 0.0 {
                continue;
            }
            let d = haversine_km(q.point, center);
            sum += q.amplitude_degc * (-d * d / (2.0 * q.sigma_km * q.sigma_km)).exp()
                * (active - absorbed);
        }
    }
    let ring_mean = sum / cells.len() as f64;
    Ok(ring_mean + params.trend_degc_per_month * (k as f64 + 1.0) / 2.0)
}
