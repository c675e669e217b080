//! `heatring`: pipeline CLI for localized land-surface-temperature change
//! around point facilities. Subcommands chain through the output directory:
//! `synth` writes a scenario, `preprocess` a cleaned anomaly stack,
//! `epoch`/`radial`/`exposure` the result tables, `report` the charts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use heatring::anomaly::{
    aggregate_sites, decay_metrics, epoch_delta_series, radial_profile, table_sweep,
    AggregateBand, EpochDeltaSeries, RadialProfile, SiteSeries,
};
use heatring::config::RunConfig;
use heatring::error::{AnomalyError, Error, IngestError};
use heatring::exposure::{
    coarsen_population, exposure_histogram, total_affected, Dedup, DeltaCurve, ExposureHistogram,
    SiteExposure,
};
use heatring::grid::{cells_within_radius, ring_partition, CellDistance, GridSpec, RingSpec};
use heatring::ingest::{load_grid, load_sites, load_stack, save_grid, save_sites, save_stack, SiteRecord};
use heatring::outputs::{
    decay_metrics_json, exposure_summary_json, read_epoch_band_csv, read_hist_csv,
    read_radial_csv, write_dropped_csv, write_epoch_band_csv, write_hist_csv, write_radial_csv,
    write_site_epoch_csv, write_site_radial_csv, write_table_csv, DroppedSite,
};
use heatring::preprocess::{
    climatology, deseasonalize, mask_outliers, monthly_from_daily, site_validity, urban_filter,
    DropReason,
};
use heatring::stack::{Grid, RasterStack};
use heatring::synth::{generate, ScenarioParams};
use heatring::timeline::{Cadence, MonthKey};

#[derive(Parser)]
#[command(name = "heatring", version, about = "Localized LST change around point facilities")]
struct Cli {
    /// Run configuration JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Baseline length in months.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Epoch half-width in months.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Ring width in km.
    #[arg(long = "dr-km", global = true)]
    dr_km: Option<f64>,
    /// Outer analysis radius in km.
    #[arg(long = "r-max-km", global = true)]
    r_max_km: Option<f64>,
    /// Exposure histogram bin width in degC.
    #[arg(long = "bin-width", global = true)]
    bin_width: Option<f64>,
    /// Overlap handling: max (count once) or per-site.
    #[arg(long, global = true, value_parser = ["max", "per-site"])]
    dedup: Option<String>,
    /// Skip the climatology subtraction.
    #[arg(long = "no-deseasonalize", global = true)]
    no_deseasonalize: bool,
    /// Use only the cell containing each site as its origin series.
    #[arg(long = "center-cell-only", global = true)]
    center_cell_only: bool,
    /// Worker threads (results are identical for any count).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Scenario noise seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Generate the configured synthetic scenario to disk.
    Synth,
    /// Clean the input stack and select analysable sites.
    Preprocess,
    /// Per-site epoch deltas, the aggregate band, and the baseline sweep.
    Epoch,
    /// Radial decay profile and its crossing metrics.
    Radial,
    /// Coarsen population and bin it by experienced delta.
    Exposure,
    /// Render SVG charts from the result tables.
    Report,
}

struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn missing(what: &str, path: &Path) -> CliError {
        CliError {
            code: 2,
            kind: "missing-input",
            message: format!("{what} not found: {}", path.display()),
        }
    }

    /// Missing stage output: same as `missing`, plus the likely remedy.
    fn missing_stage(what: &str, path: &Path) -> CliError {
        CliError {
            code: 2,
            kind: "missing-input",
            message: format!("{what} not found: {} (run the upstream stage first)", path.display()),
        }
    }

    fn validation(message: String) -> CliError {
        CliError { code: 3, kind: "validation", message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let (code, kind) = match &e {
            Error::Ingest(IngestError::Io { source, .. })
                if source.kind() == std::io::ErrorKind::NotFound =>
            {
                (2, "missing-input")
            }
            Error::Ingest(IngestError::MissingPeriodFile { .. }) => (2, "missing-input"),
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                (2, "missing-input")
            }
            Error::Anomaly(AnomalyError::InsufficientHistory { .. })
            | Error::Anomaly(AnomalyError::NoValidSites) => (4, "insufficient-history"),
            _ => (3, "validation"),
        };
        CliError { code, kind, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match build_config(&cli) {
        Ok(cfg) => {
            let run = || dispatch(cli.cmd, &cfg);
            match cfg.workers {
                Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                    Ok(pool) => pool.install(run),
                    Err(e) => Err(CliError::validation(format!("worker pool: {e}"))),
                },
                None => run(),
            }
        }
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = serde_json::json!({
                "code": e.code,
                "kind": e.kind,
                "message": e.message,
            });
            eprintln!("{doc}");
            ExitCode::from(e.code)
        }
    }
}

/// Config file, then HEATRING_OUT, then flags, strongest last.
fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::missing("config", path));
            }
            let mut cfg = RunConfig::load(path).map_err(Error::from)?;
            cfg.out_dir = cfg.resolve(&cfg.out_dir.clone());
            cfg
        }
        None => RunConfig::default(),
    };
    if let Ok(out) = std::env::var("HEATRING_OUT") {
        if !out.is_empty() {
            cfg.out_dir = PathBuf::from(out);
        }
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
    }
    if let Some(dr) = cli.dr_km {
        cfg.dr_km = dr;
    }
    if let Some(r) = cli.r_max_km {
        cfg.r_max_km = r;
    }
    if let Some(w) = cli.bin_width {
        cfg.bin_width_degc = w;
    }
    if let Some(d) = &cli.dedup {
        cfg.dedup = match d.as_str() {
            "per-site" => Dedup::PerSite,
            _ => Dedup::Max,
        };
    }
    if cli.no_deseasonalize {
        cfg.deseasonalize = false;
    }
    if cli.center_cell_only {
        cfg.center_cell_only = true;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    cfg.validate().map_err(Error::from)?;
    Ok(cfg)
}

fn dispatch(cmd: Cmd, cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    write_file(&cfg.out_dir.join("effective_config.json"), cfg.effective_json().as_bytes())?;
    match cmd {
        Cmd::Synth => cmd_synth(cfg),
        Cmd::Preprocess => cmd_preprocess(cfg),
        Cmd::Epoch => cmd_epoch(cfg),
        Cmd::Radial => cmd_radial(cfg),
        Cmd::Exposure => cmd_exposure(cfg),
        Cmd::Report => cmd_report(cfg),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::from(Error::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Input path: explicit config entry wins, otherwise the conventional
/// location under the output directory.
fn input_path(cfg: &RunConfig, configured: &Option<PathBuf>, conventional: &str) -> PathBuf {
    match configured {
        Some(p) => cfg.resolve(p),
        None => cfg.out_dir.join(conventional),
    }
}

fn require(what: &str, path: PathBuf) -> Result<PathBuf, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::missing_stage(what, &path))
    }
}

fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let mut params: ScenarioParams = cfg
        .scenario
        .clone()
        .ok_or_else(|| CliError::validation("config has no scenario section".into()))?;
    if let Some(seed) = cfg.seed {
        params.seed = seed;
    }
    let scenario = generate(&params).map_err(Error::from)?;

    let dir = cfg.out_dir.join("scenario");
    save_stack(&dir, &scenario.stack).map_err(Error::from)?;
    save_sites(&dir.join("sites.csv"), &scenario.sites).map_err(Error::from)?;
    let pop = Grid::constant(params.spec, cfg.synth_population_per_cell);
    save_grid(&dir.join("population.asc"), &pop).map_err(Error::from)?;
    Ok(())
}

/// Ring-0 cells of a site: the disk of the innermost ring, or just the
/// containing cell in center-cell-only mode. Empty means no coverage.
fn origin_cells(spec: &GridSpec, site: &SiteRecord, cfg: &RunConfig) -> Vec<CellDistance> {
    if cfg.center_cell_only {
        match spec.cell_of(site.point) {
            Some((row, col)) => {
                let d = cells_within_radius(spec, site.point, 0.0);
                d.cells.into_iter().filter(|c| c.row == row && c.col == col).collect()
            }
            None => Vec::new(),
        }
    } else {
        match RingSpec::new(site.point, cfg.r_max_km, cfg.dr_km) {
            Ok(ring) => {
                let mut rings = ring_partition(spec, &ring).rings;
                rings.swap_remove(0)
            }
            Err(_) => Vec::new(),
        }
    }
}

fn cmd_preprocess(cfg: &RunConfig) -> Result<(), CliError> {
    let manifest = require("stack manifest", input_path(cfg, &cfg.manifest, "scenario/manifest.json"))?;
    let sites_path = require("sites CSV", input_path(cfg, &cfg.sites, "scenario/sites.csv"))?;

    let raw = load_stack(&manifest).map_err(Error::from)?;
    let sites = load_sites(&sites_path).map_err(Error::from)?;
    let monthly = match raw.cadence {
        Cadence::Monthly => raw,
        Cadence::Daily => monthly_from_daily(&raw, cfg.min_valid_days).map_err(Error::from)?,
    };

    let mut dropped: Vec<DroppedSite> = Vec::new();

    // Climatology window: configured, or all months before the earliest
    // site start (uncontaminated by any injection), clamped to the
    // timeline.
    let anom = if cfg.deseasonalize {
        let first = monthly.first_month().ok_or_else(|| {
            CliError::validation("stack has no months".into())
        })?;
        let last = monthly.last_month().unwrap();
        let window = match (cfg.climatology_start, cfg.climatology_end) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let earliest = sites
                    .iter()
                    .map(|s| s.start_of_operations)
                    .min()
                    .ok_or_else(|| CliError::validation("sites CSV has no rows".into()))?;
                let end = MonthKey(earliest.0 - 1).min(last).max(first);
                (first, end)
            }
        };
        let clim =
            climatology(&monthly, window, cfg.climatology_min_samples).map_err(Error::from)?;
        deseasonalize(&monthly, &clim).map_err(Error::from)?
    } else {
        monthly
    };

    let (anom, masked_cells) = if cfg.mask_outliers {
        let before: usize = anom.grids.iter().map(|g| g.missing_count()).sum();
        let masked = mask_outliers(&anom, cfg.mad_k, cfg.mad_floor_degc);
        let after: usize = masked.grids.iter().map(|g| g.missing_count()).sum();
        (masked, after - before)
    } else {
        (anom, 0)
    };

    // Urban filter runs only when a population grid is available.
    let pop_path = input_path(cfg, &cfg.population, "scenario/population.asc");
    let mut kept: Vec<SiteRecord> = sites;
    let urban_applied = cfg.urban_filter && pop_path.exists();
    if urban_applied {
        let pop = load_grid(&pop_path).map_err(Error::from)?;
        let (keep, drop) =
            urban_filter(&kept, &pop, cfg.urban_radius_km, cfg.urban_density_per_km2);
        kept = keep;
        for (site, reason) in drop {
            dropped.push(DroppedSite {
                site_id: site.site_id,
                reason,
                valid_fraction: f64::NAN,
            });
        }
    }

    let mut analysable = Vec::new();
    for site in kept {
        let ring0 = origin_cells(&anom.spec, &site, cfg);
        if ring0.is_empty() {
            dropped.push(DroppedSite {
                site_id: site.site_id,
                reason: DropReason::NoCoverage,
                valid_fraction: f64::NAN,
            });
            continue;
        }
        let v = site_validity(&anom, &site, &ring0, cfg.k, cfg.horizon, cfg.min_valid_fraction);
        if v.keep {
            analysable.push(site);
        } else {
            dropped.push(DroppedSite {
                site_id: site.site_id,
                reason: v.reason.expect("dropped sites carry a reason"),
                valid_fraction: v.valid_fraction,
            });
        }
    }

    let clean = cfg.out_dir.join("clean");
    save_stack(&clean, &anom).map_err(Error::from)?;
    save_sites(&clean.join("kept_sites.csv"), &analysable).map_err(Error::from)?;
    let mut buf = Vec::new();
    write_dropped_csv(&mut buf, &dropped).map_err(|e| io_err(&clean, e))?;
    write_file(&clean.join("dropped_sites.csv"), &buf)?;

    let summary = serde_json::json!({
        "months": anom.len(),
        "sites_in": analysable.len() + dropped.len(),
        "sites_kept": analysable.len(),
        "sites_dropped": dropped.len(),
        "deseasonalized": cfg.deseasonalize,
        "masked_cells": masked_cells,
        "urban_filter_applied": urban_applied,
    });
    write_file(
        &clean.join("preprocess_summary.json"),
        format!("{}\n", serde_json::to_string_pretty(&summary).expect("finite")).as_bytes(),
    )?;
    Ok(())
}

fn load_clean(cfg: &RunConfig) -> Result<(RasterStack, Vec<SiteRecord>), CliError> {
    let manifest = require("cleaned stack", cfg.out_dir.join("clean/manifest.json"))?;
    let sites_path = require("kept sites", cfg.out_dir.join("clean/kept_sites.csv"))?;
    let stack = load_stack(&manifest).map_err(Error::from)?;
    let sites = load_sites(&sites_path).map_err(Error::from)?;
    if sites.is_empty() {
        return Err(CliError::from(Error::Anomaly(AnomalyError::NoValidSites)));
    }
    Ok((stack, sites))
}

fn cmd_epoch(cfg: &RunConfig) -> Result<(), CliError> {
    let (anom, sites) = load_clean(cfg)?;

    let mut series_list: Vec<EpochDeltaSeries> = Vec::with_capacity(sites.len());
    let mut site_series: Vec<SiteSeries> = Vec::with_capacity(sites.len());
    for site in &sites {
        let ring0 = origin_cells(&anom.spec, site, cfg);
        if ring0.is_empty() {
            continue;
        }
        let (series, _) = anom.cell_mean_series(&ring0);
        series_list.push(epoch_delta_series(
            &series,
            &site.site_id,
            site.start_of_operations,
            cfg.k,
            cfg.horizon,
            cfg.min_valid_fraction,
        ));
        site_series.push(SiteSeries {
            site_id: site.site_id.clone(),
            start: site.start_of_operations,
            series,
        });
    }
    if series_list.is_empty() {
        return Err(CliError::from(Error::Anomaly(AnomalyError::NoValidSites)));
    }

    // A run where no site has a finite origin delta carries no signal; tell
    // the two failure modes apart by whether any axis fell short.
    let origin_all_nan =
        series_list.iter().all(|s| s.delta(0).is_nan());
    if origin_all_nan {
        if series_list.iter().any(|s| s.insufficient_history) {
            let first = anom.first_month().expect("non-empty stack");
            let last = anom.last_month().expect("non-empty stack");
            let starts: Vec<MonthKey> = site_series.iter().map(|s| s.start).collect();
            let need_start = starts.iter().min().expect("non-empty").offset(
                -((cfg.k + cfg.horizon) as i64),
            );
            let need_end = starts.iter().max().expect("non-empty").offset(cfg.horizon as i64);
            return Err(CliError::from(Error::Anomaly(AnomalyError::InsufficientHistory {
                need_start: need_start.to_string(),
                need_end: need_end.to_string(),
                have_start: first.to_string(),
                have_end: last.to_string(),
            })));
        }
        return Err(CliError::validation("no site has a finite origin delta".into()));
    }

    let band = aggregate_sites(&series_list, cfg.band).map_err(Error::from)?;
    let dir = cfg.out_dir.join("epoch");
    let mut buf = Vec::new();
    write_epoch_band_csv(&mut buf, &band).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("epoch_band.csv"), &buf)?;

    let mut buf = Vec::new();
    write_site_epoch_csv(&mut buf, &series_list).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("site_epoch.csv"), &buf)?;

    let (rows, exclusions) = table_sweep(&site_series, &cfg.table_ks, cfg.min_valid_fraction);
    let mut buf = Vec::new();
    write_table_csv(&mut buf, &rows).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("table.csv"), &buf)?;

    let mut text = String::from("site_id,k,reason\n");
    for x in &exclusions {
        text.push_str(&format!("{},{},{}\n", x.site_id, x.k, x.reason));
    }
    write_file(&dir.join("table_exclusions.csv"), text.as_bytes())?;
    Ok(())
}

fn cmd_radial(cfg: &RunConfig) -> Result<(), CliError> {
    let (anom, sites) = load_clean(cfg)?;
    let (profile, site_rows) = radial_profile(
        &anom,
        &sites,
        cfg.r_max_km,
        cfg.dr_km,
        cfg.k,
        cfg.min_valid_fraction,
        cfg.band,
    )
    .map_err(Error::from)?;

    let dir = cfg.out_dir.join("radial");
    let mut buf = Vec::new();
    write_radial_csv(&mut buf, &profile).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("radial_profile.csv"), &buf)?;

    let mut buf = Vec::new();
    write_site_radial_csv(&mut buf, &site_rows).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("site_radial.csv"), &buf)?;

    let metrics =
        decay_metrics(&profile, cfg.decay_fraction, cfg.decay_abs_level_degc).map_err(Error::from)?;
    write_file(&dir.join("decay_metrics.json"), decay_metrics_json(&metrics).as_bytes())?;
    Ok(())
}

fn cmd_exposure(cfg: &RunConfig) -> Result<(), CliError> {
    let profile_path = require("radial profile", cfg.out_dir.join("radial/radial_profile.csv"))?;
    let sites_path = require("kept sites", cfg.out_dir.join("clean/kept_sites.csv"))?;
    let pop_path =
        require("population grid", input_path(cfg, &cfg.population, "scenario/population.asc"))?;

    let text = std::fs::read_to_string(&profile_path).map_err(|e| io_err(&profile_path, e))?;
    let rows = read_radial_csv(&text).map_err(Error::from)?;
    let mids: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.row.mean).collect();
    let curve = DeltaCurve::new("aggregate", cfg.r_max_km, &mids, &means).map_err(Error::from)?;

    let sites = load_sites(&sites_path).map_err(Error::from)?;
    if sites.is_empty() {
        return Err(CliError::from(Error::Anomaly(AnomalyError::NoValidSites)));
    }
    let fine = load_grid(&pop_path).map_err(Error::from)?;
    let coarse = coarsen_population(&fine, cfg.coarsen_factor).map_err(Error::from)?;

    let exposures: Vec<SiteExposure> = sites
        .iter()
        .map(|s| SiteExposure {
            site_id: s.site_id.clone(),
            point: s.point,
            curve: curve.clone(),
        })
        .collect();
    let hist = exposure_histogram(
        &exposures,
        &coarse.grid,
        cfg.r_max_km,
        cfg.bin_width_degc,
        cfg.dedup,
    )
    .map_err(Error::from)?;
    let affected = total_affected(&hist, cfg.min_delta_degc);

    let dir = cfg.out_dir.join("exposure");
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    save_grid(&dir.join("population_coarse.asc"), &coarse.grid).map_err(Error::from)?;
    let mut buf = Vec::new();
    write_hist_csv(&mut buf, &hist).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("exposure_hist.csv"), &buf)?;
    write_file(
        &dir.join("exposure_summary.json"),
        exposure_summary_json(&hist, cfg.r_max_km, cfg.min_delta_degc, affected).as_bytes(),
    )?;
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let band_path = require("epoch band", cfg.out_dir.join("epoch/epoch_band.csv"))?;
    let radial_path = require("radial profile", cfg.out_dir.join("radial/radial_profile.csv"))?;
    let hist_path = require("exposure histogram", cfg.out_dir.join("exposure/exposure_hist.csv"))?;

    let text = std::fs::read_to_string(&band_path).map_err(|e| io_err(&band_path, e))?;
    let band_rows = read_epoch_band_csv(&text).map_err(Error::from)?;
    if band_rows.is_empty() {
        return Err(CliError::validation("epoch band CSV has no rows".into()));
    }
    let band = AggregateBand {
        k: cfg.k,
        horizon: band_rows.iter().map(|r| r.x as i64).max().unwrap_or(0).unsigned_abs() as usize,
        rows: band_rows.iter().map(|r| r.row).collect(),
    };

    let text = std::fs::read_to_string(&radial_path).map_err(|e| io_err(&radial_path, e))?;
    let radial_rows = read_radial_csv(&text).map_err(Error::from)?;
    if radial_rows.is_empty() {
        return Err(CliError::validation("radial profile CSV has no rows".into()));
    }
    let profile = RadialProfile {
        dr_km: cfg.dr_km,
        r_max_km: cfg.r_max_km,
        r_mid_km: radial_rows.iter().map(|r| r.x).collect(),
        rows: radial_rows.iter().map(|r| r.row).collect(),
    };

    let text = std::fs::read_to_string(&hist_path).map_err(|e| io_err(&hist_path, e))?;
    let hist_rows = read_hist_csv(&text).map_err(Error::from)?;
    let bin_width = hist_rows.first().map_or(cfg.bin_width_degc, |r| r.hi - r.lo);
    let hist = ExposureHistogram {
        bin_width,
        bins: hist_rows.iter().map(|r| r.population).collect(),
        total: hist_rows.iter().map(|r| r.population).sum(),
        dedup: cfg.dedup,
    };

    let dir = cfg.out_dir.join("report");
    write_file(&dir.join("epoch_band.svg"), heatring::chart::epoch_band_svg(&band).as_bytes())?;
    write_file(
        &dir.join("radial_profile.svg"),
        heatring::chart::radial_profile_svg(&profile).as_bytes(),
    )?;
    write_file(&dir.join("exposure_hist.svg"), heatring::chart::exposure_svg(&hist).as_bytes())?;
    Ok(())
}

