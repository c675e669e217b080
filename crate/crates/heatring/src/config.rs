//! Run configuration: one JSON file describing inputs, parameters, and the
//! optional synthetic scenario. Relative paths are resolved against the
//! directory the config file lives in; CLI flags override individual fields
//! after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anomaly::BandKind;
use crate::error::ConfigError;
use crate::exposure::Dedup;
use crate::synth::ScenarioParams;
use crate::timeline::MonthKey;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Stack manifest produced by `synth` or external tooling.
    pub manifest: Option<PathBuf>,
    /// Site registry CSV.
    pub sites: Option<PathBuf>,
    /// Fine population grid (persons per cell).
    pub population: Option<PathBuf>,
    /// Output directory. Not echoed: the echo must not depend on where it
    /// was written.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,

    /// Baseline length in months.
    pub k: usize,
    /// Epoch half-width: deltas for i in [-horizon, +horizon].
    pub horizon: usize,
    pub dr_km: f64,
    pub r_max_km: f64,
    /// Restrict ring 0 to the cell containing the site.
    pub center_cell_only: bool,
    /// Baseline lengths for the delta-at-origin sweep table.
    pub table_ks: Vec<usize>,
    pub band: BandKind,
    pub min_valid_fraction: f64,

    /// Minimum valid days for a monthly composite from daily input.
    pub min_valid_days: usize,
    pub deseasonalize: bool,
    /// Climatology window; when unset the window runs from the timeline
    /// start through the month before the earliest site start.
    pub climatology_start: Option<MonthKey>,
    pub climatology_end: Option<MonthKey>,
    pub climatology_min_samples: usize,
    /// Apply the MAD outlier mask. Off by default: a persistent local step
    /// is exactly what the mask flags, so masking can erase the signal the
    /// pipeline is meant to measure.
    pub mask_outliers: bool,
    pub mad_k: f64,
    pub mad_floor_degc: f64,
    pub urban_filter: bool,
    pub urban_radius_km: f64,
    pub urban_density_per_km2: f64,

    pub decay_fraction: f64,
    pub decay_abs_level_degc: f64,

    pub coarsen_factor: usize,
    pub bin_width_degc: f64,
    pub dedup: Dedup,
    /// Lower edge threshold for the total-affected summary.
    pub min_delta_degc: f64,

    /// Worker threads. Not echoed: results are identical for any count.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    /// Overrides the scenario seed when set.
    pub seed: Option<u64>,
    /// Persons per cell of the population grid `synth` writes.
    pub synth_population_per_cell: f64,
    pub scenario: Option<ScenarioParams>,

    /// Directory the config was loaded from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            sites: None,
            population: None,
            out_dir: PathBuf::from("out"),
            k: 60,
            horizon: 10,
            dr_km: 1.0,
            r_max_km: 10.0,
            center_cell_only: false,
            table_ks: vec![12, 24, 36, 48, 60],
            band: BandKind::Central95,
            min_valid_fraction: 0.5,
            min_valid_days: 8,
            deseasonalize: true,
            climatology_start: None,
            climatology_end: None,
            climatology_min_samples: 3,
            mask_outliers: false,
            mad_k: 3.0,
            mad_floor_degc: 0.05,
            urban_filter: true,
            urban_radius_km: 5.0,
            urban_density_per_km2: 1500.0,
            decay_fraction: 0.3,
            decay_abs_level_degc: 1.0,
            coarsen_factor: 10,
            bin_width_degc: 0.5,
            dedup: Dedup::Max,
            min_delta_degc: 0.5,
            workers: None,
            seed: None,
            synth_population_per_cell: 100.0,
            scenario: None,
            base_dir: PathBuf::new(),
        }
    }
}

impl RunConfig {
    /// Parses config JSON. Must never panic on arbitrary input.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.k < 1 {
            return bad("k must be >= 1".into());
        }
        if !(self.dr_km.is_finite() && self.dr_km > 0.0) {
            return bad(format!("dr_km must be > 0, got {}", self.dr_km));
        }
        if !(self.r_max_km.is_finite() && self.r_max_km >= self.dr_km) {
            return bad(format!("r_max_km must be >= dr_km, got {}", self.r_max_km));
        }
        if self.table_ks.is_empty() || self.table_ks.iter().any(|&k| k < 1) {
            return bad("table_ks must be a non-empty list of k >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.min_valid_fraction) {
            return bad(format!(
                "min_valid_fraction must be in [0, 1], got {}",
                self.min_valid_fraction
            ));
        }
        if let (Some(a), Some(b)) = (self.climatology_start, self.climatology_end) {
            if a > b {
                return bad(format!("climatology window {a}..{b} is reversed"));
            }
        }
        if self.climatology_min_samples < 1 {
            return bad("climatology_min_samples must be >= 1".into());
        }
        if !(self.mad_k.is_finite() && self.mad_k > 0.0) {
            return bad(format!("mad_k must be > 0, got {}", self.mad_k));
        }
        if !(self.mad_floor_degc.is_finite() && self.mad_floor_degc >= 0.0) {
            return bad(format!("mad_floor_degc must be >= 0, got {}", self.mad_floor_degc));
        }
        if !(self.urban_radius_km.is_finite() && self.urban_radius_km > 0.0) {
            return bad(format!("urban_radius_km must be > 0, got {}", self.urban_radius_km));
        }
        if !(self.urban_density_per_km2.is_finite() && self.urban_density_per_km2 >= 0.0) {
            return bad(format!(
                "urban_density_per_km2 must be >= 0, got {}",
                self.urban_density_per_km2
            ));
        }
        if !(0.0 < self.decay_fraction && self.decay_fraction < 1.0) {
            return bad(format!("decay_fraction must be in (0, 1), got {}", self.decay_fraction));
        }
        if !self.decay_abs_level_degc.is_finite() {
            return bad("decay_abs_level_degc must be finite".into());
        }
        if self.coarsen_factor < 1 {
            return bad("coarsen_factor must be >= 1".into());
        }
        if !(self.bin_width_degc.is_finite() && self.bin_width_degc > 0.0) {
            return bad(format!("bin_width_degc must be > 0, got {}", self.bin_width_degc));
        }
        if !self.min_delta_degc.is_finite() {
            return bad("min_delta_degc must be finite".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        if !(self.synth_population_per_cell.is_finite() && self.synth_population_per_cell >= 0.0)
        {
            return bad(format!(
                "synth_population_per_cell must be >= 0, got {}",
                self.synth_population_per_cell
            ));
        }
        Ok(())
    }

    /// Resolves a configured path against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The post-override configuration echoed into the output directory.
    pub fn effective_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_yields_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.k, 60);
        assert_eq!(cfg.horizon, 10);
        assert_eq!(cfg.dr_km, 1.0);
        assert_eq!(cfg.r_max_km, 10.0);
        assert_eq!(cfg.band, BandKind::Central95);
        assert_eq!(cfg.dedup, Dedup::Max);
        assert!(cfg.deseasonalize);
        assert!(!cfg.mask_outliers);
    }

    #[test]
    fn unknown_fields_and_bad_ranges_are_rejected() {
        assert!(RunConfig::from_json("{\"no_such_field\": 1}").is_err());
        assert!(RunConfig::from_json("{\"k\": 0}").is_err());
        assert!(RunConfig::from_json("{\"dr_km\": -1.0}").is_err());
        assert!(RunConfig::from_json("{\"r_max_km\": 0.5}").is_err());
        assert!(RunConfig::from_json("{\"decay_fraction\": 1.5}").is_err());
        assert!(RunConfig::from_json("{\"workers\": 0}").is_err());
        assert!(RunConfig::from_json("not json").is_err());
    }

    #[test]
    fn band_and_dedup_parse_their_labels() {
        let cfg = RunConfig::from_json("{\"band\": \"upper-p95\", \"dedup\": \"per-site\"}").unwrap();
        assert_eq!(cfg.band, BandKind::UpperP95);
        assert_eq!(cfg.dedup, Dedup::PerSite);
    }

    #[test]
    fn relative_paths_resolve_against_the_config_dir() {
        let mut cfg = RunConfig::default();
        cfg.base_dir = PathBuf::from("/data/run");
        assert_eq!(cfg.resolve(Path::new("stack/manifest.json")), PathBuf::from("/data/run/stack/manifest.json"));
        assert_eq!(cfg.resolve(Path::new("/abs/p.csv")), PathBuf::from("/abs/p.csv"));
    }

    #[test]
    fn effective_json_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.effective_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back.k, cfg.k);
        assert_eq!(back.table_ks, cfg.table_ks);
        // Rendering is stable: same config, same bytes.
        assert_eq!(text, back.effective_json());
    }
}
