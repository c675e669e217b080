//! Stack manifest: a JSON document naming the variable, cadence, grid spec,
//! and one raster file per timeline period. File paths are resolved relative
//! to the manifest's own directory, so a run directory can be moved or
//! diffed wholesale.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IngestError, ManifestError};
use crate::grid::GridSpec;
use crate::ingest::ascii::load_grid;
use crate::stack::RasterStack;
use crate::timeline::{Cadence, Period};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub period: String,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackManifest {
    pub variable: String,
    pub units: String,
    pub cadence: Cadence,
    pub spec: GridSpec,
    pub timeline: Vec<TimelineEntry>,
    #[serde(default)]
    pub gaps_allowed: bool,
}

impl StackManifest {
    /// Timeline labels parsed into ordered periods. Only valid on a manifest
    /// that passed `parse_manifest` validation.
    pub fn periods(&self) -> Result<Vec<Period>, ManifestError> {
        self.timeline
            .iter()
            .map(|e| Period::parse(&e.period, self.cadence).map_err(ManifestError::from))
            .collect()
    }
}

/// Parses and validates a manifest document. Must never panic on arbitrary
/// input. Validation: well-formed spec; parsable period labels; strictly
/// increasing timeline; no gaps unless `gaps_allowed`.
pub fn parse_manifest(text: &str) -> Result<StackManifest, ManifestError> {
    let manifest: StackManifest =
        serde_json::from_str(text).map_err(|e| ManifestError::Json(e.to_string()))?;
    manifest.spec.validate()?;
    if manifest.timeline.is_empty() {
        return Err(ManifestError::EmptyTimeline);
    }
    let periods = manifest.periods()?;
    for w in periods.windows(2) {
        if w[1] <= w[0] {
            return Err(ManifestError::Order {
                first: w[0].to_string(),
                second: w[1].to_string(),
            });
        }
        if !manifest.gaps_allowed && w[0].next() != w[1] {
            return Err(ManifestError::Gap {
                after: w[0].to_string(),
                next: w[1].to_string(),
            });
        }
    }
    Ok(manifest)
}

pub fn write_manifest(manifest: &StackManifest) -> String {
    let mut out = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    out.push('\n');
    out
}

pub fn load_manifest(path: &Path) -> Result<StackManifest, IngestError> {
    let text = fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_manifest(&text)
        .map_err(|source| IngestError::Manifest { path: path.to_path_buf(), source })
}

/// Loads every period grid named by the manifest and assembles the stack.
/// Grids are read concurrently; assembly order follows the timeline, and the
/// first error in timeline order wins, so failures are deterministic.
pub fn load_stack(manifest_path: &Path) -> Result<RasterStack, IngestError> {
    use rayon::prelude::*;

    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let periods = manifest
        .periods()
        .map_err(|source| IngestError::Manifest { path: manifest_path.to_path_buf(), source })?;

    let loaded: Vec<_> = manifest
        .timeline
        .par_iter()
        .map(|entry| {
            let path = resolve(base, &entry.file);
            let grid = load_grid(&path).map_err(|e| match e {
                IngestError::Io { path, source }
                    if source.kind() == std::io::ErrorKind::NotFound =>
                {
                    IngestError::MissingPeriodFile { period: entry.period.clone(), path }
                }
                other => other,
            })?;
            check_spec(&entry.file, &grid.spec, &manifest.spec)?;
            Ok(grid)
        })
        .collect();
    let mut grids = Vec::with_capacity(loaded.len());
    for result in loaded {
        grids.push(result?);
    }

    let stack = RasterStack {
        variable: manifest.variable,
        units: manifest.units,
        cadence: manifest.cadence,
        spec: manifest.spec,
        periods,
        grids,
    };
    stack.validate()?;
    Ok(stack)
}

/// Writes the stack as a manifest plus one grid file per period, under
/// `dir`, with grids in `grids/<period>.asc`. Returns the manifest path.
pub fn save_stack(dir: &Path, stack: &RasterStack) -> Result<PathBuf, IngestError> {
    use rayon::prelude::*;

    let grids_dir = dir.join("grids");
    fs::create_dir_all(&grids_dir)
        .map_err(|source| IngestError::Io { path: grids_dir.clone(), source })?;
    let entries: Vec<TimelineEntry> = stack
        .periods
        .iter()
        .map(|p| TimelineEntry { period: p.to_string(), file: format!("grids/{p}.asc") })
        .collect();
    entries
        .par_iter()
        .zip(stack.grids.par_iter())
        .map(|(entry, grid)| super::ascii::save_grid(&dir.join(&entry.file), grid))
        .collect::<Result<Vec<_>, _>>()?;

    let manifest = StackManifest {
        variable: stack.variable.clone(),
        units: stack.units.clone(),
        cadence: stack.cadence,
        spec: stack.spec,
        timeline: entries,
        gaps_allowed: true,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, write_manifest(&manifest))
        .map_err(|source| IngestError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn check_spec(file: &str, found: &GridSpec, expected: &GridSpec) -> Result<(), IngestError> {
    let mismatch = |field: &'static str, f: String, e: String| {
        Err(IngestError::SpecMismatch { file: file.to_string(), field, expected: e, found: f })
    };
    if found.ncols != expected.ncols {
        return mismatch("ncols", found.ncols.to_string(), expected.ncols.to_string());
    }
    if found.nrows != expected.nrows {
        return mismatch("nrows", found.nrows.to_string(), expected.nrows.to_string());
    }
    if found.xll_deg != expected.xll_deg {
        return mismatch("xllcorner", found.xll_deg.to_string(), expected.xll_deg.to_string());
    }
    if found.yll_deg != expected.yll_deg {
        return mismatch("yllcorner", found.yll_deg.to_string(), expected.yll_deg.to_string());
    }
    if found.cellsize_deg != expected.cellsize_deg {
        return mismatch(
            "cellsize",
            found.cellsize_deg.to_string(),
            expected.cellsize_deg.to_string(),
        );
    }
    // NODATA may differ between files; it is normalized away on load.
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stack::Grid;

    fn spec_json() -> String {
        r#"{"ncols":1,"nrows":1,"xll_deg":0.0,"yll_deg":0.0,"cellsize_deg":1.0,"nodata":-9999.0}"#
            .to_string()
    }

    fn manifest_json(timeline: &str, gaps: bool) -> String {
        format!(
            r#"{{"variable":"LST","units":"degC","cadence":"monthly","spec":{},"timeline":[{}],"gaps_allowed":{}}}"#,
            spec_json(),
            timeline,
            gaps
        )
    }

    #[test]
    fn parses_consistent_manifest() {
        let text = manifest_json(
            r#"{"period":"2010-01","file":"a.asc"},{"period":"2010-02","file":"b.asc"}"#,
            false,
        );
        let m = parse_manifest(&text).unwrap();
        assert_eq!(m.timeline.len(), 2);
        assert_eq!(m.cadence, Cadence::Monthly);
    }

    #[test]
    fn rejects_disorder_gap_and_empty() {
        let disorder = manifest_json(
            r#"{"period":"2010-02","file":"a.asc"},{"period":"2010-01","file":"b.asc"}"#,
            false,
        );
        assert!(matches!(parse_manifest(&disorder), Err(ManifestError::Order { .. })));

        let gap = manifest_json(
            r#"{"period":"2010-01","file":"a.asc"},{"period":"2010-03","file":"b.asc"}"#,
            false,
        );
        assert!(matches!(parse_manifest(&gap), Err(ManifestError::Gap { .. })));

        let gap_ok = manifest_json(
            r#"{"period":"2010-01","file":"a.asc"},{"period":"2010-03","file":"b.asc"}"#,
            true,
        );
        assert!(parse_manifest(&gap_ok).is_ok());

        assert!(matches!(parse_manifest(&manifest_json("", false)), Err(ManifestError::EmptyTimeline)));
    }

    #[test]
    fn rejects_bad_labels_and_bad_spec() {
        let bad_label = manifest_json(r#"{"period":"2010-13","file":"a.asc"}"#, false);
        assert!(matches!(parse_manifest(&bad_label), Err(ManifestError::Period(_))));

        let bad_spec = manifest_json(r#"{"period":"2010-01","file":"a.asc"}"#, false)
            .replace(r#""cellsize_deg":1.0"#, r#""cellsize_deg":-1.0"#);
        assert!(matches!(parse_manifest(&bad_spec), Err(ManifestError::Spec(_))));

        assert!(matches!(parse_manifest("not json"), Err(ManifestError::Json(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let text = manifest_json(r#"{"period":"2010-01","file":"a.asc"}"#, false);
        let m = parse_manifest(&text).unwrap();
        let again = parse_manifest(&write_manifest(&m)).unwrap();
        assert_eq!(again.variable, m.variable);
        assert_eq!(again.spec, m.spec);
        assert_eq!(again.timeline.len(), m.timeline.len());
    }

    #[test]
    fn stack_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(2, 2, 0.0, 0.0, 0.5, -9999.0).unwrap();
        let mut g0 = Grid::constant(spec, 1.25);
        g0.set(1, 1, f64::NAN);
        let g1 = Grid::constant(spec, -3.0);
        let stack = RasterStack {
            variable: "LST".into(),
            units: "degC".into(),
            cadence: Cadence::Monthly,
            spec,
            periods: vec![
                Period::Month("2011-06".parse().unwrap()),
                Period::Month("2011-07".parse().unwrap()),
            ],
            grids: vec![g0, g1],
        };
        let manifest_path = save_stack(dir.path(), &stack).unwrap();
        let loaded = load_stack(&manifest_path).unwrap();
        assert_eq!(loaded.periods, stack.periods);
        assert_eq!(loaded.spec, stack.spec);
        assert_eq!(loaded.grids[1], stack.grids[1]);
        assert!(loaded.grids[0].get(1, 1).is_nan());
        assert_eq!(loaded.grids[0].get(0, 0), 1.25);
    }

    #[test]
    fn missing_file_and_spec_mismatch_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(2, 2, 0.0, 0.0, 0.5, -9999.0).unwrap();
        let stack = RasterStack {
            variable: "LST".into(),
            units: "degC".into(),
            cadence: Cadence::Monthly,
            spec,
            periods: vec![Period::Month("2011-06".parse().unwrap())],
            grids: vec![Grid::constant(spec, 0.0)],
        };
        let manifest_path = save_stack(dir.path(), &stack).unwrap();

        let grid_path = dir.path().join("grids/2011-06.asc");
        let saved = fs::read_to_string(&grid_path).unwrap();
        fs::remove_file(&grid_path).unwrap();
        let e = load_stack(&manifest_path).unwrap_err();
        assert!(matches!(e, IngestError::MissingPeriodFile { .. }), "{e}");

        fs::write(&grid_path, saved.replace("NCOLS 2", "NCOLS 1").replace("0 0\n", "0\n")).unwrap();
        let e = load_stack(&manifest_path).unwrap_err();
        match e {
            IngestError::SpecMismatch { field, .. } => assert_eq!(field, "ncols"),
            other => panic!("expected spec mismatch, got {other}"),
        }
    }
}
