//! Error types. Each pipeline stage has its own enum so callers can map
//! failures to distinct diagnostics (and the CLI to distinct exit codes).

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimelineError {
    #[error("invalid month label {label:?} (expected YYYY-MM)")]
    BadMonth { label: String },
    #[error("invalid day label {label:?} (expected YYYY-MM-DD)")]
    BadDay { label: String },
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid spec: {reason}")]
    InvalidSpec { reason: String },
    #[error("cell index ({row}, {col}) out of range for {nrows}x{ncols} grid")]
    IndexOutOfRange { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("invalid point lat={lat_deg} lon={lon_deg}")]
    InvalidPoint { lat_deg: f64, lon_deg: f64 },
    #[error("invalid ring spec: {reason}")]
    InvalidRingSpec { reason: String },
}

/// ASCII-grid parse failure with a 1-based line and token column.
#[derive(Debug, Error)]
#[error("parse error at line {line}, column {col}: {kind}")]
pub struct GridParseError {
    pub line: usize,
    pub col: usize,
    pub kind: GridParseErrorKind,
}

#[derive(Debug, Error)]
pub enum GridParseErrorKind {
    #[error("missing header line, expected key {expected}")]
    MissingHeader { expected: &'static str },
    #[error("expected header key {expected}, found {found:?}")]
    BadHeaderKey { expected: &'static str, found: String },
    #[error("invalid value for {key}: {token:?}")]
    BadHeaderValue { key: &'static str, token: String },
    #[error("non-numeric token {token:?}")]
    BadNumber { token: String },
    #[error("wrong cell count: expected {expected} values on this row, found {found}")]
    WrongCellCount { expected: usize, found: usize },
    #[error("missing data row: expected {expected} rows, found {found}")]
    MissingRow { expected: usize, found: usize },
    #[error("unexpected trailing content after {expected} data rows")]
    TrailingData { expected: usize },
    #[error("{0}")]
    InvalidSpec(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("json: {0}")]
    Json(String),
    #[error("invalid grid spec: {0}")]
    Spec(#[from] GridError),
    #[error("invalid period label: {0}")]
    Period(#[from] TimelineError),
    #[error("timeline out of order: {second} does not follow {first}")]
    Order { first: String, second: String },
    #[error("timeline gap after {after} (next listed is {next}); set gaps_allowed to accept")]
    Gap { after: String, next: String },
    #[error("timeline is empty")]
    EmptyTimeline,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    GridParse { path: PathBuf, source: GridParseError },
    #[error("manifest {path}: {source}")]
    Manifest { path: PathBuf, source: ManifestError },
    #[error("timeline out of order: {second} does not follow {first}")]
    TimelineOrder { first: String, second: String },
    #[error("missing period file for {period}: {path}")]
    MissingPeriodFile { period: String, path: PathBuf },
    #[error("grid spec mismatch in {file}: {field} is {found}, manifest says {expected}")]
    SpecMismatch { file: String, field: &'static str, expected: String, found: String },
    #[error("sites csv {path}: {source}")]
    SitesCsv { path: PathBuf, source: SitesError },
    #[error("stack is empty (no periods)")]
    EmptyStack,
    #[error("inconsistent stack: {reason}")]
    Inconsistent { reason: String },
}

#[derive(Debug, Error)]
pub enum SitesError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("record {line}: duplicate site_id {id:?}")]
    DuplicateSiteId { line: u64, id: String },
    #[error("record {line}: {field} out of range: {value}")]
    CoordinateRange { line: u64, field: &'static str, value: f64 },
    #[error("record {line}: {field} must be a number, got {token:?}")]
    BadNumber { line: u64, field: &'static str, token: String },
    #[error("record {line}: unparsable start_of_operations {value:?}")]
    BadDate { line: u64, value: String },
    #[error("record {line}: empty site_id")]
    EmptySiteId { line: u64 },
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("operation requires {expected} cadence, stack is {found}")]
    CadenceMismatch { expected: &'static str, found: String },
    #[error("climatology window is empty")]
    EmptyWindow,
    #[error("climatology window [{start}, {end}] not covered by stack timeline [{t0}, {t1}]")]
    WindowOutsideTimeline { start: String, end: String, t0: String, t1: String },
    #[error("grid spec mismatch between stack and climatology")]
    SpecMismatch,
    #[error("population grid does not contain site {site_id}")]
    NoCoverage { site_id: String },
}

#[derive(Debug, Error)]
pub enum AnomalyError {
    #[error("ring {ring} around {site_id} contains no grid cells")]
    EmptyRing { site_id: String, ring: usize },
    #[error("insufficient history: need months [{need_start}, {need_end}], series covers [{have_start}, {have_end}]")]
    InsufficientHistory {
        need_start: String,
        need_end: String,
        have_start: String,
        have_end: String,
    },
    #[error("no site produced a valid delta")]
    NoValidSites,
    #[error("aggregate of an empty site list")]
    EmptyAggregate,
    #[error("invalid ring geometry: {reason}")]
    InvalidRings { reason: String },
    #[error("decay metrics undefined: profile peak is {peak} (must be > 0)")]
    NonPositivePeak { peak: f64 },
    #[error("empty radial profile")]
    EmptyProfile,
}

#[derive(Debug, Error)]
pub enum ExposureError {
    #[error("grid dimensions {nrows}x{ncols} not divisible by factor {factor}; pad or crop the population grid")]
    NotDivisible { nrows: usize, ncols: usize, factor: usize },
    #[error("coarsen factor must be >= 1")]
    BadFactor,
    #[error("empty site profile for {site_id}")]
    EmptyProfile { site_id: String },
    #[error("bin width must be > 0, got {0}")]
    BadBinWidth(f64),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {reason}")]
    InvalidScenario { reason: String },
    #[error("site {site_id} at ({lat_deg}, {lon_deg}) lies outside the scenario grid")]
    SiteOutsideGrid { site_id: String, lat_deg: f64, lon_deg: f64 },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

/// Catch-all for callers that do not need stage-level granularity.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Anomaly(#[from] AnomalyError),
    #[error(transparent)]
    Exposure(#[from] ExposureError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
