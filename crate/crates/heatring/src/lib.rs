//! Quantifies localized land-surface-temperature change around point
//! facilities from gridded raster time series: epoch-aligned temporal
//! anomalies, radial decay profiles around each site, and population
//! exposure, plus a deterministic synthetic-scenario generator for
//! validation.
//!
//! All reductions are performed in a fixed order, so results are
//! byte-identical for a given input regardless of worker count.

pub mod anomaly;
pub mod chart;
pub mod config;
pub mod error;
pub mod exposure;
pub mod grid;
pub mod ingest;
pub mod numfmt;
pub mod outputs;
pub mod preprocess;
pub mod stack;
pub mod synth;
pub mod timeline;
