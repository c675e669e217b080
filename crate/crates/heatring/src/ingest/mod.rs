//! Readers and writers for the on-disk formats: ASCII raster grids, JSON
//! stack manifests, and site registry CSVs. String-level parsers are split
//! from path-level loaders so they can be exercised directly (and fuzzed).

pub mod ascii;
pub mod manifest;
pub mod sites;

pub use ascii::{load_grid, parse_grid, save_grid, write_grid};
pub use manifest::{load_manifest, load_stack, parse_manifest, save_stack, write_manifest, StackManifest, TimelineEntry};
pub use sites::{load_sites, parse_sites, save_sites, write_sites, SiteRecord};
