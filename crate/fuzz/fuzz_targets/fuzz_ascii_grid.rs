#![no_main]

use libfuzzer_sys::fuzz_target;

// Raster text of any shape must come back as Ok or a typed error. Panics
// and unbounded allocations are bugs.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = heatring::ingest::parse_grid(text) {
            // A parsed grid must be internally consistent.
            assert_eq!(grid.values.len(), grid.spec.n_cells());
            let _ = heatring::ingest::write_grid(&grid);
        }
    }
});
