#![no_main]

use libfuzzer_sys::fuzz_target;

// Site registry CSV: arbitrary bytes decode to records or a typed error.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(sites) = heatring::ingest::parse_sites(text) {
            let _ = heatring::ingest::write_sites(&sites);
        }
    }
});
