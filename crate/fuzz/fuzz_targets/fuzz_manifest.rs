#![no_main]

use libfuzzer_sys::fuzz_target;

// Manifest JSON from untrusted sources: parse, then exercise the timeline
// derivation, which does its own validation on top of serde.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(manifest) = heatring::ingest::parse_manifest(text) {
            let _ = manifest.periods();
            let _ = heatring::ingest::write_manifest(&manifest);
        }
    }
});
