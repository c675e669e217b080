#![no_main]

use libfuzzer_sys::fuzz_target;

// Run configuration JSON, including an optional embedded scenario. Both
// deserialization and the semantic validation pass must stay panic-free.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = heatring::config::RunConfig::from_json(text) {
            let _ = cfg.validate();
        }
    }
});
