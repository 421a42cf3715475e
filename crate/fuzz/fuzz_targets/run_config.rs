#![no_main]

use corridor::exp::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_toml_str(text) {
            // Overlaying onto itself must be harmless.
            let _ = cfg.clone().overlay(cfg);
        }
    }
});
