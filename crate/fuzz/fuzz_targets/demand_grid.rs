#![no_main]

use corridor::exp::config::MAX_GRID_POINTS;
use corridor::exp::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_grid(text) {
        assert!(!values.is_empty() && values.len() <= MAX_GRID_POINTS);
        assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
});
