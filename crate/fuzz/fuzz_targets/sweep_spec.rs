#![no_main]

use libfuzzer_sys::fuzz_target;
use scatlab::experiment::parse_sweep;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sweep) = parse_sweep(text) {
        assert!(!sweep.key.is_empty() && !sweep.values.is_empty());
    }
});
