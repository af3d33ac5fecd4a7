#![no_main]

use libfuzzer_sys::fuzz_target;
use scatlab::scattering::ScatteringReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = ScatteringReport::from_json(text) {
        let _ = report.all_pass();
        let _ = report.to_json();
    }
});
