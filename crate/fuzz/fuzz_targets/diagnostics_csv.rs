#![no_main]

use libfuzzer_sys::fuzz_target;
use scatlab::diagnostics::{records_from_csv, records_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = records_from_csv(text) {
        let back = records_from_csv(&records_to_csv(&records)).expect("own output parses");
        assert_eq!(back.len(), records.len());
    }
});
