#![no_main]

use libfuzzer_sys::fuzz_target;
use scatlab::persist::{field_from_csv, field_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = field_from_csv(text) {
        let back = field_from_csv(&field_to_csv(&f)).expect("own output parses");
        assert_eq!(back.values, f.values);
    }
});
