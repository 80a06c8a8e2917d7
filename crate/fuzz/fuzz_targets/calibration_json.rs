#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge_core::advisor::Calibration;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = Calibration::from_json(text);
    }
});
