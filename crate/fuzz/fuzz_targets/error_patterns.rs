#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge_core::assets::ErrorPatterns;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = ErrorPatterns::parse(text) {
            let _ = p.first_match("TypeError: x is undefined");
        }
    }
});
