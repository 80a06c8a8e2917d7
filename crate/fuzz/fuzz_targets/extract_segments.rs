#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge_core::code::extract_segments;
use promptgauge_core::Assets;

fuzz_target!(|data: &[u8]| {
    if let Ok(raw) = std::str::from_utf8(data) {
        let seg = extract_segments(raw, &Assets::bundled().error_patterns);
        assert_eq!(seg.reassemble(), raw);
    }
});
