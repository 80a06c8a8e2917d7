#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge::{analyze_to_json, AnalyzeFailure, AnalyzeRequest};
use promptgauge_core::Assets;

fuzz_target!(|data: &[u8]| {
    let Ok(request) = AnalyzeRequest::from_json(data) else {
        return;
    };
    // Every decodable body ends in a report or a client error, never an
    // internal failure.
    if let Err(AnalyzeFailure::Internal(e)) = analyze_to_json(Assets::bundled(), None, &request) {
        panic!("internal error: {e}");
    }
});
