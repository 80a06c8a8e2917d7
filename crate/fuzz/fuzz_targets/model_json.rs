#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge_core::ModelParams;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = ModelParams::from_json(text) {
            let _ = model.predict_proba(&vec![0.0; model.features.len()]);
        }
    }
});
