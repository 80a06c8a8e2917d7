#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge_core::features::{extract_features, Scope};
use promptgauge_core::text::{split_sentences, tokenize};
use promptgauge_core::Assets;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let assets = Assets::bundled();
    let _ = tokenize(text);
    for s in split_sentences(text, &assets.lexicons) {
        assert_eq!(&text[s.start..s.end], s.text);
    }
    // Split on NUL to exercise multi-prompt aggregation.
    let prompts: Vec<&str> = text.split('\0').collect();
    if let Ok(out) = extract_features(&prompts, Scope::Conversation, assets, None) {
        assert!(out.vector.values().iter().all(|v| v.is_finite()));
    }
});
