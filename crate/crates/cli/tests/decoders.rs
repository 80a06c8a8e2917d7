//! Decoder robustness on stable: replays the fuzz seed corpus and throws
//! arbitrary bytes at every parser entry point.

use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;

use promptgauge::{analyze_to_json, AnalyzeFailure, AnalyzeRequest};
use promptgauge_core::advisor::Calibration;
use promptgauge_core::assets::ErrorPatterns;
use promptgauge_core::code::extract_segments;
use promptgauge_core::corpus::{load_corpus, to_json, CorpusSchema};
use promptgauge_core::features::{extract_features, Dataset, Scope};
use promptgauge_core::{Assets, ModelParams};

fn decode_all(data: &[u8]) {
    let assets = Assets::bundled();
    let _ = Dataset::read_csv(data);
    if let Ok(req) = AnalyzeRequest::from_json(data) {
        if let Err(AnalyzeFailure::Internal(e)) = analyze_to_json(assets, None, &req) {
            panic!("internal error: {e}");
        }
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = load_corpus(text, CorpusSchema::DevgptIssues);
    if let Ok(report) = load_corpus(text, CorpusSchema::Minimal) {
        let again = load_corpus(&to_json(&report.conversations), CorpusSchema::Minimal).unwrap();
        assert_eq!(again.conversations, report.conversations);
    }
    assert_eq!(extract_segments(text, &assets.error_patterns).reassemble(), text);
    let prompts: Vec<&str> = text.split('\0').collect();
    if let Ok(out) = extract_features(&prompts, Scope::Conversation, assets, None) {
        assert!(out.vector.values().iter().all(|v| v.is_finite()));
    }
    if let Ok(m) = ModelParams::from_json(text) {
        let _ = m.predict_proba(&vec![0.0; m.features.len()]);
    }
    let _ = Calibration::from_json(text);
    let _ = ErrorPatterns::parse(text);
}

#[test]
fn fuzz_seed_corpus_replays_cleanly() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut n = 0;
    for target in fs::read_dir(&root).unwrap() {
        for seed in fs::read_dir(target.unwrap().path()).unwrap() {
            decode_all(&fs::read(seed.unwrap().path()).unwrap());
            n += 1;
        }
    }
    assert!(n >= 50, "only {n} seeds found");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arbitrary_bytes_never_panic(data in prop::collection::vec(any::<u8>(), 0..512)) {
        decode_all(&data);
    }

    #[test]
    fn json_shaped_text_never_panics(text in r#"[\[\]{}":, a-z0-9_.\-]{0,200}"#) {
        decode_all(text.as_bytes());
    }
}
