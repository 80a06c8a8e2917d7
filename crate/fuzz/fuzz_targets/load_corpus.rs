#![no_main]

use libfuzzer_sys::fuzz_target;
use promptgauge_core::corpus::{load_corpus, to_json, CorpusSchema};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = load_corpus(text, CorpusSchema::DevgptIssues);
    if let Ok(report) = load_corpus(text, CorpusSchema::Minimal) {
        // Whatever loads must survive a write/read cycle unchanged.
        let again = load_corpus(&to_json(&report.conversations), CorpusSchema::Minimal)
            .expect("re-load of written corpus");
        assert_eq!(again.conversations, report.conversations);
    }
});
