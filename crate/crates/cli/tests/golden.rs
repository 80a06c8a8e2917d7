use promptgauge_core::assets::Assets;
use promptgauge_core::features::{extract_features, Feature, Scope};
use serde_json::Value;

#[test]
fn extractor_matches_golden_metrics() {
    let golden: Value =
        serde_json::from_str(include_str!("fixtures/golden_metrics.json")).unwrap();
    let assets = Assets::bundled();
    let mut mismatches = Vec::new();
    for doc in golden.as_array().unwrap() {
        let prompts: Vec<&str> = doc["prompts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p.as_str().unwrap())
            .collect();
        let got = extract_features(&prompts, Scope::Conversation, assets, None)
            .unwrap()
            .vector;
        for f in Feature::ALL {
            let want = doc["metrics"][f.name()].as_f64().unwrap();
            if (got.get(f) - want).abs() > 1e-6 {
                mismatches.push(format!("{} {}: got {} want {}", doc["id"], f, got.get(f), want));
            }
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}
