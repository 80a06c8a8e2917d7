//! Print the gap report for a prompt given on the command line.
//!
//! cargo run -p promptgauge-core --example analyze -- "My build fails. How do I fix it?"

use promptgauge_core::{analyze, AdvisorInput, Assets};

fn main() {
    let text = std::env::args().nth(1).expect("usage: analyze <prompt>");
    let report = analyze(&AdvisorInput::Raw(text), Assets::bundled()).expect("analysis");
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}
