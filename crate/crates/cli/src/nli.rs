//! Entailment scoring through an external NLI HTTP endpoint.
//!
//! The endpoint receives `{"premise": .., "hypothesis": ..}` and answers
//! `{"entailment": p}` with `p` in `[0, 1]`.

use std::time::Duration;

use promptgauge_core::text::EntailmentScorer;
use serde::{Deserialize, Serialize};

pub struct HttpEntailment {
    url: String,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Pair<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct Verdict {
    entailment: f64,
}

impl HttpEntailment {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpEntailment {
            url: url.into(),
            agent,
        }
    }
}

impl EntailmentScorer for HttpEntailment {
    fn score_pair(&self, premise: &str, hypothesis: &str) -> Result<f64, String> {
        let verdict: Verdict = self
            .agent
            .post(&self.url)
            .send_json(Pair { premise, hypothesis })
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        if (0.0..=1.0).contains(&verdict.entailment) {
            Ok(verdict.entailment)
        } else {
            Err(format!("entailment {} outside [0, 1]", verdict.entailment))
        }
    }
}
