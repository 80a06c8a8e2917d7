//! Sentence-to-sentence entailment, used as an ambiguity signal.
//!
//! The default scorer is a lexical-cohesion proxy: for each consecutive pair
//! of sentences it takes the Jaccard overlap of their content words and maps
//! it through `min(1, 2 * overlap)`. An external NLI service can be plugged
//! in through [`EntailmentScorer`]; if it fails the proxy takes over and the
//! result is marked degraded.

use std::collections::BTreeSet;

use crate::assets::Lexicons;
use crate::text::sentence::Sentence;

/// Score returned when fewer than two sentences are available.
pub const NEUTRAL_ENTAILMENT: f64 = 0.5;

pub trait EntailmentScorer: Send + Sync {
    /// Probability in `[0, 1]` that `hypothesis` follows from `premise`.
    fn score_pair(&self, premise: &str, hypothesis: &str) -> Result<f64, String>;
}

pub struct LexicalCohesion<'a> {
    lexicons: &'a Lexicons,
}

impl<'a> LexicalCohesion<'a> {
    pub fn new(lexicons: &'a Lexicons) -> Self {
        LexicalCohesion { lexicons }
    }

    fn content_words(&self, sentence: &str) -> BTreeSet<String> {
        crate::text::tokenize(sentence)
            .into_iter()
            .filter(|t| t.is_word() && !self.lexicons.stopwords.contains(&t.normalized))
            .map(|t| t.normalized)
            .collect()
    }
}

impl EntailmentScorer for LexicalCohesion<'_> {
    fn score_pair(&self, premise: &str, hypothesis: &str) -> Result<f64, String> {
        let a = self.content_words(premise);
        let b = self.content_words(hypothesis);
        let union = a.union(&b).count();
        if union == 0 {
            return Ok(0.0);
        }
        let overlap = a.intersection(&b).count() as f64 / union as f64;
        Ok((2.0 * overlap).min(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntailmentOutcome {
    pub score: f64,
    /// The external scorer failed and the proxy was used instead.
    pub degraded: bool,
}

/// Mean pairwise score over consecutive prose sentences.
pub fn entailment_score(
    sentences: &[Sentence],
    lexicons: &Lexicons,
    external: Option<&dyn EntailmentScorer>,
) -> EntailmentOutcome {
    let prose: Vec<&str> = sentences
        .iter()
        .filter(|s| s.is_prose())
        .map(|s| s.text.as_str())
        .collect();
    if prose.len() < 2 {
        return EntailmentOutcome {
            score: NEUTRAL_ENTAILMENT,
            degraded: false,
        };
    }
    let proxy = LexicalCohesion::new(lexicons);
    if let Some(scorer) = external {
        if let Ok(score) = mean_pair_score(&prose, scorer) {
            return EntailmentOutcome {
                score,
                degraded: false,
            };
        }
        let score = mean_pair_score(&prose, &proxy).expect("proxy is infallible");
        return EntailmentOutcome {
            score,
            degraded: true,
        };
    }
    EntailmentOutcome {
        score: mean_pair_score(&prose, &proxy).expect("proxy is infallible"),
        degraded: false,
    }
}

fn mean_pair_score(prose: &[&str], scorer: &dyn EntailmentScorer) -> Result<f64, String> {
    let mut total = 0.0;
    for pair in prose.windows(2) {
        let p = scorer.score_pair(pair[0], pair[1])?;
        if !p.is_finite() {
            return Err(format!("non-finite score {p}"));
        }
        total += p.clamp(0.0, 1.0);
    }
    Ok(total / (prose.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::sentence::split_sentences;

    fn proxy(text: &str) -> f64 {
        let lex = Lexicons::bundled();
        entailment_score(&split_sentences(text, lex), lex, None).score
    }

    #[test]
    fn single_sentence_is_neutral() {
        assert_eq!(proxy("Only one sentence here."), 0.5);
        assert_eq!(proxy(""), 0.5);
    }

    #[test]
    fn identical_sentences_score_one() {
        assert_eq!(proxy("The build fails. The build fails."), 1.0);
    }

    #[test]
    fn disjoint_sentences_score_zero() {
        assert_eq!(proxy("Install the package. Bananas are yellow."), 0.0);
    }

    #[test]
    fn partial_overlap_is_doubled_and_capped() {
        // {build, fails, ci} vs {build, passes, locally}: 1/5 overlap.
        assert!((proxy("The build fails on CI. The build passes locally.") - 0.4).abs() < 1e-12);
    }

    struct Failing;
    impl EntailmentScorer for Failing {
        fn score_pair(&self, _: &str, _: &str) -> Result<f64, String> {
            Err("unreachable".into())
        }
    }

    struct Fixed(f64);
    impl EntailmentScorer for Fixed {
        fn score_pair(&self, _: &str, _: &str) -> Result<f64, String> {
            Ok(self.0)
        }
    }

    #[test]
    fn external_scorer_and_fallback() {
        let lex = Lexicons::bundled();
        let s = split_sentences("The build fails. The build fails. Bananas are yellow.", lex);
        let ok = entailment_score(&s, lex, Some(&Fixed(0.8)));
        assert_eq!(ok, EntailmentOutcome { score: 0.8, degraded: false });
        let fallback = entailment_score(&s, lex, Some(&Failing));
        assert!(fallback.degraded);
        assert_eq!(fallback.score, 0.5);
    }
}
