//! Prose-side metrics.
//!
//! Everything here works on prose in which code and error segments have
//! already been replaced by `[CODE]` / `[ERROR]` placeholders (see
//! [`crate::code::extract_segments`]). Part-of-speech style decisions are
//! made with the seed lexicons in [`crate::assets::Lexicons`], so every
//! count is deterministic.

pub mod entailment;
pub mod metrics;
pub mod readability;
pub mod sentence;
pub mod token;

pub use entailment::{entailment_score, EntailmentScorer, LexicalCohesion};
pub use metrics::{compute_text_metrics, TextMetrics};
pub use readability::{count_syllables, flesch_reading_ease, smog_grade, Readability};
pub use sentence::{split_sentences, Sentence};
pub use token::{tokenize, Token, TokenKind};
