use crate::assets::Lexicons;
use crate::text::metrics::is_entity_token;
use crate::text::token::{tokenize, Token, TokenKind, CODE_PLACEHOLDER, ERROR_PLACEHOLDER};

/// Pronouns that can serve as a subject but never need an antecedent check.
pub(crate) const SUBJECT_PRONOUNS: [&str; 15] = [
    "i", "you", "we", "he", "she", "someone", "something", "everyone", "everything", "nobody",
    "nothing", "anyone", "anything", "there", "here",
];

/// Auxiliaries that may precede the subject in a question ("how do I ...").
const AUXILIARIES: [&str; 20] = [
    "do", "does", "did", "can", "could", "will", "would", "should", "shall", "may", "might",
    "must", "is", "are", "was", "were", "am", "have", "has", "had",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub text: String,
    /// Byte range of `text` within the prose it was split from.
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
    pub has_subject: bool,
    pub has_main_verb: bool,
    /// Starts with a verb, so the subject is implicit.
    pub imperative: bool,
}

impl Sentence {
    fn new(prose: &str, start: usize, end: usize, lex: &Lexicons) -> Self {
        let text = &prose[start..end];
        let tokens = tokenize(text);
        let words: Vec<&str> = tokens
            .iter()
            .filter(|t| t.is_word())
            .map(|t| t.normalized.as_str())
            .collect();

        let imperative = words.first().is_some_and(|w| lex.verbs.contains(w));
        let has_main_verb = words.iter().any(|w| lex.verbs.contains(w));
        // Names, identifiers and placeholders can be subjects too
        // ("why does parseConfig throw").
        let first_word = tokens.iter().position(Token::is_word);
        let mut has_subject = false;
        for (i, t) in tokens.iter().enumerate() {
            let w = t.normalized.as_str();
            let candidate = match t.kind {
                TokenKind::CodeToken => true,
                TokenKind::Word => {
                    is_subject_word(w, lex) || is_entity_token(t, Some(i) == first_word)
                }
                _ => false,
            };
            if candidate {
                has_subject = true;
                break;
            }
            if t.is_word() && lex.verbs.contains(w) && !AUXILIARIES.contains(&w) {
                break;
            }
        }

        Sentence {
            text: text.to_owned(),
            start,
            end,
            tokens,
            has_subject,
            has_main_verb,
            imperative,
        }
    }

    /// Whether the sentence contains at least one word (placeholder-only
    /// lines such as `[CODE]` do not).
    pub fn is_prose(&self) -> bool {
        self.tokens.iter().any(Token::is_word)
    }

    pub fn is_incomplete(&self) -> bool {
        self.is_prose() && !(self.imperative || (self.has_subject && self.has_main_verb))
    }

    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_word())
    }
}

fn is_subject_word(word: &str, lex: &Lexicons) -> bool {
    lex.nouns.contains(word)
        || lex.se_terms.contains(word)
        || lex.pronouns.contains(word) || SUBJECT_PRONOUNS.contains(&word)
}

/// Split prose into sentences.
///
/// A sentence ends at a run of `.`, `!` or `?` followed by whitespace and an
/// uppercase letter (or a placeholder), or at the end of a non-empty line.
/// A period closing an abbreviation from the `abbrev` lexicon never splits.
pub fn split_sentences(prose: &str, lex: &Lexicons) -> Vec<Sentence> {
    sentence_spans(prose, lex)
        .into_iter()
        .map(|(start, end)| Sentence::new(prose, start, end, lex))
        .collect()
}

/// Byte ranges of each sentence, trimmed of surrounding whitespace.
pub fn sentence_spans(prose: &str, lex: &Lexicons) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut line_start = 0;
    for line in prose.split_inclusive('\n') {
        let line_end = line_start + line.len();
        let mut seg_start = line_start;
        let bytes = prose.as_bytes();
        let mut i = line_start;
        while i < line_end {
            let b = bytes[i];
            if !matches!(b, b'.' | b'!' | b'?') {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < line_end && matches!(bytes[i], b'.' | b'!' | b'?') {
                i += 1;
            }
            while i < line_end && matches!(bytes[i], b'"' | b'\'' | b')' | b']') {
                i += 1;
            }
            let after = &prose[i..line_end];
            if !after.starts_with(|c: char| c.is_whitespace()) {
                continue;
            }
            let rest = after.trim_start();
            let next_is_start = rest.starts_with(|c: char| c.is_uppercase())
                || rest.starts_with(CODE_PLACEHOLDER)
                || rest.starts_with(ERROR_PLACEHOLDER);
            if !next_is_start {
                continue;
            }
            if bytes[run_start] == b'.' && is_abbreviation(&prose[seg_start..i], lex) {
                continue;
            }
            push_trimmed(prose, seg_start, i, &mut spans);
            seg_start = i;
        }
        push_trimmed(prose, seg_start, line_end, &mut spans);
        line_start = line_end;
    }
    spans
}

fn is_abbreviation(segment: &str, lex: &Lexicons) -> bool {
    let chunk = segment
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '"', '\'', '[']);
    lex.abbrev.contains(&chunk.to_lowercase())
}

fn push_trimmed(prose: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let seg = &prose[start..end];
    let lead = seg.len() - seg.trim_start().len();
    let trimmed = seg.trim();
    if !trimmed.is_empty() {
        spans.push((start + lead, start + lead + trimmed.len()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(prose: &str) -> Vec<String> {
        split_sentences(prose, Lexicons::bundled())
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    #[test]
    fn basic_splits() {
        assert!(texts("").is_empty());
        assert_eq!(texts("It fails. It hangs."), vec!["It fails.", "It hangs."]);
        assert_eq!(texts("Why? Because!"), vec!["Why?", "Because!"]);
        assert_eq!(texts("version 3.8 is fine"), vec!["version 3.8 is fine"]);
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(texts("e.g. this one case"), vec!["e.g. this one case"]);
        assert_eq!(texts("It failed. then stopped"), vec!["It failed. then stopped"]);
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(texts("Use lists, sets, etc. Then sort."), vec!["Use lists, sets, etc. Then sort."]);
        assert_eq!(texts("See (e.g. Flask) docs."), vec!["See (e.g. Flask) docs."]);
    }

    #[test]
    fn newlines_terminate() {
        assert_eq!(texts("first line\nsecond line\n\n third"), vec!["first line", "second line", "third"]);
        assert_eq!(texts("Run this. [CODE]"), vec!["Run this.", "[CODE]"]);
    }

    #[test]
    fn ten_sentence_paragraph() {
        let para = "The build fails on CI. It works locally. I use Python 3.11 on Ubuntu. \
                    The error appears after the tests run! Could the cache be stale? \
                    I cleared it twice. Nothing changed, e.g. the same trace. \
                    The logs show a timeout. My config is attached. Any ideas?";
        assert_eq!(texts(para).len(), 10);
    }

    #[test]
    fn spans_cover_all_non_whitespace() {
        let prose = "A b. C d!\n  e f? G\n\nh.";
        let lex = Lexicons::bundled();
        let joined: String = sentence_spans(prose, lex)
            .into_iter()
            .map(|(s, e)| &prose[s..e])
            .collect();
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        assert_eq!(strip(&joined), strip(prose));
    }

    #[test]
    fn subject_and_verb_detection() {
        let lex = Lexicons::bundled();
        let s = &split_sentences("The server crashed.", lex)[0];
        assert!(s.has_subject && s.has_main_verb && !s.is_incomplete());
        let s = &split_sentences("Because of the timeout.", lex)[0];
        assert!(!s.has_main_verb && s.is_incomplete());
        let s = &split_sentences("Fix the bug.", lex)[0];
        assert!(s.imperative && !s.is_incomplete());
        let s = &split_sentences("How do I fix this null pointer?", lex)[0];
        assert!(s.has_subject && !s.is_incomplete());
        let s = &split_sentences("[CODE]", lex)[0];
        assert!(!s.is_prose() && !s.is_incomplete());
    }
}
