//! Count metrics over tokens and sentences, and their per-prompt bundle.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use crate::assets::Lexicons;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::text::entailment::{entailment_score, EntailmentScorer};
use crate::text::readability::{flesch_from_counts, smog_from_counts, Readability};
use crate::text::sentence::{split_sentences, Sentence, SUBJECT_PRONOUNS};
use crate::text::token::{tokenize, Token, TokenKind};

static VERSION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[vV]?\d+(\.\d+)+$").expect("version regex"));

fn normalized(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(|t| t.normalized.as_str()).collect()
}

/// Occurrences of software terms, single words or multiword entries.
pub fn count_software_terms(tokens: &[Token], lexicon: &Lexicon) -> Result<usize> {
    if lexicon.is_empty() {
        return Err(Error::Config("software-term lexicon is empty".into()));
    }
    Ok(lexicon.count_occurrences(&normalized(tokens)))
}

/// Whether a token looks like part of a named entity: a capitalised word
/// that does not open the sentence, a mixed-case word with an internal
/// capital, or a version number such as `3.8`.
pub(crate) fn is_entity_token(token: &Token, sentence_initial: bool) -> bool {
    match token.kind {
        TokenKind::Number => VERSION_RE.is_match(&token.surface),
        TokenKind::Word => {
            if VERSION_RE.is_match(&token.surface) {
                return true;
            }
            let mut chars = token.surface.chars();
            let first = chars.next().expect("words are non-empty");
            let rest: Vec<char> = chars.collect();
            let internal_capital = rest.iter().any(|c| c.is_uppercase())
                && token.surface.chars().any(|c| c.is_lowercase());
            if internal_capital {
                return true;
            }
            let is_i = token.normalized == "i" || token.normalized.starts_with("i'");
            first.is_uppercase() && !sentence_initial && !is_i
        }
        _ => false,
    }
}

/// Per-token entity flags for one sentence.
fn entity_flags(sentence: &Sentence) -> Vec<bool> {
    let first_word = sentence.tokens.iter().position(Token::is_word);
    sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| is_entity_token(t, Some(i) == first_word))
        .collect()
}

/// Named entities; adjacent qualifying tokens merge into one entity.
pub fn count_named_entities(sentences: &[Sentence]) -> usize {
    sentences
        .iter()
        .map(|s| {
            let flags = entity_flags(s);
            flags
                .iter()
                .enumerate()
                .filter(|&(i, &f)| f && (i == 0 || !flags[i - 1]))
                .count()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConditionalPhrasing {
    pub constraints: usize,
    pub modifiers: usize,
    pub subordinate_clauses: usize,
}

pub fn count_conditional_phrasing(sentences: &[Sentence], lex: &Lexicons) -> ConditionalPhrasing {
    let mut out = ConditionalPhrasing::default();
    for s in sentences {
        let norm = normalized(&s.tokens);
        out.constraints += lex.constraints.count_occurrences(&norm);

        out.modifiers += s
            .tokens
            .iter()
            .filter(|t| t.is_word() && is_modifier(&t.normalized, lex))
            .count();

        let first = s.tokens.iter().position(|t| t.kind != TokenKind::Punctuation);
        out.subordinate_clauses += lex
            .subordinators
            .occurrences(&norm)
            .into_iter()
            .filter(|&(i, _)| Some(i) == first || (i > 0 && s.tokens[i - 1].surface == ","))
            .count();
    }
    out
}

fn is_modifier(word: &str, lex: &Lexicons) -> bool {
    if lex.modifiers.contains(word) {
        return true;
    }
    match word.strip_suffix("ly") {
        Some(stem) if stem.chars().count() >= 3 => {
            !(lex.nouns.contains(word) || lex.verbs.contains(word) || lex.constraints.contains(word))
        }
        _ => false,
    }
}

/// Distinct normalized n-grams (n = 2 or 3) that occur at least twice.
/// Punctuation is dropped before n-grams are formed.
pub fn count_repeated_ngrams(tokens: &[Token], n: usize) -> Result<usize> {
    if !(2..=3).contains(&n) {
        return Err(Error::Argument(format!("n-gram size must be 2 or 3, got {n}")));
    }
    let seq: Vec<&str> = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Punctuation)
        .map(|t| t.normalized.as_str())
        .collect();
    let mut freq: HashMap<&[&str], usize> = HashMap::new();
    for gram in seq.windows(n) {
        *freq.entry(gram).or_default() += 1;
    }
    Ok(freq.values().filter(|&&c| c >= 2).count())
}

/// Distinct word count and its ratio to the total word count.
pub fn lexical_density(tokens: &[Token]) -> (usize, f64) {
    let words: Vec<&str> = tokens
        .iter()
        .filter(|t| t.is_word())
        .map(|t| t.normalized.as_str())
        .collect();
    let unique = words.iter().collect::<HashSet<_>>().len();
    (unique, unique as f64 / words.len().max(1) as f64)
}

/// camelCase, snake_case, dotted paths, ALLCAPS, and letter/digit mixes.
pub fn is_identifier_like(surface: &str) -> bool {
    let mut chars = surface.chars();
    chars.next();
    surface.contains('_')
        || surface.contains('.')
        || chars.any(char::is_uppercase)
        || (surface.chars().any(char::is_alphabetic) && surface.chars().any(|c| c.is_ascii_digit()))
}

fn in_dictionary(word: &str, dictionary: &Lexicon) -> bool {
    if dictionary.contains(word) {
        return true;
    }
    if let Some(stem) = word.strip_suffix("'s").or_else(|| word.strip_suffix('\'')) {
        if dictionary.contains(stem) {
            return true;
        }
    }
    word.contains('-') && word.split('-').all(|part| dictionary.contains(part))
}

/// Word tokens absent from the dictionary, skipping identifiers and
/// software terms.
pub fn count_misspellings(tokens: &[Token], lex: &Lexicons) -> Result<usize> {
    if lex.dictionary.is_empty() {
        return Err(Error::Config("dictionary is empty".into()));
    }
    Ok(tokens
        .iter()
        .filter(|t| t.is_word())
        .filter(|t| !is_identifier_like(&t.surface) && !lex.se_terms.contains(&t.normalized))
        .filter(|t| !in_dictionary(&t.normalized, &lex.dictionary))
        .count())
}

/// Prose sentences without a subject-verb pair; imperatives count as
/// complete.
pub fn count_incomplete_sentences(sentences: &[Sentence]) -> usize {
    sentences.iter().filter(|s| s.is_incomplete()).count()
}

/// Third-person pronouns with no noun-like token earlier in their sentence
/// or anywhere in the previous sentence.
pub fn count_unresolved_references(sentences: &[Sentence], lex: &Lexicons) -> usize {
    let noun_like: Vec<Vec<bool>> = sentences
        .iter()
        .map(|s| {
            let entity = entity_flags(s);
            s.tokens
                .iter()
                .zip(entity)
                .map(|(t, is_entity)| match t.kind {
                    TokenKind::CodeToken => true,
                    TokenKind::Word => {
                        let w = t.normalized.as_str();
                        let pronoun = lex.pronouns.contains(w) || SUBJECT_PRONOUNS.contains(&w);
                        !pronoun && (lex.nouns.contains(w) || lex.se_terms.contains(w) || is_entity)
                    }
                    _ => is_entity,
                })
                .collect()
        })
        .collect();

    let mut unresolved = 0;
    for (k, s) in sentences.iter().enumerate() {
        let previous_has_noun = k > 0 && noun_like[k - 1].iter().any(|&b| b);
        for (i, t) in s.tokens.iter().enumerate() {
            if !t.is_word() || !lex.pronouns.contains(&t.normalized) {
                continue;
            }
            if !(previous_has_noun || noun_like[k][..i].iter().any(|&b| b)) {
                unresolved += 1;
            }
        }
    }
    unresolved
}

/// All prose metrics of one text.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TextMetrics {
    pub software_terms: usize,
    pub named_entities: usize,
    pub constraints: usize,
    pub modifiers: usize,
    pub subordinate_clauses: usize,
    pub repeated_2grams: usize,
    pub repeated_3grams: usize,
    pub unique_words: usize,
    pub unique_info: f64,
    pub words: usize,
    pub sentences: usize,
    pub misspellings: usize,
    pub incomplete_sentences: usize,
    pub flesch: f64,
    pub smog: f64,
    pub unresolved_references: usize,
    pub entailment: f64,
    /// Totals behind the readability scores, kept for aggregation.
    #[serde(skip)]
    pub readability: Readability,
    pub no_prose: bool,
    pub short_for_smog: bool,
    pub entailment_degraded: bool,
}

/// Compute every prose metric for `prose` (placeholders already in place).
pub fn compute_text_metrics(
    prose: &str,
    lex: &Lexicons,
    external: Option<&dyn EntailmentScorer>,
) -> Result<(TextMetrics, Vec<Sentence>)> {
    let tokens = tokenize(prose);
    let sentences = split_sentences(prose, lex);
    let phrasing = count_conditional_phrasing(&sentences, lex);
    let (unique_words, unique_info) = lexical_density(&tokens);
    let readability = Readability::from_sentences(&sentences);
    let (flesch, no_prose) =
        flesch_from_counts(readability.words, readability.sentences, readability.syllables);
    let (smog, short_for_smog) = smog_from_counts(readability.polysyllables, readability.sentences);
    let entailment = entailment_score(&sentences, lex, external);

    let metrics = TextMetrics {
        software_terms: count_software_terms(&tokens, &lex.se_terms)?,
        named_entities: count_named_entities(&sentences),
        constraints: phrasing.constraints,
        modifiers: phrasing.modifiers,
        subordinate_clauses: phrasing.subordinate_clauses,
        repeated_2grams: count_repeated_ngrams(&tokens, 2)?,
        repeated_3grams: count_repeated_ngrams(&tokens, 3)?,
        unique_words,
        unique_info,
        words: tokens.iter().filter(|t| t.is_word()).count(),
        sentences: readability.sentences,
        misspellings: count_misspellings(&tokens, lex)?,
        incomplete_sentences: count_incomplete_sentences(&sentences),
        flesch,
        smog,
        unresolved_references: count_unresolved_references(&sentences, lex),
        entailment: entailment.score,
        readability,
        no_prose,
        short_for_smog,
        entailment_degraded: entailment.degraded,
    };
    Ok((metrics, sentences))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> &'static Lexicons {
        Lexicons::bundled()
    }

    fn sents(text: &str) -> Vec<Sentence> {
        split_sentences(text, lex())
    }

    #[test]
    fn software_terms_are_case_folded_occurrences() {
        let api = Lexicon::from_words(["api"]);
        assert_eq!(count_software_terms(&tokenize("the the the"), &api).unwrap(), 0);
        let t = tokenize("call the API and then the api again");
        assert_eq!(count_software_terms(&t, &api).unwrap(), 2);
        assert!(count_software_terms(&t, &Lexicon::default()).is_err());
        let multi = Lexicon::from_words(["unit test", "unit"]);
        assert_eq!(count_software_terms(&tokenize("a unit test, a unit"), &multi).unwrap(), 2);
    }

    #[test]
    fn named_entities() {
        assert_eq!(count_named_entities(&sents("the quick brown fox")), 0);
        assert_eq!(count_named_entities(&sents("Use Flask on Ubuntu Server today")), 2);
        assert_eq!(count_named_entities(&sents("upgrade to 3.8 now")), 1);
        assert_eq!(count_named_entities(&sents("then I call parseConfig")), 1);
        assert_eq!(count_named_entities(&sents("Flask is fine")), 0);
    }

    #[test]
    fn conditional_phrasing() {
        assert_eq!(count_conditional_phrasing(&[], lex()), ConditionalPhrasing::default());
        let p = count_conditional_phrasing(&sents("You must retry only if the server restarts."), lex());
        assert_eq!((p.constraints, p.subordinate_clauses), (2, 0));
        let p = count_conditional_phrasing(&sents("If the library is compatible, use it."), lex());
        assert_eq!(p.subordinate_clauses, 1);
        let p = count_conditional_phrasing(&sents("It crashes, because the file is missing."), lex());
        assert_eq!(p.subordinate_clauses, 1);
        let p = count_conditional_phrasing(&sents("It needs to run at least twice."), lex());
        assert_eq!(p.constraints, 2);
    }

    #[test]
    fn modifiers_use_lexicon_and_ly_rule() {
        let p = count_conditional_phrasing(&sents("The slow server randomly fails."), lex());
        assert_eq!(p.modifiers, 2);
        // "only" is too short a stem; "apply" and "family" are lexicon nouns/verbs.
        let p = count_conditional_phrasing(&sents("apply only family"), lex());
        assert_eq!(p.modifiers, 0);
    }

    #[test]
    fn repeated_ngrams() {
        let t = tokenize("fix the bug fix the bug");
        assert_eq!(count_repeated_ngrams(&t, 2).unwrap(), 2);
        assert_eq!(count_repeated_ngrams(&t, 3).unwrap(), 1);
        assert_eq!(count_repeated_ngrams(&tokenize("fix"), 2).unwrap(), 0);
        assert_eq!(count_repeated_ngrams(&tokenize("Fix, the. fix the"), 2).unwrap(), 1);
        assert!(count_repeated_ngrams(&t, 4).is_err());
        assert!(count_repeated_ngrams(&t, 1).is_err());
    }

    #[test]
    fn density() {
        assert_eq!(lexical_density(&[]), (0, 0.0));
        assert_eq!(lexical_density(&tokenize("run run run fast")), (2, 0.5));
        assert_eq!(lexical_density(&tokenize("a b c d")), (4, 1.0));
        assert_eq!(lexical_density(&tokenize("42 [CODE] .")), (0, 0.0));
    }

    #[test]
    fn misspellings() {
        let m = |s: &str| count_misspellings(&tokenize(s), lex()).unwrap();
        assert_eq!(m("the server is down"), 0);
        assert_eq!(m("teh server si down"), 2);
        assert_eq!(m("call myFunc now"), 0);
        assert_eq!(m("see my_var and os.path or HTTP"), 0);
        assert_eq!(m("the server's well-known config"), 0);
        assert_eq!(m("I don't know"), 0);
    }

    #[test]
    fn misspellings_require_dictionary() {
        let mut empty = lex().clone();
        empty.dictionary = Lexicon::default();
        assert!(count_misspellings(&tokenize("x"), &empty).is_err());
    }

    #[test]
    fn incomplete_sentences() {
        assert_eq!(count_incomplete_sentences(&sents("The server crashed.")), 0);
        assert_eq!(count_incomplete_sentences(&sents("Because of the timeout.")), 1);
        assert_eq!(count_incomplete_sentences(&sents("Fix the bug.")), 0);
    }

    #[test]
    fn unresolved_references() {
        assert_eq!(count_unresolved_references(&sents("The server fails. It restarts."), lex()), 0);
        assert_eq!(count_unresolved_references(&sents("It fails."), lex()), 1);
        assert_eq!(count_unresolved_references(&sents("The server fails."), lex()), 0);
        assert_eq!(count_unresolved_references(&sents("[CODE]\nIt fails."), lex()), 0);
        // Antecedent two sentences back does not count.
        assert_eq!(
            count_unresolved_references(&sents("The server fails. Why? It restarts."), lex()),
            1
        );
    }

    #[test]
    fn empty_prose_has_documented_defaults() {
        let (m, sentences) = compute_text_metrics("", lex(), None).unwrap();
        assert!(sentences.is_empty());
        assert_eq!(m.words, 0);
        assert_eq!(m.flesch, 0.0);
        assert!(m.no_prose);
        assert_eq!(m.smog, 0.0);
        assert_eq!(m.entailment, 0.5);
        assert_eq!(m.unique_info, 0.0);
    }
}
