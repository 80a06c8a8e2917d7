//! Flesch Reading Ease and SMOG grade.

use crate::error::{Error, Result};
use crate::text::sentence::Sentence;

/// Count syllables by vowel groups (`aeiouy`), minus one for a trailing `e`
/// unless that would leave zero. Never returns less than 1.
pub fn count_syllables(word: &str) -> Result<usize> {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return Err(Error::Argument(format!("no alphabetic characters in {word:?}")));
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    if letters.last() == Some(&'e') && groups > 1 {
        groups -= 1;
    }
    Ok(groups.max(1))
}

/// Word, sentence, and syllable tallies over the prose sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Readability {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    pub polysyllables: usize,
}

impl Readability {
    pub fn from_sentences(sentences: &[Sentence]) -> Self {
        let mut r = Readability::default();
        for s in sentences.iter().filter(|s| s.is_prose()) {
            r.sentences += 1;
            for w in s.words() {
                let syl = count_syllables(&w.surface).unwrap_or(1);
                r.words += 1;
                r.syllables += syl;
                if syl >= 3 {
                    r.polysyllables += 1;
                }
            }
        }
        r
    }
}

/// Returns the score and whether the "no prose" flag is raised.
pub fn flesch_reading_ease(sentences: &[Sentence]) -> (f64, bool) {
    let r = Readability::from_sentences(sentences);
    flesch_from_counts(r.words, r.sentences, r.syllables)
}

pub fn flesch_from_counts(words: usize, sentences: usize, syllables: usize) -> (f64, bool) {
    if words == 0 || sentences == 0 {
        return (0.0, true);
    }
    let (w, s, y) = (words as f64, sentences as f64, syllables as f64);
    (206.835 - 1.015 * (w / s) - 84.6 * (y / w), false)
}

/// Returns the grade and whether the text is shorter than the 30 sentences
/// the grade was calibrated on. No sentences gives 0.
pub fn smog_grade(sentences: &[Sentence]) -> (f64, bool) {
    let r = Readability::from_sentences(sentences);
    smog_from_counts(r.polysyllables, r.sentences)
}

pub fn smog_from_counts(polysyllables: usize, sentences: usize) -> (f64, bool) {
    if sentences == 0 {
        return (0.0, true);
    }
    let grade = 1.0430 * (polysyllables as f64 * (30.0 / sentences as f64)).sqrt() + 3.1291;
    (grade, sentences < 30)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::Lexicons;
    use crate::text::sentence::split_sentences;

    #[test]
    fn syllable_rules() {
        assert_eq!(count_syllables("cat").unwrap(), 1);
        assert_eq!(count_syllables("relate").unwrap(), 2);
        assert_eq!(count_syllables("idea").unwrap(), 2);
        assert_eq!(count_syllables("the").unwrap(), 1);
        assert_eq!(count_syllables("rhythm").unwrap(), 1);
        assert_eq!(count_syllables("Database").unwrap(), 3);
        assert!(count_syllables("42").is_err());
        assert!(count_syllables("").is_err());
    }

    #[test]
    fn flesch_of_the_cat_sentence() {
        let s = split_sentences("The cat sat on the mat.", Lexicons::bundled());
        let (score, flag) = flesch_reading_ease(&s);
        assert!((score - 116.145).abs() < 1e-9);
        assert!(!flag);
    }

    #[test]
    fn flesch_is_ratio_invariant() {
        let lex = Lexicons::bundled();
        let once = "The deployment failed yesterday. We rolled back the release quickly.";
        let twice = format!("{once} {once}");
        let a = flesch_reading_ease(&split_sentences(once, lex)).0;
        let b = flesch_reading_ease(&split_sentences(&twice, lex)).0;
        assert_eq!(a, b);
    }

    #[test]
    fn empty_prose_flags() {
        assert_eq!(flesch_reading_ease(&[]), (0.0, true));
        assert_eq!(smog_grade(&[]), (0.0, true));
    }

    #[test]
    fn smog_formula() {
        assert_eq!(smog_from_counts(0, 4), (3.1291, true));
        assert!((smog_from_counts(25, 30).0 - 8.3441).abs() < 1e-9);
        assert!((smog_from_counts(10, 10).0 - (1.0430 * 30f64.sqrt() + 3.1291)).abs() < 1e-12);
    }
}
