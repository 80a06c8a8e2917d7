//! Plain-text word lists: one lowercase entry per line, `#` starts a comment.

use std::collections::HashSet;

/// A set of single-word and multiword entries.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    single: HashSet<String>,
    // Multiword entries, longest first so greedy matching prefers them.
    multi: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Self {
        let mut single = HashSet::new();
        let mut multi = Vec::new();
        for line in text.lines() {
            let entry = match line.find('#') {
                // `#` only opens a comment at the start of the line or after
                // whitespace, so entries like `c#` survive.
                Some(0) => continue,
                Some(i) if line[..i].ends_with(char::is_whitespace) => &line[..i],
                _ => line,
            };
            let entry = entry.trim().to_lowercase();
            if entry.is_empty() {
                continue;
            }
            let words: Vec<String> = entry.split_whitespace().map(str::to_owned).collect();
            if words.len() == 1 {
                single.insert(entry);
            } else {
                multi.push(words);
            }
        }
        multi.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        multi.dedup();
        Lexicon { single, multi }
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: Vec<String> = words.into_iter().map(|w| w.as_ref().to_owned()).collect();
        Self::parse(&text.join("\n"))
    }

    pub fn is_empty(&self) -> bool {
        self.single.is_empty() && self.multi.is_empty()
    }

    pub fn len(&self) -> usize {
        self.single.len() + self.multi.len()
    }

    /// Single-word membership; `word` must already be normalized.
    pub fn contains(&self, word: &str) -> bool {
        self.single.contains(word)
    }

    /// Length in tokens of the longest entry starting at `words[at]`.
    pub fn match_at(&self, words: &[&str], at: usize) -> Option<usize> {
        let rest = &words[at..];
        for entry in &self.multi {
            if entry.len() <= rest.len() && entry.iter().zip(rest).all(|(e, w)| e == w) {
                return Some(entry.len());
            }
        }
        rest.first()
            .filter(|w| self.single.contains(**w))
            .map(|_| 1)
    }

    /// Greedy left-to-right, non-overlapping occurrence count.
    pub fn count_occurrences(&self, words: &[&str]) -> usize {
        self.occurrences(words).len()
    }

    /// Start index and length of each greedy non-overlapping match.
    pub fn occurrences(&self, words: &[&str]) -> Vec<(usize, usize)> {
        let mut found = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match self.match_at(words, i) {
                Some(len) => {
                    found.push((i, len));
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let lex = Lexicon::parse("# header\napi\n\n  Flask  \nc#\nunit test # trailing\n");
        assert!(lex.contains("api"));
        assert!(lex.contains("flask"));
        assert!(lex.contains("c#"));
        assert_eq!(lex.len(), 4);
        assert_eq!(lex.match_at(&["unit", "test", "x"], 0), Some(2));
    }

    #[test]
    fn greedy_matching_prefers_longest_and_never_overlaps() {
        let lex = Lexicon::from_words(["unit", "unit test", "test"]);
        assert_eq!(lex.occurrences(&["unit", "test", "test"]), vec![(0, 2), (2, 1)]);
        assert_eq!(lex.count_occurrences(&["a", "unit"]), 1);
        assert_eq!(lex.count_occurrences(&[]), 0);
    }
}
