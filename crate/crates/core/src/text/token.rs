use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
    /// `[CODE]`/`[ERROR]` placeholders and inline URLs.
    CodeToken,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

pub const CODE_PLACEHOLDER: &str = "[CODE]";
pub const ERROR_PLACEHOLDER: &str = "[ERROR]";

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"(?P<ph>\[(?:CODE|ERROR)\])",
        r"|(?P<url>https?://[^\s)\]}>]*[^\s)\]}>.,;:!?])",
        r"|(?P<word>[\p{L}\p{N}_]+(?:['’.\-][\p{L}\p{N}_]+)*)",
        r"|(?P<punct>\S)",
    ))
    .expect("token regex")
});

pub fn normalize(surface: &str) -> String {
    surface.to_lowercase().replace('’', "'")
}

/// Split prose into tokens.
///
/// Words may carry internal apostrophes, hyphens, and dots, so contractions
/// (`don't`), versions (`v3.8`), and dotted paths (`os.path`) stay whole.
/// A run without any letter is a [`TokenKind::Number`].
pub fn tokenize(prose: &str) -> Vec<Token> {
    TOKEN_RE
        .captures_iter(prose)
        .map(|caps| {
            let (m, kind) = if let Some(m) = caps.name("ph") {
                (m, TokenKind::CodeToken)
            } else if let Some(m) = caps.name("url") {
                (m, TokenKind::CodeToken)
            } else if let Some(m) = caps.name("word") {
                let kind = if m.as_str().chars().any(char::is_alphabetic) {
                    TokenKind::Word
                } else {
                    TokenKind::Number
                };
                (m, kind)
            } else {
                (caps.name("punct").expect("one group matches"), TokenKind::Punctuation)
            };
            Token {
                surface: m.as_str().to_owned(),
                normalized: normalize(m.as_str()),
                kind,
            }
        })
        .collect()
}
