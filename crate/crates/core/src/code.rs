//! Prompt segmentation and code-side metrics.
//!
//! [`extract_segments`] cuts a raw prompt into prose, code snippets, error
//! messages, and URLs. Code and error spans are replaced in the prose by
//! `[CODE]` and `[ERROR]` placeholders; [`PromptSegments::reassemble`] puts
//! them back and reproduces the input byte for byte.
//!
//! Detection works line by line, in this order:
//!
//! 1. Triple-backtick fences. An unterminated fence runs to the end of the
//!    prompt. A fenced block reads as an error log when it holds a Python
//!    traceback header or when at least half of its non-empty lines match
//!    the error patterns.
//! 2. Error runs: a line matching an error pattern, extended over following
//!    lines that match or are indented (stack frames and their source lines).
//! 3. Unfenced code: two or more consecutive lines each showing a code
//!    signal (trailing `;`, `{` or `}`, an `=` in a line not ending with a
//!    period, or 4+ columns of indentation with symbol density above 0.15).

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use crate::assets::{ErrorPatterns, Lexicons};
use crate::text::sentence::Sentence;
use crate::text::token::{CODE_PLACEHOLDER, ERROR_PLACEHOLDER};

/// Snippet sizes are measured in characters.
pub const SNIPPET_SIZE_UNIT: &str = "chars";

const FENCE: &str = "```";
const TRACEBACK_HEADER: &str = "Traceback (most recent call last)";
const SYMBOL_DENSITY_MIN: f64 = 0.15;
const MIN_UNFENCED_RUN: usize = 2;

/// Common language keywords never treated as descriptive identifiers.
const CODE_KEYWORDS: [&str; 40] = [
    "def", "return", "import", "from", "class", "function", "const", "let", "var", "int",
    "str", "self", "this", "new", "null", "None", "True", "False", "true", "false", "for",
    "while", "else", "elif", "try", "catch", "except", "finally", "public", "private",
    "static", "void", "async", "await", "print", "println", "console", "log", "and", "not",
];

static URL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"https?://[^\s)\]}>]*[^\s)\]}>.,;:!?]").expect("url regex")
});
static IDENT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*").expect("identifier regex")
});

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeSnippet {
    pub text: String,
    pub size_chars: usize,
    pub identifiers: BTreeSet<String>,
    pub fenced: bool,
}

impl CodeSnippet {
    fn new(text: &str, fenced: bool) -> Self {
        CodeSnippet {
            text: text.to_owned(),
            size_chars: text.chars().count(),
            identifiers: identifiers(text),
            fenced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorMessage {
    pub text: String,
    /// Index of the first rule in the error-pattern set that fired.
    pub pattern_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    Code,
    Error,
}

impl SegmentKind {
    pub fn placeholder(self) -> &'static str {
        match self {
            SegmentKind::Code => CODE_PLACEHOLDER,
            SegmentKind::Error => ERROR_PLACEHOLDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Placeholder {
    /// Byte offset of the placeholder within [`PromptSegments::prose`].
    pub offset: usize,
    pub kind: SegmentKind,
    /// Original text the placeholder stands for.
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PromptSegments {
    pub prose: String,
    pub snippets: Vec<CodeSnippet>,
    pub errors: Vec<ErrorMessage>,
    pub urls: Vec<String>,
    pub placeholders: Vec<Placeholder>,
    pub unterminated_fence: bool,
}

impl PromptSegments {
    /// Substitute every placeholder with its original text.
    pub fn reassemble(&self) -> String {
        let mut out = String::with_capacity(self.prose.len());
        let mut cursor = 0;
        for p in &self.placeholders {
            out.push_str(&self.prose[cursor..p.offset]);
            out.push_str(&p.raw);
            cursor = p.offset + p.kind.placeholder().len();
        }
        out.push_str(&self.prose[cursor..]);
        out
    }

    /// Union of identifiers over all snippets.
    pub fn identifiers(&self) -> BTreeSet<String> {
        self.snippets
            .iter()
            .flat_map(|s| s.identifiers.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    start: usize,
    /// End excluding the line terminator.
    end: usize,
    text: &'a str,
}

#[derive(Debug, Clone)]
struct Region {
    first: usize,
    last: usize,
    kind: SegmentKind,
    /// Byte range of the snippet or error text proper (fence markers excluded).
    content: (usize, usize),
    pattern_id: usize,
    fenced: bool,
}

fn lines_of(raw: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    let mut start = 0;
    for chunk in raw.split_inclusive('\n') {
        let body = chunk.strip_suffix('\n').unwrap_or(chunk);
        let body = body.strip_suffix('\r').unwrap_or(body);
        lines.push(Line {
            start,
            end: start + body.len(),
            text: body,
        });
        start += chunk.len();
    }
    lines
}

fn is_fence(line: &Line) -> bool {
    line.text.trim_start().starts_with(FENCE)
}

fn is_code_signal(text: &str) -> bool {
    let t = text.trim_end();
    if t.trim_start().is_empty() {
        return false;
    }
    if t.ends_with([';', '{', '}']) {
        return true;
    }
    if t.contains('=') && !t.ends_with('.') {
        return true;
    }
    let indent: usize = t
        .chars()
        .take_while(|c| c.is_whitespace())
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum();
    if indent >= 4 {
        let visible: Vec<char> = t.chars().filter(|c| !c.is_whitespace()).collect();
        let symbols = visible.iter().filter(|c| !c.is_alphanumeric()).count();
        return symbols as f64 / visible.len() as f64 > SYMBOL_DENSITY_MIN;
    }
    false
}

fn fenced_kind(raw: &str, content: (usize, usize), patterns: &ErrorPatterns) -> (SegmentKind, usize) {
    let text = &raw[content.0..content.1];
    let non_empty: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let hits: Vec<usize> = non_empty.iter().filter_map(|l| patterns.first_match(l)).collect();
    let traceback = text.contains(TRACEBACK_HEADER);
    if !hits.is_empty() && (traceback || 2 * hits.len() >= non_empty.len()) {
        let id = hits.iter().copied().min().expect("non-empty");
        (SegmentKind::Error, id)
    } else {
        (SegmentKind::Code, 0)
    }
}

/// Split a raw prompt into prose, snippets, error messages, and URLs.
pub fn extract_segments(raw: &str, patterns: &ErrorPatterns) -> PromptSegments {
    let lines = lines_of(raw);
    let mut taken = vec![false; lines.len()];
    let mut regions: Vec<Region> = Vec::new();
    let mut unterminated_fence = false;

    // 1. fences
    let mut i = 0;
    while i < lines.len() {
        if !is_fence(&lines[i]) {
            i += 1;
            continue;
        }
        let close = (i + 1..lines.len()).find(|&j| is_fence(&lines[j]));
        let last = close.unwrap_or_else(|| {
            unterminated_fence = true;
            lines.len() - 1
        });
        let body_start = if i + 1 < lines.len() { lines[i + 1].start } else { lines[i].end };
        let body_end = match close {
            Some(j) if j > i + 1 => lines[j - 1].end,
            Some(_) => body_start,
            None if last > i => lines[last].end,
            None => body_start,
        };
        let content = (body_start, body_end.max(body_start));
        let (kind, pattern_id) = fenced_kind(raw, content, patterns);
        regions.push(Region {
            first: i,
            last,
            kind,
            content,
            pattern_id,
            fenced: true,
        });
        taken[i..=last].iter_mut().for_each(|t| *t = true);
        i = last + 1;
    }

    // 2. error runs
    let mut i = 0;
    while i < lines.len() {
        let Some(pattern_id) = (!taken[i]).then(|| patterns.first_match(lines[i].text)).flatten()
        else {
            i += 1;
            continue;
        };
        let mut last = i;
        while last + 1 < lines.len() && !taken[last + 1] {
            let next = lines[last + 1].text;
            let indented = next.starts_with([' ', '\t']) && !next.trim().is_empty();
            if indented || patterns.first_match(next).is_some() {
                last += 1;
            } else {
                break;
            }
        }
        regions.push(Region {
            first: i,
            last,
            kind: SegmentKind::Error,
            content: (lines[i].start, lines[last].end),
            pattern_id,
            fenced: false,
        });
        taken[i..=last].iter_mut().for_each(|t| *t = true);
        i = last + 1;
    }

    // 3. unfenced code runs
    let mut i = 0;
    while i < lines.len() {
        if taken[i] || !is_code_signal(lines[i].text) {
            i += 1;
            continue;
        }
        let mut last = i;
        while last + 1 < lines.len() && !taken[last + 1] && is_code_signal(lines[last + 1].text) {
            last += 1;
        }
        if last + 1 - i >= MIN_UNFENCED_RUN {
            regions.push(Region {
                first: i,
                last,
                kind: SegmentKind::Code,
                content: (lines[i].start, lines[last].end),
                pattern_id: 0,
                fenced: false,
            });
            taken[i..=last].iter_mut().for_each(|t| *t = true);
        }
        i = last + 1;
    }

    regions.sort_by_key(|r| r.first);
    let mut seg = PromptSegments {
        unterminated_fence,
        urls: count_url_spans(raw),
        ..Default::default()
    };
    let mut cursor = 0;
    for r in &regions {
        let span = (lines[r.first].start, lines[r.last].end);
        seg.prose.push_str(&raw[cursor..span.0]);
        seg.placeholders.push(Placeholder {
            offset: seg.prose.len(),
            kind: r.kind,
            raw: raw[span.0..span.1].to_owned(),
        });
        seg.prose.push_str(r.kind.placeholder());
        cursor = span.1;
        let content = &raw[r.content.0..r.content.1];
        match r.kind {
            SegmentKind::Code => seg.snippets.push(CodeSnippet::new(content, r.fenced)),
            SegmentKind::Error => seg.errors.push(ErrorMessage {
                text: content.to_owned(),
                pattern_id: r.pattern_id,
            }),
        }
    }
    seg.prose.push_str(&raw[cursor..]);
    seg
}

fn count_url_spans(raw: &str) -> Vec<String> {
    URL_RE.find_iter(raw).map(|m| m.as_str().to_owned()).collect()
}

/// Occurrences of `http://` / `https://` URLs; repeats count separately.
pub fn count_urls(raw: &str) -> usize {
    URL_RE.find_iter(raw).count()
}

/// Split an identifier on dots, underscores, and camelCase boundaries.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for piece in ident.split(['.', '_']).filter(|p| !p.is_empty()) {
        let chars: Vec<char> = piece.chars().collect();
        let mut current = String::new();
        for (k, &c) in chars.iter().enumerate() {
            if k > 0 && c.is_uppercase() {
                let prev = chars[k - 1];
                let next_lower = chars.get(k + 1).is_some_and(|n| n.is_lowercase());
                if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                    parts.push(std::mem::take(&mut current));
                }
            }
            current.push(c);
        }
        if !current.is_empty() {
            parts.push(current);
        }
    }
    parts
}

/// Full identifiers found in `code` plus their sub-identifiers.
pub fn identifiers(code: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for m in IDENT_RE.find_iter(code) {
        let full = m.as_str();
        out.insert(full.to_owned());
        for part in split_identifier(full) {
            out.insert(part);
        }
    }
    out
}

/// Snippet count and mean snippet size in characters.
pub fn snippet_stats(snippets: &[CodeSnippet]) -> (usize, f64) {
    if snippets.is_empty() {
        return (0, 0.0);
    }
    let total: usize = snippets.iter().map(|s| s.size_chars).sum();
    (snippets.len(), total as f64 / snippets.len() as f64)
}

/// Prose sentences that mention at least one code identifier (exact,
/// case-sensitive token match). Keywords, stop words, and identifiers
/// shorter than three characters are ignored.
pub fn count_code_descriptions(
    identifiers: &BTreeSet<String>,
    sentences: &[Sentence],
    lex: &Lexicons,
) -> usize {
    let usable: BTreeSet<&str> = identifiers
        .iter()
        .map(String::as_str)
        .filter(|id| id.chars().count() >= 3)
        .filter(|id| !CODE_KEYWORDS.contains(id))
        .filter(|id| !lex.stopwords.contains(&id.to_lowercase()))
        .collect();
    if usable.is_empty() {
        return 0;
    }
    sentences
        .iter()
        .filter(|s| s.words().any(|t| usable.contains(t.surface.as_str())))
        .count()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CodeMetrics {
    pub code_snippets: usize,
    pub mean_snippet_size: f64,
    pub error_messages: usize,
    pub urls: usize,
    pub code_descriptions: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::Assets;
    use crate::text::sentence::split_sentences;

    fn seg(raw: &str) -> PromptSegments {
        let s = extract_segments(raw, &Assets::bundled().error_patterns);
        assert_eq!(s.reassemble(), raw);
        s
    }

    #[test]
    fn plain_prose_is_untouched() {
        let raw = "How do I sort a list in Python?\nI tried everything.";
        let s = seg(raw);
        assert_eq!(s.prose, raw);
        assert!(s.snippets.is_empty() && s.errors.is_empty());
    }

    #[test]
    fn fenced_block_of_120_chars() {
        let body = "x".repeat(59) + "\n" + &"y".repeat(60);
        assert_eq!(body.chars().count(), 120);
        let raw = format!("Here is my code:\n```python\n{body}\n```\nWhy?");
        let s = seg(&raw);
        assert_eq!(s.snippets.len(), 1);
        assert_eq!(s.snippets[0].size_chars, 120);
        assert_eq!(s.prose, "Here is my code:\n[CODE]\nWhy?");
        assert_eq!(s.prose.matches("[CODE]").count(), 1);
    }

    #[test]
    fn traceback_becomes_one_error() {
        let raw = "It crashes:\nTraceback (most recent call last):\n  File \"app.py\", line 3, in <module>\n    main()\nNameError: name 'main' is not defined\nAny idea?";
        let s = seg(raw);
        assert_eq!(s.errors.len(), 1);
        assert_eq!(s.errors[0].pattern_id, 0);
        assert_eq!(s.prose, "It crashes:\n[ERROR]\nAny idea?");
        assert!(s.snippets.is_empty());
    }

    #[test]
    fn unterminated_fence_runs_to_end() {
        let s = seg("look\n```\nlet x = 1;\nlet y = 2;");
        assert!(s.unterminated_fence);
        assert_eq!(s.snippets.len(), 1);
        assert_eq!(s.snippets[0].text, "let x = 1;\nlet y = 2;");
        assert_eq!(s.prose, "look\n[CODE]");
    }

    #[test]
    fn fenced_error_log_is_an_error() {
        let s = seg("```\nerror: linker failed\nfatal: cannot continue\n```");
        assert_eq!(s.errors.len(), 1);
        assert!(s.snippets.is_empty());
        let s = seg("```\nraise ValueError('x')\nreturn a\nreturn b\n```");
        assert_eq!(s.snippets.len(), 1);
    }

    #[test]
    fn unfenced_code_needs_two_signal_lines() {
        let s = seg("Set x = 5 and retry.\nSee below");
        assert!(s.snippets.is_empty());
        let s = seg("My loop:\nfor (i = 0; i < n; i++) {\n  total += i;\n}\nThanks");
        assert_eq!(s.snippets.len(), 1);
        assert_eq!(s.prose, "My loop:\n[CODE]\nThanks");
    }

    #[test]
    fn urls() {
        assert_eq!(count_urls("no links"), 0);
        assert_eq!(count_urls("see https://a.b and http://c.d"), 2);
        assert_eq!(count_urls("https://a.b https://a.b"), 2);
        assert_eq!(seg("(see https://x.org/p).").urls, vec!["https://x.org/p"]);
    }

    #[test]
    fn identifier_splitting() {
        assert_eq!(split_identifier("parseConfig"), vec!["parse", "Config"]);
        assert_eq!(split_identifier("HTTPServer_v2.run"), vec!["HTTP", "Server", "v2", "run"]);
        let ids = identifiers("cfg = parseConfig(path)");
        assert!(ids.contains("parseConfig") && ids.contains("parse") && ids.contains("Config"));
        assert!(identifiers("").is_empty());
    }

    #[test]
    fn snippet_stats_mean() {
        assert_eq!(snippet_stats(&[]), (0, 0.0));
        let a = CodeSnippet::new(&"a".repeat(100), true);
        let b = CodeSnippet::new(&"b".repeat(300), true);
        assert_eq!(snippet_stats(&[a, b]), (2, 200.0));
    }

    #[test]
    fn code_descriptions_count_sentences() {
        let lex = Lexicons::bundled();
        let ids = identifiers("def parseConfig(path): pass");
        let count = |prose: &str| count_code_descriptions(&ids, &split_sentences(prose, lex), lex);
        assert_eq!(count_code_descriptions(&BTreeSet::new(), &split_sentences("x", lex), lex), 0);
        assert_eq!(count("Then parseConfig fails."), 1);
        assert_eq!(count("parseConfig fails. I call parseConfig twice, parseConfig. Why does parseConfig break?"), 3);
        assert_eq!(count("Then parseconfig fails."), 0);
    }
}
