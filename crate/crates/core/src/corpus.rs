//! Conversation corpora: loading, language filtering, and group summaries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::assets::Assets;
use crate::code::extract_segments;
use crate::error::{Error, Result};
use crate::features::{Feature, FeatureVector};
use crate::stats::{lower_median, welch_t_test};
use crate::text::token::{tokenize, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueStatus {
    Open,
    Closed,
}

impl IssueStatus {
    pub fn is_closed(self) -> bool {
        self == IssueStatus::Closed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(skip)]
    pub index: usize,
    pub prompt: String,
    #[serde(default)]
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub issue_url: String,
    pub issue_status: IssueStatus,
    pub turns: Vec<Turn>,
    /// Verdict of the language detector; not part of the file format.
    #[serde(skip, default = "keep")]
    pub language_ok: bool,
}

fn keep() -> bool {
    true
}

impl Conversation {
    pub fn prompts(&self) -> Vec<&str> {
        self.turns.iter().map(|t| t.prompt.as_str()).collect()
    }
}

/// Input layout accepted by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusSchema {
    /// `[{"id", "issue_url", "issue_status", "turns": [{"prompt", "response"}]}]`
    #[default]
    Minimal,
    /// DevGPT issue-sharing export: `{"Sources": [{"URL", "State",
    /// "ChatgptSharing": [{"URL", "Conversations": [{"Prompt", "Answer"}]}]}]}`.
    /// Each sharing becomes one conversation keyed by its share URL.
    DevgptIssues,
}

impl FromStr for CorpusSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimal" => Ok(CorpusSchema::Minimal),
            "devgpt-issues" => Ok(CorpusSchema::DevgptIssues),
            _ => Err(Error::Argument(format!(
                "unknown corpus schema `{s}` (expected minimal or devgpt-issues)"
            ))),
        }
    }
}

impl fmt::Display for CorpusSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusSchema::Minimal => "minimal",
            CorpusSchema::DevgptIssues => "devgpt-issues",
        })
    }
}

#[derive(Debug)]
pub enum LoadNotice {
    /// A later record repeated an id; the first occurrence was kept.
    Duplicate { id: String },
    /// A record failed validation and was not loaded.
    Rejected(Error),
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub conversations: Vec<Conversation>,
    pub notices: Vec<LoadNotice>,
}

impl LoadReport {
    pub fn duplicates(&self) -> usize {
        self.notices
            .iter()
            .filter(|n| matches!(n, LoadNotice::Duplicate { .. }))
            .count()
    }

    pub fn rejected(&self) -> impl Iterator<Item = &Error> {
        self.notices.iter().filter_map(|n| match n {
            LoadNotice::Rejected(e) => Some(e),
            _ => None,
        })
    }
}

/// Byte offset of a 1-based (line, column) position as reported by serde_json.
pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Load a corpus. Invalid records are reported in the returned notices and
/// duplicate ids keep their first occurrence. Every conversation starts with
/// `language_ok = true`; run [`detect_english`] to filter.
pub fn load_corpus(text: &str, schema: CorpusSchema) -> Result<LoadReport> {
    let doc = parse_json(text)?;
    let records = match schema {
        CorpusSchema::Minimal => minimal_records(&doc)?,
        CorpusSchema::DevgptIssues => devgpt_records(&doc)?,
    };
    let mut report = LoadReport::default();
    let mut seen = std::collections::HashSet::new();
    for r in records {
        match r {
            Ok(c) => {
                if seen.insert(c.id.clone()) {
                    report.conversations.push(c);
                } else {
                    report.notices.push(LoadNotice::Duplicate { id: c.id });
                }
            }
            Err(e) => report.notices.push(LoadNotice::Rejected(e)),
        }
    }
    Ok(report)
}

/// Serialize conversations back into the minimal schema.
pub fn to_json(conversations: &[Conversation]) -> String {
    serde_json::to_string_pretty(conversations).expect("conversations serialize")
}

fn invalid(record: &str, field: &str) -> Error {
    Error::Validation {
        record: record.to_owned(),
        field: field.to_owned(),
    }
}

fn str_field<'a>(obj: &'a Map<String, Value>, key: &str, record: &str) -> Result<&'a str> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| invalid(record, key))
}

fn build_turns(pairs: Vec<(Option<&str>, Option<&str>)>, record: &str, field: &str) -> Result<Vec<Turn>> {
    if pairs.is_empty() {
        return Err(invalid(record, field));
    }
    pairs
        .into_iter()
        .enumerate()
        .map(|(index, (prompt, response))| match prompt {
            Some(p) if !p.trim().is_empty() => Ok(Turn {
                index,
                prompt: p.to_owned(),
                response: response.unwrap_or("").to_owned(),
            }),
            _ => Err(invalid(record, &format!("{field}[{index}].prompt"))),
        })
        .collect()
}

fn minimal_records(doc: &Value) -> Result<Vec<Result<Conversation>>> {
    let arr = doc
        .as_array()
        .ok_or_else(|| invalid("(root)", "top-level array"))?;
    Ok(arr
        .iter()
        .enumerate()
        .map(|(i, v)| minimal_record(i, v))
        .collect())
}

fn minimal_record(i: usize, v: &Value) -> Result<Conversation> {
    let fallback = format!("#{i}");
    let obj = v.as_object().ok_or_else(|| invalid(&fallback, "(record)"))?;
    let id = match obj.get("id").and_then(Value::as_str) {
        Some(id) if !id.is_empty() => id,
        _ => return Err(invalid(&fallback, "id")),
    };
    let issue_url = str_field(obj, "issue_url", id)?;
    let issue_status = match obj.get("issue_status").and_then(Value::as_str) {
        Some("open") => IssueStatus::Open,
        Some("closed") => IssueStatus::Closed,
        _ => return Err(invalid(id, "issue_status")),
    };
    let turns = obj
        .get("turns")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid(id, "turns"))?;
    let mut pairs = Vec::with_capacity(turns.len());
    for (k, t) in turns.iter().enumerate() {
        let t = t
            .as_object()
            .ok_or_else(|| invalid(id, &format!("turns[{k}]")))?;
        let response = match t.get("response") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => return Err(invalid(id, &format!("turns[{k}].response"))),
        };
        pairs.push((t.get("prompt").and_then(Value::as_str), response));
    }
    Ok(Conversation {
        id: id.to_owned(),
        issue_url: issue_url.to_owned(),
        issue_status,
        turns: build_turns(pairs, id, "turns")?,
        language_ok: true,
    })
}

fn devgpt_records(doc: &Value) -> Result<Vec<Result<Conversation>>> {
    let sources = doc
        .get("Sources")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("(root)", "Sources"))?;
    let mut out = Vec::new();
    for (i, src) in sources.iter().enumerate() {
        let fallback = format!("Sources[{i}]");
        let Some(src) = src.as_object() else {
            out.push(Err(invalid(&fallback, "(record)")));
            continue;
        };
        let issue_url = src.get("URL").and_then(Value::as_str);
        let status = match src.get("State").and_then(Value::as_str) {
            Some(s) if s.eq_ignore_ascii_case("open") => Some(IssueStatus::Open),
            Some(s) if s.eq_ignore_ascii_case("closed") => Some(IssueStatus::Closed),
            _ => None,
        };
        let Some(sharings) = src.get("ChatgptSharing").and_then(Value::as_array) else {
            out.push(Err(invalid(&fallback, "ChatgptSharing")));
            continue;
        };
        for (j, sh) in sharings.iter().enumerate() {
            let record = sh
                .get("URL")
                .and_then(Value::as_str)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("{fallback}.ChatgptSharing[{j}]"));
            out.push((|| {
                let url = issue_url.ok_or_else(|| invalid(&record, "URL"))?;
                let status = status.ok_or_else(|| invalid(&record, "State"))?;
                if sh.get("URL").and_then(Value::as_str).is_none() {
                    return Err(invalid(&record, "ChatgptSharing.URL"));
                }
                let convs = sh
                    .get("Conversations")
                    .and_then(Value::as_array)
                    .ok_or_else(|| invalid(&record, "Conversations"))?;
                let pairs = convs
                    .iter()
                    .map(|c| {
                        (
                            c.get("Prompt").and_then(Value::as_str),
                            c.get("Answer").and_then(Value::as_str),
                        )
                    })
                    .collect();
                Ok(Conversation {
                    id: record.clone(),
                    issue_url: url.to_owned(),
                    issue_status: status,
                    turns: build_turns(pairs, &record, "Conversations")?,
                    language_ok: true,
                })
            })());
        }
    }
    Ok(out)
}

/// Decides whether prose is English.
pub trait LanguageDetector {
    fn is_english(&self, prose: &str) -> bool;
}

/// Default detector: rejects only prose with at least 20 alphabetic tokens
/// of which fewer than 5% are English stop words.
pub struct StopwordDetector<'a> {
    assets: &'a Assets,
}

pub const MIN_EVIDENCE_TOKENS: usize = 20;
pub const MIN_STOPWORD_RATIO: f64 = 0.05;

impl<'a> StopwordDetector<'a> {
    pub fn new(assets: &'a Assets) -> Self {
        StopwordDetector { assets }
    }
}

impl LanguageDetector for StopwordDetector<'_> {
    fn is_english(&self, prose: &str) -> bool {
        let words: Vec<String> = tokenize(prose)
            .into_iter()
            .filter(|t| t.kind == TokenKind::Word && t.surface.chars().all(char::is_alphabetic))
            .map(|t| t.normalized)
            .collect();
        if words.len() < MIN_EVIDENCE_TOKENS {
            return true;
        }
        let stop = words
            .iter()
            .filter(|w| self.assets.lexicons.stopwords.contains(w))
            .count();
        stop as f64 / words.len() as f64 >= MIN_STOPWORD_RATIO
    }
}

/// Run `detector` over the prose of every prompt and record the verdict.
pub fn detect_english(
    conversation: &mut Conversation,
    detector: &dyn LanguageDetector,
    assets: &Assets,
) -> bool {
    let prose: Vec<String> = conversation
        .turns
        .iter()
        .map(|t| extract_segments(&t.prompt, &assets.error_patterns).prose)
        .collect();
    conversation.language_ok = detector.is_english(&prose.join("\n\n"));
    conversation.language_ok
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRange {
    pub feature: Feature,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub n_conversations: usize,
    pub n_open: usize,
    pub n_closed: usize,
    pub prompts_open: usize,
    pub prompts_closed: usize,
    /// Conversations left out because `language_ok` is false.
    pub excluded_non_english: usize,
    /// `None` when the group is empty.
    pub open: Option<Vec<MetricRange>>,
    pub closed: Option<Vec<MetricRange>>,
}

fn ranges(rows: &[&FeatureVector]) -> Option<Vec<MetricRange>> {
    if rows.is_empty() {
        return None;
    }
    Some(
        Feature::ALL
            .into_iter()
            .map(|f| {
                let v: Vec<f64> = rows.iter().map(|r| r.get(f)).collect();
                MetricRange {
                    feature: f,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    median: lower_median(&v).expect("non-empty"),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect(),
    )
}

/// Per-status min/median/max of every metric over English conversations.
pub fn corpus_stats(
    conversations: &[Conversation],
    features: &[FeatureVector],
) -> Result<CorpusSummary> {
    if conversations.len() != features.len() {
        return Err(Error::Contract(format!(
            "{} conversations but {} feature vectors",
            conversations.len(),
            features.len()
        )));
    }
    let mut open = Vec::new();
    let mut closed = Vec::new();
    let (mut prompts_open, mut prompts_closed, mut excluded) = (0, 0, 0);
    for (c, v) in conversations.iter().zip(features) {
        if !c.language_ok {
            excluded += 1;
            continue;
        }
        match c.issue_status {
            IssueStatus::Open => {
                open.push(v);
                prompts_open += c.turns.len();
            }
            IssueStatus::Closed => {
                closed.push(v);
                prompts_closed += c.turns.len();
            }
        }
    }
    Ok(CorpusSummary {
        n_conversations: open.len() + closed.len(),
        n_open: open.len(),
        n_closed: closed.len(),
        prompts_open,
        prompts_closed,
        excluded_non_english: excluded,
        open: ranges(&open),
        closed: ranges(&closed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupComparison {
    pub feature: Feature,
    pub mean_open: f64,
    pub mean_closed: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch t-test of every metric between the open and closed groups.
pub fn compare_groups(
    open: &[FeatureVector],
    closed: &[FeatureVector],
) -> Result<Vec<GroupComparison>> {
    if open.len() < 2 || closed.len() < 2 {
        return Err(Error::Argument(
            "each group needs at least two conversations".into(),
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(Feature::ALL
        .into_iter()
        .map(|f| {
            let a: Vec<f64> = open.iter().map(|r| r.get(f)).collect();
            let b: Vec<f64> = closed.iter().map(|r| r.get(f)).collect();
            let w = welch_t_test(&a, &b).expect("both groups have two rows");
            GroupComparison {
                feature: f,
                mean_open: mean(&a),
                mean_closed: mean(&b),
                t: w.t,
                df: w.df,
                p_value: w.p_value,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"[
      {"id": "a", "issue_url": "https://github.com/o/r/issues/1", "issue_status": "closed",
       "turns": [{"prompt": "How do I fix this?", "response": "Try this."}]},
      {"id": "a", "issue_url": "https://github.com/o/r/issues/1", "issue_status": "closed",
       "turns": [{"prompt": "Again", "response": ""}]}
    ]"#;

    #[test]
    fn empty_array() {
        let r = load_corpus("[]", CorpusSchema::Minimal).unwrap();
        assert!(r.conversations.is_empty() && r.notices.is_empty());
    }

    #[test]
    fn duplicates_keep_first() {
        let r = load_corpus(TWO, CorpusSchema::Minimal).unwrap();
        assert_eq!(r.conversations.len(), 1);
        assert_eq!(r.duplicates(), 1);
        assert_eq!(r.conversations[0].turns[0].prompt, "How do I fix this?");
    }

    #[test]
    fn parse_error_has_byte_offset() {
        let err = load_corpus("[\n  {\"id\": }", CorpusSchema::Minimal).unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 11),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn validation_names_record_and_field() {
        let text = r#"[{"id": "x1", "issue_url": "u", "issue_status": "unknown", "turns": []}]"#;
        let r = load_corpus(text, CorpusSchema::Minimal).unwrap();
        let errs: Vec<_> = r.rejected().collect();
        assert_eq!(errs.len(), 1);
        assert!(matches!(errs[0], Error::Validation { record, field }
            if record == "x1" && field == "issue_status"));
    }

    #[test]
    fn round_trip() {
        let r = load_corpus(TWO, CorpusSchema::Minimal).unwrap();
        let again = load_corpus(&to_json(&r.conversations), CorpusSchema::Minimal).unwrap();
        assert_eq!(again.conversations, r.conversations);
    }

    #[test]
    fn devgpt_adapter() {
        let text = r#"{"Sources": [{"Type": "issue", "URL": "https://github.com/o/r/issues/2",
          "State": "CLOSED", "ChatgptSharing": [
            {"URL": "https://chat.openai.com/share/1", "Conversations": [
              {"Prompt": "why does it crash", "Answer": "because"}]},
            {"URL": "https://chat.openai.com/share/2", "Status": 404}]}]}"#;
        let r = load_corpus(text, CorpusSchema::DevgptIssues).unwrap();
        assert_eq!(r.conversations.len(), 1);
        assert_eq!(r.conversations[0].issue_status, IssueStatus::Closed);
        assert_eq!(r.rejected().count(), 1);
    }

    #[test]
    fn english_detection() {
        let assets = Assets::bundled();
        let d = StopwordDetector::new(assets);
        assert!(d.is_english("How do I fix this null pointer?"));
        assert!(d.is_english("```\nfn main() {}\n```"));
        let foreign = "Wie kann ich diesen Fehler beheben wenn Programm abstürzt \
            während Ausführung Datenbank Verbindung Server Konfiguration Benutzer \
            Anmeldung Passwort Sitzung Speicher Zugriff Rechte Verzeichnis Datei";
        assert!(!d.is_english(foreign));
    }

    #[test]
    fn singleton_and_lower_median() {
        let mut c = load_corpus(TWO, CorpusSchema::Minimal).unwrap().conversations;
        let mut v = FeatureVector::default();
        v.set(Feature::Words, 7.0);
        let s = corpus_stats(&c, &[v]).unwrap();
        assert_eq!(s.n_closed, 1);
        assert!(s.open.is_none());
        let w = &s.closed.unwrap()[Feature::Words.index()];
        assert_eq!((w.min, w.median, w.max), (7.0, 7.0, 7.0));
        c[0].language_ok = false;
        let s = corpus_stats(&c, &[v]).unwrap();
        assert_eq!(s.excluded_non_english, 1);
        assert!(s.closed.is_none());
    }

    #[test]
    fn identical_groups() {
        let rows: Vec<FeatureVector> = (0..4)
            .map(|i| {
                let mut v = FeatureVector::default();
                v.set(Feature::Words, i as f64);
                v
            })
            .collect();
        let cmp = compare_groups(&rows, &rows).unwrap();
        let words = &cmp[Feature::Words.index()];
        assert_eq!((words.t, words.p_value), (0.0, 1.0));
        assert_eq!(cmp[Feature::Urls.index()].p_value, 1.0);
    }
}
