//! Canonical feature set and per-conversation feature extraction.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::assets::Assets;
use crate::code::{count_code_descriptions, extract_segments, snippet_stats, CodeSnippet};
use crate::error::{Error, Result};
use crate::text::entailment::{entailment_score, EntailmentScorer};
use crate::text::metrics::{compute_text_metrics, lexical_density};
use crate::text::readability::{flesch_from_counts, smog_from_counts, Readability};
use crate::text::sentence::Sentence;
use crate::text::token::{tokenize, Token};

/// Heuristic family a feature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    Specificity,
    ContextualRichness,
    Clarity,
}

macro_rules! features {
    ($($variant:ident => $name:literal, $family:ident;)*) => {
        /// The 24 canonical metrics, in canonical order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Feature {
            $($variant,)*
        }

        impl Feature {
            pub const ALL: [Feature; 24] = [$(Feature::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name,)*
                }
            }

            pub fn family(self) -> Heuristic {
                match self {
                    $(Feature::$variant => Heuristic::$family,)*
                }
            }
        }
    };
}

features! {
    SoftwareTerms => "software_terms", Specificity;
    NamedEntities => "named_entities", Specificity;
    Constraints => "constraints", Specificity;
    Modifiers => "modifiers", Specificity;
    SubordinateClauses => "subordinate_clauses", Specificity;
    Repeated2grams => "repeated_2grams", Specificity;
    Repeated3grams => "repeated_3grams", Specificity;
    CodeSnippets => "code_snippets", ContextualRichness;
    MeanSnippetSize => "mean_snippet_size", ContextualRichness;
    ErrorMessages => "error_messages", ContextualRichness;
    CodeDescriptions => "code_descriptions", ContextualRichness;
    FirstPromptLength => "first_prompt_length", ContextualRichness;
    UniqueInfo => "unique_info", ContextualRichness;
    UniqueWords => "unique_words", ContextualRichness;
    Urls => "urls", ContextualRichness;
    Words => "words", ContextualRichness;
    Sentences => "sentences", ContextualRichness;
    TotalPromptCount => "total_prompt_count", ContextualRichness;
    Misspellings => "misspellings", Clarity;
    IncompleteSentences => "incomplete_sentences", Clarity;
    Flesch => "flesch", Clarity;
    Smog => "smog", Clarity;
    UnresolvedReferences => "unresolved_references", Clarity;
    Entailment => "entailment", Clarity;
}

impl Feature {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn in_family(family: Heuristic) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |f| f.family() == family)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown feature name `{s}`")))
    }
}

impl Serialize for Feature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One value per canonical feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; 24]);

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector([0.0; 24])
    }
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.0[f.index()]
    }

    pub fn set(&mut self, f: Feature, value: f64) {
        self.0[f.index()] = value;
    }

    pub fn values(&self) -> &[f64; 24] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Feature, f64)> + '_ {
        Feature::ALL.into_iter().map(|f| (f, self.get(f)))
    }

    /// Values for `names`, in that order.
    pub fn select(&self, names: &[Feature]) -> Vec<f64> {
        names.iter().map(|&f| self.get(f)).collect()
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(24))?;
        for (f, v) in self.iter() {
            map.serialize_entry(f.name(), &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for FeatureVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<Feature, f64>::deserialize(d)?;
        let mut v = FeatureVector::default();
        for f in Feature::ALL {
            let value = map
                .get(&f)
                .ok_or_else(|| serde::de::Error::missing_field(f.name()))?;
            v.set(f, *value);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Sum counts over every prompt of a conversation.
    Conversation,
    /// Only the first (or only) prompt; used for draft prompts.
    FirstPromptOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    NoProse,
    ShortForSmog,
    EntailmentDegraded,
    UnterminatedFence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtraction {
    pub vector: FeatureVector,
    pub diagnostics: Vec<Diagnostic>,
}

/// Compute the feature vector of a sequence of prompts.
///
/// Count metrics are summed over prompts; `unique_info`, Flesch, SMOG, and
/// entailment are computed over the concatenated prose. `first_prompt_length`
/// is the word count of the first prompt alone.
pub fn extract_features(
    prompts: &[&str],
    scope: Scope,
    assets: &Assets,
    scorer: Option<&dyn EntailmentScorer>,
) -> Result<FeatureExtraction> {
    let prompts = match scope {
        Scope::Conversation => prompts,
        Scope::FirstPromptOnly => &prompts[..prompts.len().min(1)],
    };
    if prompts.is_empty() {
        return Err(Error::EmptyInput("no prompts".into()));
    }
    let lex = &assets.lexicons;
    let mut v = FeatureVector::default();
    let mut diagnostics = Vec::new();
    let mut snippets: Vec<CodeSnippet> = Vec::new();
    let mut all_sentences: Vec<Sentence> = Vec::new();
    let mut all_tokens: Vec<Token> = Vec::new();
    let mut readability = Readability::default();
    let mut errors = 0;
    let mut urls = 0;

    let add = |v: &mut FeatureVector, f: Feature, x: usize| v.set(f, v.get(f) + x as f64);
    for (k, prompt) in prompts.iter().enumerate() {
        let seg = extract_segments(prompt, &assets.error_patterns);
        if seg.unterminated_fence {
            diagnostics.push(Diagnostic::UnterminatedFence);
        }
        let (m, sentences) = compute_text_metrics(&seg.prose, lex, None)?;
        if k == 0 {
            v.set(Feature::FirstPromptLength, m.words as f64);
        }
        add(&mut v, Feature::SoftwareTerms, m.software_terms);
        add(&mut v, Feature::NamedEntities, m.named_entities);
        add(&mut v, Feature::Constraints, m.constraints);
        add(&mut v, Feature::Modifiers, m.modifiers);
        add(&mut v, Feature::SubordinateClauses, m.subordinate_clauses);
        add(&mut v, Feature::Repeated2grams, m.repeated_2grams);
        add(&mut v, Feature::Repeated3grams, m.repeated_3grams);
        add(&mut v, Feature::UniqueWords, m.unique_words);
        add(&mut v, Feature::Words, m.words);
        add(&mut v, Feature::Sentences, m.sentences);
        add(&mut v, Feature::Misspellings, m.misspellings);
        add(&mut v, Feature::IncompleteSentences, m.incomplete_sentences);
        add(&mut v, Feature::UnresolvedReferences, m.unresolved_references);
        readability.words += m.readability.words;
        readability.sentences += m.readability.sentences;
        readability.syllables += m.readability.syllables;
        readability.polysyllables += m.readability.polysyllables;
        errors += seg.errors.len();
        urls += seg.urls.len();
        all_tokens.extend(tokenize(&seg.prose));
        all_sentences.extend(sentences);
        snippets.extend(seg.snippets);
    }

    let (n_snippets, mean_size) = snippet_stats(&snippets);
    let identifiers = snippets
        .iter()
        .flat_map(|s| s.identifiers.iter().cloned())
        .collect();
    v.set(Feature::CodeSnippets, n_snippets as f64);
    v.set(Feature::MeanSnippetSize, mean_size);
    v.set(Feature::ErrorMessages, errors as f64);
    v.set(Feature::Urls, urls as f64);
    v.set(
        Feature::CodeDescriptions,
        count_code_descriptions(&identifiers, &all_sentences, lex) as f64,
    );
    v.set(Feature::UniqueInfo, lexical_density(&all_tokens).1);
    v.set(Feature::TotalPromptCount, prompts.len() as f64);

    let (flesch, no_prose) =
        flesch_from_counts(readability.words, readability.sentences, readability.syllables);
    let (smog, short) = smog_from_counts(readability.polysyllables, readability.sentences);
    let entailment = entailment_score(&all_sentences, lex, scorer);
    v.set(Feature::Flesch, flesch);
    v.set(Feature::Smog, smog);
    v.set(Feature::Entailment, entailment.score);
    if no_prose {
        diagnostics.push(Diagnostic::NoProse);
    }
    if short {
        diagnostics.push(Diagnostic::ShortForSmog);
    }
    if entailment.degraded {
        diagnostics.push(Diagnostic::EntailmentDegraded);
    }
    diagnostics.sort();
    diagnostics.dedup();
    Ok(FeatureExtraction {
        vector: v,
        diagnostics,
    })
}

/// Labelled feature matrix: one row per conversation, `true` = closed issue.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Feature>,
    pub x: DMatrix<f64>,
    pub y: Vec<bool>,
}

pub const LABEL_COLUMN: &str = "issue_status";

impl Dataset {
    pub fn from_vectors(rows: &[(FeatureVector, bool)], features: &[Feature]) -> Self {
        let x = DMatrix::from_fn(rows.len(), features.len(), |i, j| rows[i].0.get(features[j]));
        Dataset {
            features: features.to_vec(),
            x,
            y: rows.iter().map(|r| r.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Keep only `features`, in the given order.
    pub fn select(&self, features: &[Feature]) -> Result<Dataset> {
        let cols = features
            .iter()
            .map(|f| {
                self.features
                    .iter()
                    .position(|g| g == f)
                    .ok_or_else(|| Error::Contract(format!("feature `{f}` not in dataset")))
            })
            .collect::<Result<Vec<_>>>()?;
        let x = DMatrix::from_fn(self.len(), cols.len(), |i, j| self.x[(i, cols[j])]);
        Ok(Dataset {
            features: features.to_vec(),
            x,
            y: self.y.clone(),
        })
    }

    /// Read a CSV with canonical feature columns and an `issue_status`
    /// column holding `open`/`closed` (or `0`/`1`).
    pub fn read_csv(reader: impl Read) -> Result<Dataset> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut features = Vec::new();
        let mut columns = Vec::new();
        let mut label_col = None;
        for (i, h) in headers.iter().enumerate() {
            let h = h.trim();
            if h == LABEL_COLUMN {
                label_col = Some(i);
            } else {
                features.push(h.parse::<Feature>()?);
                columns.push(i);
            }
        }
        let label_col =
            label_col.ok_or_else(|| Error::Contract(format!("missing `{LABEL_COLUMN}` column")))?;
        let mut values = Vec::new();
        let mut y = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for &c in &columns {
                let cell = record.get(c).unwrap_or("").trim();
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Contract(format!("row {}: `{}` is not a number", row + 1, cell))
                })?;
                if !v.is_finite() {
                    return Err(Error::Contract(format!("row {}: non-finite value", row + 1)));
                }
                values.push(v);
            }
            y.push(match record.get(label_col).unwrap_or("").trim() {
                "closed" | "1" => true,
                "open" | "0" => false,
                other => {
                    return Err(Error::Contract(format!(
                        "row {}: issue_status `{other}` is not open/closed",
                        row + 1
                    )))
                }
            });
        }
        let x = DMatrix::from_row_slice(y.len(), features.len(), &values);
        Ok(Dataset { features, x, y })
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.features.iter().map(|f| f.name()).collect();
        header.push(LABEL_COLUMN);
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = (0..self.features.len())
                .map(|j| self.x[(i, j)].to_string())
                .collect();
            rec.push(if self.y[i] { "closed" } else { "open" }.to_owned());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_names_round_trip() {
        assert_eq!(Feature::ALL.len(), 24);
        for (i, f) in Feature::ALL.into_iter().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(f.name().parse::<Feature>().unwrap(), f);
        }
        assert!("bogus".parse::<Feature>().is_err());
        assert_eq!(Feature::in_family(Heuristic::Specificity).count(), 7);
        assert_eq!(Feature::in_family(Heuristic::ContextualRichness).count(), 11);
        assert_eq!(Feature::in_family(Heuristic::Clarity).count(), 6);
    }

    #[test]
    fn two_prompt_aggregation() {
        let assets = Assets::bundled();
        let p1 = "the server is down and the logs are empty today";
        let p2 = "i restarted the server twice but the database still refuses every connection from the app even after the cache reset";
        let ex = extract_features(&[p1, p2], Scope::Conversation, assets, None).unwrap();
        assert_eq!(ex.vector.get(Feature::Words), 30.0);
        assert_eq!(ex.vector.get(Feature::TotalPromptCount), 2.0);
        assert_eq!(ex.vector.get(Feature::FirstPromptLength), 10.0);
        let first = extract_features(&[p1, p2], Scope::FirstPromptOnly, assets, None).unwrap();
        assert_eq!(first.vector.get(Feature::Words), 10.0);
        assert_eq!(first.vector.get(Feature::TotalPromptCount), 1.0);
    }

    #[test]
    fn all_code_conversation() {
        let ex = extract_features(&["```\nx = 1;\n```"], Scope::Conversation, Assets::bundled(), None)
            .unwrap();
        assert_eq!(ex.vector.get(Feature::Words), 0.0);
        assert_eq!(ex.vector.get(Feature::Flesch), 0.0);
        assert!(ex.diagnostics.contains(&Diagnostic::NoProse));
        assert_eq!(ex.vector.get(Feature::CodeSnippets), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let mut a = FeatureVector::default();
        a.set(Feature::Words, 12.0);
        a.set(Feature::Flesch, -3.5);
        let ds = Dataset::from_vectors(&[(a, true), (FeatureVector::default(), false)], &Feature::ALL);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("software_terms,named_entities,"));
        assert!(text.lines().next().unwrap().ends_with(",issue_status"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn csv_rejects_bad_labels() {
        assert!(Dataset::read_csv("words,issue_status\n1,maybe\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("words\n1\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("wordz,issue_status\n1,open\n".as_bytes()).is_err());
    }
}
