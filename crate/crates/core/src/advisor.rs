//! Draft-prompt advice: category scores, gap flags, and suggestions.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assets::{Assets, Lexicons};
use crate::code::extract_segments;
use crate::error::{Error, Result};
use crate::features::{extract_features, Diagnostic, Feature, FeatureVector, Heuristic, Scope};
use crate::model::{Attribution, ModelParams};
use crate::text::entailment::EntailmentScorer;
use crate::text::sentence::{split_sentences, Sentence};

/// The five input boxes of the prompt template.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateFields {
    pub description: String,
    pub code_snippets: Vec<String>,
    pub error_log: String,
    pub libraries_frameworks: String,
    pub resources: String,
}

impl TemplateFields {
    pub fn is_empty(&self) -> bool {
        blank(&self.description)
            && self.code_snippets.iter().all(|s| blank(s))
            && blank(&self.error_log)
            && blank(&self.libraries_frameworks)
            && blank(&self.resources)
    }
}

fn blank(s: &str) -> bool {
    s.trim().is_empty()
}

fn fenced(body: &str) -> String {
    format!("```\n{}\n```", body.trim_end_matches(['\n', '\r']))
}

/// Assemble the structured prompt. Sections, in order and separated by a
/// blank line: description, `Environment:`, one fence per snippet,
/// `Error output:` fence, `References:` list. Empty sections are omitted.
pub fn fields_to_prompt(fields: &TemplateFields) -> Result<String> {
    if fields.is_empty() {
        return Err(Error::EmptyInput("all template fields are empty".into()));
    }
    let mut parts: Vec<String> = Vec::new();
    if !blank(&fields.description) {
        parts.push(fields.description.clone());
    }
    if !blank(&fields.libraries_frameworks) {
        parts.push(format!("Environment: {}", fields.libraries_frameworks.trim()));
    }
    for s in fields.code_snippets.iter().filter(|s| !blank(s)) {
        parts.push(fenced(s));
    }
    if !blank(&fields.error_log) {
        parts.push(format!("Error output:\n{}", fenced(&fields.error_log)));
    }
    let refs: Vec<&str> = fields
        .resources
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if !refs.is_empty() {
        let list: Vec<String> = refs.iter().map(|r| format!("- {r}")).collect();
        parts.push(format!("References:\n{}", list.join("\n")));
    }
    Ok(parts.join("\n\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub lo: f64,
    pub hi: f64,
    pub direction: Direction,
    /// Unscored features are computed but left out of category means.
    #[serde(default = "scored_default", skip_serializing_if = "Clone::clone")]
    pub scored: bool,
}

fn scored_default() -> bool {
    true
}

impl CalibrationEntry {
    /// Normalised goodness in [0, 1]: 1 is best.
    pub fn goodness(&self, v: f64) -> f64 {
        let n = ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        match self.direction {
            Direction::HigherIsBetter => n,
            Direction::LowerIsBetter => 1.0 - n,
        }
    }
}

/// Per-feature normalisation bounds and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Calibration(pub BTreeMap<Feature, CalibrationEntry>);

impl Calibration {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Calibration = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: crate::corpus::byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        for (f, e) in &c.0 {
            if !(e.lo.is_finite() && e.hi.is_finite() && e.hi > e.lo) {
                return Err(Error::Contract(format!(
                    "calibration for `{f}` needs finite bounds with hi > lo"
                )));
            }
        }
        Ok(c)
    }

    pub fn get(&self, f: Feature) -> Result<&CalibrationEntry> {
        self.0
            .get(&f)
            .ok_or_else(|| Error::Contract(format!("no calibration entry for `{f}`")))
    }

    fn scored(&self, family: Heuristic) -> Result<Vec<(Feature, &CalibrationEntry)>> {
        let mut out = Vec::new();
        for f in Feature::in_family(family) {
            let e = self.get(f)?;
            if e.scored {
                out.push((f, e));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategoryScores {
    pub contextual_richness: f64,
    pub specificity: f64,
    pub clarity: f64,
}

impl CategoryScores {
    pub fn get(&self, family: Heuristic) -> f64 {
        match family {
            Heuristic::ContextualRichness => self.contextual_richness,
            Heuristic::Specificity => self.specificity,
            Heuristic::Clarity => self.clarity,
        }
    }
}

/// 100 × mean normalised goodness of each family's scored features.
pub fn category_scores(features: &FeatureVector, calibration: &Calibration) -> Result<CategoryScores> {
    let score = |family| -> Result<f64> {
        let entries = calibration.scored(family)?;
        if entries.is_empty() {
            return Err(Error::Contract(format!("no scored features in {family:?}")));
        }
        let sum: f64 = entries.iter().map(|(f, e)| e.goodness(features.get(*f))).sum();
        Ok(100.0 * sum / entries.len() as f64)
    };
    Ok(CategoryScores {
        contextual_richness: score(Heuristic::ContextualRichness)?,
        specificity: score(Heuristic::Specificity)?,
        clarity: score(Heuristic::Clarity)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum GapKind {
    MissingContext,
    MultipleContext,
    UnclearInstructions,
    MissingSpecification,
}

impl GapKind {
    pub fn family(self) -> Heuristic {
        match self {
            GapKind::MissingContext | GapKind::MultipleContext => Heuristic::ContextualRichness,
            GapKind::MissingSpecification => Heuristic::Specificity,
            GapKind::UnclearInstructions => Heuristic::Clarity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapFlag {
    pub kind: GapKind,
    pub severity: f64,
    pub evidence: Vec<Feature>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub contextual_richness: f64,
    pub specificity: f64,
    pub clarity: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            contextual_richness: 50.0,
            specificity: 50.0,
            clarity: 50.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("contextual_richness", self.contextual_richness),
            ("specificity", self.specificity),
            ("clarity", self.clarity),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::Argument(format!("threshold {name} must lie in [0, 100]")));
            }
        }
        Ok(())
    }

    fn get(&self, family: Heuristic) -> f64 {
        match family {
            Heuristic::ContextualRichness => self.contextual_richness,
            Heuristic::Specificity => self.specificity,
            Heuristic::Clarity => self.clarity,
        }
    }
}

pub const TOPIC_SHIFT_MIN_SENTENCES: usize = 3;
pub const TOPIC_SHIFT_SEVERITY: f64 = 0.5;

fn content_words(sentences: &[Sentence], lex: &Lexicons) -> HashSet<String> {
    sentences
        .iter()
        .flat_map(|s| s.words().map(|t| t.normalized.clone()))
        .filter(|w| !lex.stopwords.contains(w))
        .collect()
}

/// Topic-shift proxy: the first and last thirds of the prose sentences each
/// hold at least three sentences and share no content word.
pub fn topic_shift(sentences: &[Sentence], lex: &Lexicons) -> bool {
    let prose: Vec<Sentence> = sentences.iter().filter(|s| s.is_prose()).cloned().collect();
    let third = prose.len() / 3;
    if third < TOPIC_SHIFT_MIN_SENTENCES {
        return false;
    }
    let head = content_words(&prose[..third], lex);
    let tail = content_words(&prose[prose.len() - third..], lex);
    head.is_disjoint(&tail)
}

fn family_flag(family: Heuristic) -> GapKind {
    match family {
        Heuristic::ContextualRichness => GapKind::MissingContext,
        Heuristic::Specificity => GapKind::MissingSpecification,
        Heuristic::Clarity => GapKind::UnclearInstructions,
    }
}

/// Flag each category scoring strictly below its threshold, plus
/// `MultipleContext` when `topic_shift` holds.
pub fn detect_gaps(
    scores: &CategoryScores,
    features: &FeatureVector,
    calibration: &Calibration,
    thresholds: &Thresholds,
    topic_shift: bool,
) -> Result<Vec<GapFlag>> {
    let mut flags = Vec::new();
    for family in [Heuristic::ContextualRichness, Heuristic::Specificity, Heuristic::Clarity] {
        let (score, thr) = (scores.get(family), thresholds.get(family));
        if score >= thr {
            continue;
        }
        let severity = if thr > 0.0 { ((thr - score) / thr).clamp(0.0, 1.0) } else { 0.0 };
        let mut deficits: Vec<(Feature, f64)> = calibration
            .scored(family)?
            .into_iter()
            .map(|(f, e)| (f, 1.0 - e.goodness(features.get(f))))
            .filter(|&(_, d)| d > 0.0)
            .collect();
        deficits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        flags.push(GapFlag {
            kind: family_flag(family),
            severity,
            evidence: deficits.into_iter().take(3).map(|(f, _)| f).collect(),
        });
    }
    if topic_shift {
        flags.push(GapFlag {
            kind: GapKind::MultipleContext,
            severity: TOPIC_SHIFT_SEVERITY,
            evidence: vec![Feature::Sentences, Feature::Words],
        });
    }
    flags.sort_by_key(|f| f.kind);
    Ok(flags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpectedDirection {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suggestion {
    pub text: String,
    pub target_feature: Feature,
    pub expected_direction: ExpectedDirection,
    pub flag: GapKind,
}

pub const MAX_SUGGESTIONS_PER_FLAG: usize = 3;

fn suggestion_text(f: Feature, dir: ExpectedDirection, value: f64) -> String {
    use ExpectedDirection::*;
    use Feature::*;
    let n = value.round() as i64;
    match (f, dir) {
        (CodeSnippets, Increase) => "Add a code snippet that shows the relevant part of your program.".into(),
        (MeanSnippetSize, Decrease) => "Trim code snippets down to the lines that matter.".into(),
        (ErrorMessages, Increase) => "Paste the exact error message or stack trace.".into(),
        (CodeDescriptions, Increase) => "Describe in words what the key functions and variables in your code do.".into(),
        (FirstPromptLength, Increase) => "Give a more detailed description of the problem up front.".into(),
        (UniqueInfo, Increase) => "Add new information instead of repeating what is already stated.".into(),
        (UniqueWords, Increase) => "Add distinct details such as versions, inputs and expected output.".into(),
        (Urls, Increase) => "Link relevant resources such as documentation or the issue page.".into(),
        (Words, Increase) => "Expand the description with more detail about the goal and the context.".into(),
        (Sentences, Increase) => "Explain the problem in a few more complete sentences.".into(),
        (Sentences, Decrease) => "Split unrelated questions into separate prompts.".into(),
        (SoftwareTerms, Increase) => "Name the technologies, APIs and components involved.".into(),
        (NamedEntities, Increase) => "Name the specific libraries, tools and versions you use.".into(),
        (Constraints, Increase) => "State requirements explicitly, for example what the solution must or must not do.".into(),
        (Modifiers, Increase) => "Qualify the request with precise details on how it should behave.".into(),
        (SubordinateClauses, Increase) => "Spell out the conditions under which the problem occurs.".into(),
        (Repeated2grams | Repeated3grams, Increase) => "Refer to the key components consistently by the same name.".into(),
        (Misspellings, Decrease) => match n {
            1 => "Fix the misspelled word.".into(),
            n if n > 1 => format!("Fix the {n} misspelled words."),
            _ => "Check the spelling of the description.".into(),
        },
        (IncompleteSentences, Decrease) => "Rewrite sentence fragments as complete sentences.".into(),
        (Flesch, Increase) => "Use shorter sentences and simpler words.".into(),
        (Smog, Decrease) => "Reduce long words and complex sentences.".into(),
        (UnresolvedReferences, Decrease) => "Replace pronouns like \"it\" or \"this\" with what they refer to.".into(),
        (Entailment, Increase) => "Make consecutive sentences build on each other with a consistent structure.".into(),
        (f, Increase) => format!("Increase {}.", f.name().replace('_', " ")),
        (f, Decrease) => format!("Reduce {}.", f.name().replace('_', " ")),
    }
}

/// Direction a feature should move in, or `None` when the calibration and the
/// model disagree on it.
fn improvement(f: Feature, entry: &CalibrationEntry, model: &ModelParams) -> Option<ExpectedDirection> {
    let dir = match entry.direction {
        Direction::HigherIsBetter => ExpectedDirection::Increase,
        Direction::LowerIsBetter => ExpectedDirection::Decrease,
    };
    match model.weight(f) {
        Some(w) if w > 0.0 && dir == ExpectedDirection::Decrease => None,
        Some(w) if w < 0.0 && dir == ExpectedDirection::Increase => None,
        _ => Some(dir),
    }
}

/// Up to three suggestions per flag. Candidates are the family's features
/// with the largest normalised deficits; they are then ordered by absolute
/// model weight and deficit.
pub fn generate_suggestions(
    flags: &[GapFlag],
    features: &FeatureVector,
    calibration: &Calibration,
    model: &ModelParams,
) -> Result<Vec<Suggestion>> {
    let mut out: Vec<Suggestion> = Vec::new();
    let mut used = HashSet::new();
    for flag in flags {
        if flag.kind == GapKind::MultipleContext {
            if used.insert(Feature::Sentences) {
                let dir = ExpectedDirection::Decrease;
                out.push(Suggestion {
                    text: suggestion_text(Feature::Sentences, dir, 0.0),
                    target_feature: Feature::Sentences,
                    expected_direction: dir,
                    flag: flag.kind,
                });
            }
            continue;
        }
        let weight = |f: Feature| model.weight(f).unwrap_or(0.0).abs();
        let eligible: Vec<(Feature, f64, ExpectedDirection)> = calibration
            .scored(flag.kind.family())?
            .into_iter()
            .filter(|(f, _)| !used.contains(f))
            .filter_map(|(f, e)| {
                improvement(f, e, model).map(|d| (f, 1.0 - e.goodness(features.get(f)), d))
            })
            .collect();
        let mut picked: Vec<_> = eligible.iter().filter(|c| c.1 > 0.0).cloned().collect();
        picked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(weight(b.0).total_cmp(&weight(a.0)))
                .then(a.0.cmp(&b.0))
        });
        if picked.is_empty() {
            // Nothing measurably short: fall back on the most influential lever.
            picked = eligible;
            picked.sort_by(|a, b| weight(b.0).total_cmp(&weight(a.0)).then(a.0.cmp(&b.0)));
        }
        picked.truncate(MAX_SUGGESTIONS_PER_FLAG);
        picked.sort_by(|a, b| {
            weight(b.0)
                .total_cmp(&weight(a.0))
                .then(b.1.total_cmp(&a.1))
                .then(a.0.cmp(&b.0))
        });
        for (f, _, dir) in picked {
            used.insert(f);
            out.push(Suggestion {
                text: suggestion_text(f, dir, features.get(f)),
                target_feature: f,
                expected_direction: dir,
                flag: flag.kind,
            });
        }
    }
    Ok(out)
}

/// A draft prompt, either as template fields or as free text.
#[derive(Debug, Clone, PartialEq)]
pub enum AdvisorInput {
    Fields(TemplateFields),
    Raw(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub scores: CategoryScores,
    pub probability_effective: f64,
    pub flags: Vec<GapFlag>,
    pub attributions: Attribution,
    pub suggestions: Vec<Suggestion>,
    pub composed_prompt: String,
    /// Raw (unscaled) metric values of the draft.
    pub features: FeatureVector,
    pub diagnostics: Vec<Diagnostic>,
}

/// Model, calibration and lexicons bound together for repeated analysis.
#[derive(Clone)]
pub struct Analyzer<'a> {
    pub assets: &'a Assets,
    pub model: &'a ModelParams,
    pub calibration: &'a Calibration,
    pub thresholds: Thresholds,
    pub scorer: Option<Arc<dyn EntailmentScorer>>,
}

impl<'a> Analyzer<'a> {
    /// Analyzer over the assets' own model and calibration.
    pub fn new(assets: &'a Assets) -> Result<Self> {
        let model = assets
            .model
            .as_ref()
            .ok_or_else(|| Error::Config("no model loaded; model.json is missing".into()))?;
        Ok(Analyzer {
            assets,
            model,
            calibration: &assets.calibration,
            thresholds: Thresholds::default(),
            scorer: None,
        })
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Result<Self> {
        thresholds.validate()?;
        self.thresholds = thresholds;
        Ok(self)
    }

    pub fn with_scorer(mut self, scorer: Arc<dyn EntailmentScorer>) -> Self {
        self.scorer = Some(scorer);
        self
    }

    pub fn analyze(&self, input: &AdvisorInput) -> Result<GapReport> {
        let prompt = match input {
            AdvisorInput::Fields(f) => fields_to_prompt(f)?,
            AdvisorInput::Raw(r) if blank(r) => {
                return Err(Error::EmptyInput("prompt is empty".into()))
            }
            AdvisorInput::Raw(r) => r.clone(),
        };
        let extraction = extract_features(
            &[prompt.as_str()],
            Scope::FirstPromptOnly,
            self.assets,
            self.scorer.as_deref(),
        )?;
        let v = extraction.vector;
        let scaled = self.model.scale_vector(&v, None)?;
        let attributions = self.model.attribute(&scaled)?;
        let scores = category_scores(&v, self.calibration)?;
        let prose = extract_segments(&prompt, &self.assets.error_patterns).prose;
        let shift = topic_shift(&split_sentences(&prose, &self.assets.lexicons), &self.assets.lexicons);
        let flags = detect_gaps(&scores, &v, self.calibration, &self.thresholds, shift)?;
        let suggestions = generate_suggestions(&flags, &v, self.calibration, self.model)?;
        Ok(GapReport {
            scores,
            probability_effective: attributions.probability,
            flags,
            attributions,
            suggestions,
            composed_prompt: prompt,
            features: v,
            diagnostics: extraction.diagnostics,
        })
    }
}

/// Analyse with the assets' model, calibration, and default thresholds.
pub fn analyze(input: &AdvisorInput, assets: &Assets) -> Result<GapReport> {
    Analyzer::new(assets)?.analyze(input)
}
