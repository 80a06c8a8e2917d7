//! Bundled and on-disk analysis assets.
//!
//! Layout of an asset directory:
//!
//! ```text
//! lexicons/{dictionary,se_terms,subordinators,constraints,pronouns,
//!           pos_nouns,pos_verbs,pos_modifiers,abbrev,stopwords}.txt
//! patterns/errors.txt
//! calibration.json
//! model.json          (optional; without it the analyzer is degraded)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::{Regex, RegexSet};
use sha2::{Digest, Sha256};

use crate::advisor::Calibration;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::model::ModelParams;

/// Name and bundled contents of every lexicon file.
const LEXICON_FILES: [(&str, &str); 10] = [
    ("dictionary", include_str!("../assets/lexicons/dictionary.txt")),
    ("se_terms", include_str!("../assets/lexicons/se_terms.txt")),
    ("subordinators", include_str!("../assets/lexicons/subordinators.txt")),
    ("constraints", include_str!("../assets/lexicons/constraints.txt")),
    ("pronouns", include_str!("../assets/lexicons/pronouns.txt")),
    ("pos_nouns", include_str!("../assets/lexicons/pos_nouns.txt")),
    ("pos_verbs", include_str!("../assets/lexicons/pos_verbs.txt")),
    ("pos_modifiers", include_str!("../assets/lexicons/pos_modifiers.txt")),
    ("abbrev", include_str!("../assets/lexicons/abbrev.txt")),
    ("stopwords", include_str!("../assets/lexicons/stopwords.txt")),
];
const ERRORS_FILE: &str = include_str!("../assets/patterns/errors.txt");
const CALIBRATION_FILE: &str = include_str!("../assets/calibration.json");
const MODEL_FILE: &str = include_str!("../assets/model.json");

#[derive(Debug, Clone)]
pub struct Lexicons {
    pub dictionary: Lexicon,
    pub se_terms: Lexicon,
    pub subordinators: Lexicon,
    pub constraints: Lexicon,
    pub pronouns: Lexicon,
    pub nouns: Lexicon,
    pub verbs: Lexicon,
    pub modifiers: Lexicon,
    pub abbrev: Lexicon,
    pub stopwords: Lexicon,
}

impl Lexicons {
    fn from_sources(mut get: impl FnMut(&str) -> Result<String>) -> Result<Self> {
        let mut load = |name: &str| get(name).map(|text| Lexicon::parse(&text));
        Ok(Lexicons {
            dictionary: load("dictionary")?,
            se_terms: load("se_terms")?,
            subordinators: load("subordinators")?,
            constraints: load("constraints")?,
            pronouns: load("pronouns")?,
            nouns: load("pos_nouns")?,
            verbs: load("pos_verbs")?,
            modifiers: load("pos_modifiers")?,
            abbrev: load("abbrev")?,
            stopwords: load("stopwords")?,
        })
    }

    pub fn bundled() -> &'static Lexicons {
        &Assets::bundled().lexicons
    }
}

#[derive(Debug, Clone)]
pub struct ErrorRule {
    pub id: usize,
    pub source: String,
    pub regex: Regex,
}

/// Line-level error detectors loaded from `patterns/errors.txt`.
#[derive(Debug, Clone)]
pub struct ErrorPatterns {
    rules: Vec<ErrorRule>,
    set: RegexSet,
}

impl ErrorPatterns {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for line in text.lines() {
            let trimmed = line.trim_end();
            if trimmed.trim_start().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let regex = Regex::new(trimmed)
                .map_err(|e| Error::asset("patterns/errors.txt", e.to_string()))?;
            rules.push(ErrorRule {
                id: rules.len(),
                source: trimmed.to_owned(),
                regex,
            });
        }
        if rules.is_empty() {
            return Err(Error::asset("patterns/errors.txt", "no rules"));
        }
        let set = RegexSet::new(rules.iter().map(|r| r.source.as_str()))
            .map_err(|e| Error::asset("patterns/errors.txt", e.to_string()))?;
        Ok(ErrorPatterns { rules, set })
    }

    /// Id of the first rule matching `line`.
    pub fn first_match(&self, line: &str) -> Option<usize> {
        self.set.matches(line).iter().next()
    }

    pub fn rules(&self) -> &[ErrorRule] {
        &self.rules
    }
}

#[derive(Debug, Clone)]
pub struct Assets {
    pub lexicons: Lexicons,
    pub error_patterns: ErrorPatterns,
    pub calibration: Calibration,
    pub model: Option<ModelParams>,
    fingerprints: BTreeMap<String, String>,
    missing: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Assets {
    /// Assets compiled into the binary.
    pub fn bundled() -> &'static Assets {
        static BUNDLED: OnceLock<Assets> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            Assets::from_loader(|rel| {
                if let Some(name) = rel
                    .strip_prefix("lexicons/")
                    .and_then(|n| n.strip_suffix(".txt"))
                {
                    if let Some((_, text)) = LEXICON_FILES.iter().find(|(n, _)| *n == name) {
                        return Ok(Some(text.to_string()));
                    }
                }
                Ok(match rel {
                    "patterns/errors.txt" => Some(ERRORS_FILE.to_owned()),
                    "calibration.json" => Some(CALIBRATION_FILE.to_owned()),
                    "model.json" => Some(MODEL_FILE.to_owned()),
                    _ => None,
                })
            })
            .expect("bundled assets are valid")
        })
    }

    /// Load every asset from `dir`. A missing `model.json` is tolerated and
    /// reported through [`Assets::missing`]; anything else missing is an error.
    pub fn load_dir(dir: &Path) -> Result<Assets> {
        Assets::from_loader(|rel| {
            let path = dir.join(rel);
            match fs::read_to_string(&path) {
                Ok(text) => Ok(Some(text)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(Error::asset(rel, e.to_string())),
            }
        })
    }

    fn from_loader(mut read: impl FnMut(&str) -> Result<Option<String>>) -> Result<Assets> {
        let mut fingerprints = BTreeMap::new();
        let mut fetch = |rel: &str| -> Result<Option<String>> {
            let text = read(rel)?;
            if let Some(text) = &text {
                fingerprints.insert(rel.to_owned(), sha256_hex(text.as_bytes()));
            }
            Ok(text)
        };
        let mut required = |rel: &str| -> Result<String> {
            fetch(rel)?.ok_or_else(|| Error::asset(rel, "missing"))
        };

        let lexicons = Lexicons::from_sources(|name| required(&format!("lexicons/{name}.txt")))?;
        let error_patterns = ErrorPatterns::parse(&required("patterns/errors.txt")?)?;
        let calibration = Calibration::from_json(&required("calibration.json")?)
            .map_err(|e| Error::asset("calibration.json", e.to_string()))?;
        let mut missing = Vec::new();
        let model = match fetch("model.json")? {
            Some(text) => Some(
                ModelParams::from_json(&text)
                    .map_err(|e| Error::asset("model.json", e.to_string()))?,
            ),
            None => {
                missing.push("model.json".to_owned());
                None
            }
        };

        Ok(Assets {
            lexicons,
            error_patterns,
            calibration,
            model,
            fingerprints,
            missing,
        })
    }

    /// Per-file SHA-256 digests, keyed by relative path.
    pub fn fingerprints(&self) -> &BTreeMap<String, String> {
        &self.fingerprints
    }

    /// Digest over every non-model asset.
    pub fn asset_fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, digest) in self.fingerprints.iter().filter(|(n, _)| *n != "model.json") {
            hasher.update(name.as_bytes());
            hasher.update(b":");
            hasher.update(digest.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn model_fingerprint(&self) -> Option<&str> {
        self.fingerprints.get("model.json").map(String::as_str)
    }

    /// Relative paths of optional assets that were not found.
    pub fn missing(&self) -> &[String] {
        &self.missing
    }

    /// Write the bundled asset files under `dir`.
    pub fn write_bundled(dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("lexicons"))?;
        fs::create_dir_all(dir.join("patterns"))?;
        for (name, text) in LEXICON_FILES {
            fs::write(dir.join(format!("lexicons/{name}.txt")), text)?;
        }
        fs::write(dir.join("patterns/errors.txt"), ERRORS_FILE)?;
        fs::write(dir.join("calibration.json"), CALIBRATION_FILE)?;
        fs::write(dir.join("model.json"), MODEL_FILE)?;
        Ok(())
    }
}
