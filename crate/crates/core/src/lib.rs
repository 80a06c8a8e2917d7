//! Prompt knowledge-gap analysis.
//!
//! The crate measures how much context, specificity, and clarity a developer
//! prompt carries before it is sent to an LLM. It is organised bottom-up:
//!
//! - [`code`] splits a prompt into prose, code snippets, error logs and URLs.
//! - [`text`] computes prose metrics (counts, readability, ambiguity).
//! - [`features`] assembles the 24 canonical metrics into a [`FeatureVector`],
//!   and [`vif`]/[`scaler`] prepare feature matrices for modelling.
//! - [`model`] trains and applies the L1-regularised logistic gap classifier.
//! - [`advisor`] turns a draft prompt into category scores, gap flags, and
//!   suggestions.
//! - [`corpus`] and [`stats`] load conversation corpora and summarise them.

pub mod advisor;
pub mod assets;
pub mod code;
pub mod corpus;
pub mod error;
pub mod features;
pub mod lexicon;
pub mod model;
pub mod scaler;
pub mod stats;
pub mod text;
pub mod vif;

pub use advisor::{analyze, AdvisorInput, Analyzer, GapReport, TemplateFields};
pub use assets::Assets;
pub use error::{Error, Result};
pub use features::{Feature, FeatureVector, Scope};
pub use model::ModelParams;
