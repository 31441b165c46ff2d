//! Versioned JSON report envelope and the per-command payloads.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use shapnet::axioms::{AxiomFindings, DominanceFinding, SummandFinding};
use shapnet::faithfulness::{FaithfulnessScope, Violation};
use shapnet::prevalence::PrevalenceReport;
use shapnet::selection::Comparison;
use shapnet::{RelevanceClass, Selection};

use crate::error::CliError;
use crate::model::ModelKind;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Model or config path as given on the command line.
    pub input: String,
    pub seed: Option<u64>,
    pub generated_at_unix: u64,
    pub payload: Payload,
}

impl ReportEnvelope {
    /// Stamps `payload` with the current version and time. `SOURCE_DATE_EPOCH`,
    /// when set, replaces the wall clock.
    pub fn new(command: &str, input: &str, seed: Option<u64>, payload: Payload) -> Self {
        let generated_at_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        ReportEnvelope {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            input: input.to_owned(),
            seed,
            generated_at_unix,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            field: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Shapley(ShapleyPayload),
    Structure(StructurePayload),
    Selection(SelectionPayload),
    Theorems(TheoremsPayload),
    Prevalence(PrevalenceReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    RSquared,
    Accuracy,
    Information,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerValue {
    pub name: String,
    pub value: f64,
    pub standard_error: Option<f64>,
    /// 1 for the largest value.
    pub rank: usize,
    pub relevance: RelevanceClass,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyPayload {
    pub model_kind: ModelKind,
    pub target: String,
    pub game: GameKind,
    pub method: Method,
    /// In model order.
    pub players: Vec<PlayerValue>,
    pub baseline: f64,
    pub grand_value: f64,
    pub efficiency_residual: f64,
    /// Marginal contributions evaluated.
    pub summand_count: u64,
    pub samples: Option<usize>,
    pub stratified_on: Vec<String>,
    pub strata: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceEntry {
    pub name: String,
    pub class: RelevanceClass,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum StructurePayload {
    MarkovBoundary {
        target: String,
        markov_boundary: Vec<String>,
        parents: Vec<String>,
        children: Vec<String>,
        spouses: Vec<String>,
    },
    Dsep {
        x: String,
        y: String,
        given: Vec<String>,
        d_separated: bool,
    },
    Relevance {
        target: String,
        variables: Vec<RelevanceEntry>,
    },
    Faithfulness {
        scope: FaithfulnessScope,
        tol: f64,
        faithful: bool,
        violations: Vec<Violation>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPayload {
    pub game: GameKind,
    pub k: Option<usize>,
    pub result: Selection,
    pub comparison: Comparison<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremsPayload {
    pub game: GameKind,
    pub tol: f64,
    /// Target-relative faithfulness of the model; `None` when too large to check.
    pub faithful: Option<bool>,
    pub summand_structure: Vec<SummandFinding>,
    pub dominance: Vec<DominanceFinding>,
    pub axioms: AxiomFindings,
    pub all_passed: bool,
}
