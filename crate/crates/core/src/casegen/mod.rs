//! Synthetic use cases: seeded generation, structured and narrative renderings,
//! and the JSON Lines cases file.

mod file;
mod generate;
mod render;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{Gender, RiskFactor, MAX_CASE_AGE, MAX_CASE_FACTORS, MIN_CASE_AGE, MIN_CASE_FACTORS};

pub use file::{read_cases, read_cases_jsonl, write_cases, write_cases_jsonl, CaseRecord};
pub use generate::{generate_cases, GeneratorConfig, DEFAULT_CASE_COUNT};
pub use render::{
    parse_structured, render_structured, render_unstructured, render_unstructured_with,
    TemplatePool, DEFAULT_TEMPLATE_POOL,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CaseError {
    #[error("risk factor registry is empty")]
    EmptyRegistry,
    #[error("case count must be at least 1")]
    ZeroCount,
    #[error("unknown narrative template pool {0:?}")]
    UnknownTemplatePool(String),
    #[error("malformed structured case: {0}")]
    Format(String),
    #[error("case {case_id}: {reason}")]
    Invalid { case_id: u32, reason: String },
    #[error("cases file line {line}: {reason}")]
    File { line: usize, reason: String },
}

/// One synthetic person profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UseCase {
    pub case_id: u32,
    pub gender: Gender,
    pub age: u32,
    pub risk_factors: BTreeSet<RiskFactor>,
    pub history_text: String,
}

impl UseCase {
    pub fn validate(&self) -> Result<(), CaseError> {
        let invalid = |reason: String| CaseError::Invalid { case_id: self.case_id, reason };
        if self.case_id == 0 {
            return Err(invalid("case_id must be positive".into()));
        }
        if !(MIN_CASE_AGE..=MAX_CASE_AGE).contains(&self.age) {
            return Err(invalid(format!(
                "age {} outside [{MIN_CASE_AGE},{MAX_CASE_AGE}]",
                self.age
            )));
        }
        let n = self.risk_factors.len();
        if !(MIN_CASE_FACTORS..=MAX_CASE_FACTORS).contains(&n) {
            return Err(invalid(format!(
                "{n} risk factors, expected {MIN_CASE_FACTORS} to {MAX_CASE_FACTORS}"
            )));
        }
        if self.history_text.trim().is_empty() {
            return Err(invalid("history text is empty".into()));
        }
        if self.history_text.contains('\n') {
            return Err(invalid("history text spans several lines".into()));
        }
        for rf in &self.risk_factors {
            let mentions = self.history_text.matches(rf.display_name()).count();
            if mentions != 1 {
                return Err(invalid(format!(
                    "history mentions {:?} {mentions} times",
                    rf.display_name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    Structured,
    Unstructured,
}

impl RenderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RenderMode::Structured => "structured",
            RenderMode::Unstructured => "unstructured",
        }
    }
}

impl std::fmt::Display for RenderMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedCase {
    pub case_id: u32,
    pub mode: RenderMode,
    pub text: String,
}
