//! Scoring of model verdicts against the oracle, per-arm metrics, reports and
//! run manifests.

mod manifest;
mod report;
mod score;

use std::path::PathBuf;

use thiserror::Error;

pub use manifest::{run_manifest, snapshot_prompts, ConfigSnapshot, RunManifest};
pub use report::{emit_report, parse_csv_report, parse_json_report, JsonReport, ReportFormat};
pub use score::{accuracy_percent, aggregate, score_case, summarize, EvaluationRecord, MetricsSummary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("oracle verdict for case {oracle} paired with model verdict for case {llm}")]
    CaseIdMismatch { oracle: u32, llm: u32 },
    #[error("unsupported report format {0:?} (markdown, csv, json)")]
    UnsupportedFormat(String),
    #[error("no summaries to report")]
    NoSummaries,
    #[error("missing prompt file {}", .0.display())]
    MissingPromptFile(PathBuf),
    #[error("report encoding: {0}")]
    Encoding(String),
}
