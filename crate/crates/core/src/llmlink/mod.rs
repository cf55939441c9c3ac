//! Two-phase chat protocol: rules are loaded one by one with per-rule
//! confirmation, then each case is queried with an enforced reply block
//! naming the recommendation, the triggered rules and an explanation.

mod backend;
mod mock;
mod parse;
mod prompts;
mod remote;
mod session;

use std::path::PathBuf;

use thiserror::Error;

pub use backend::{
    BackendConfig, BackendError, BackendKind, ChatBackend, ChatMessage, Role, API_KEY_ENV,
    DEFAULT_ENDPOINT, DEFAULT_MAX_RETRIES, DEFAULT_MODEL, DEFAULT_TIMEOUT_S,
};
pub use mock::{
    extract_case_from_narrative, mock_respond, MockBackend, MockMode, NoiseProfile, NoiseSchedule, PerArmNoise,
    ScriptedBackend, CASE_BEGIN, CASE_END,
};
pub use parse::{extract_citations, match_recommendation, parse_response, ModelRecommendation, ParsedResponse};
pub use prompts::{
    PromptSet, BUILTIN_PROMPT_VERSION, CONFIRM_INSTRUCTION_FILE, ENFORCEMENT_CLAUSE_FILE, PROMPT_FILES,
    SYSTEM_ROLE_FILE,
};
pub use remote::{extract_content, probe_endpoint, request_body, RemoteBackend};
pub use session::{
    start_session, ConfirmationStatus, LlmVerdict, LoadReceipt, LogRole, RuleReceipt, Session,
    TranscriptEntry,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("remote backend requires the {API_KEY_ENV} environment variable")]
    MissingCredential,
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("rule set is empty")]
    EmptyRuleSet,
    #[error("rule {rule_id} was not confirmed; last reply: {raw_reply:?}")]
    ConfirmationFailed { rule_id: String, raw_reply: String },
    #[error("backend error: {0}")]
    Backend(BackendError),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("cases cannot be queried before every rule is confirmed")]
    RulesNotLoaded,
    #[error("missing prompt file {}", .0.display())]
    MissingPromptFile(PathBuf),
}
