use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mock::NoiseProfile;
use crate::rules::RuleSet;

pub const API_KEY_ENV: &str = "SCREENWISE_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_TIMEOUT_S: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// A chat-completions style model. One session drives a backend at a time.
pub trait ChatBackend: Send {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, BackendError>;

    /// Offline backends may need the rule set to fabricate replies; remote
    /// backends only ever see what is in the conversation.
    fn attach_rules(&mut self, _rules: &RuleSet) {}

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Remote,
    MockPerfect,
    MockNoisy,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Remote => "remote",
            BackendKind::MockPerfect => "mock-perfect",
            BackendKind::MockNoisy => "mock-noisy",
        }
    }

    pub fn is_mock(self) -> bool {
        !matches!(self, BackendKind::Remote)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "remote" => Ok(BackendKind::Remote),
            "mock-perfect" => Ok(BackendKind::MockPerfect),
            "mock-noisy" => Ok(BackendKind::MockNoisy),
            other => Err(format!("unknown backend {other:?} (remote, mock-perfect, mock-noisy)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub noise_profile: Option<NoiseProfile>,
    /// Bearer token; remote only.
    pub api_key: Option<String>,
}

impl BackendConfig {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            timeout_s: DEFAULT_TIMEOUT_S,
            max_retries: DEFAULT_MAX_RETRIES,
            noise_profile: None,
            api_key: None,
        }
    }

    pub fn mock_perfect() -> Self {
        Self::new(BackendKind::MockPerfect)
    }

    pub fn mock_noisy(profile: NoiseProfile) -> Self {
        Self { noise_profile: Some(profile), ..Self::new(BackendKind::MockNoisy) }
    }

    pub fn remote(endpoint_url: impl Into<String>) -> Self {
        Self { endpoint_url: endpoint_url.into(), ..Self::new(BackendKind::Remote) }
    }

    /// Fill `api_key` from `SCREENWISE_API_KEY` if it is set and nonempty.
    pub fn with_env_credential(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.trim().is_empty() {
                self.api_key = Some(key);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err(format!("timeout must be positive, got {}", self.timeout_s));
        }
        if self.kind == BackendKind::MockNoisy && self.noise_profile.is_none() {
            return Err("mock-noisy backend needs a noise profile".into());
        }
        Ok(())
    }
}
