use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{BackendConfig, BackendError, BackendKind, ChatBackend, ChatMessage, Role};
use super::mock::{MockBackend, MockMode, CASE_BEGIN, CASE_END};
use super::parse::{parse_response, ModelRecommendation};
use super::prompts::PromptSet;
use super::remote::{probe_endpoint, RemoteBackend};
use super::LlmError;
use crate::casegen::RenderedCase;
use crate::rules::{render_rule_prompt, RuleId, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogRole {
    System,
    User,
    Assistant,
    /// A failed exchange; kept in the transcript but never sent to the model.
    Error,
}

impl LogRole {
    fn chat_role(self) -> Option<Role> {
        match self {
            LogRole::System => Some(Role::System),
            LogRole::User => Some(Role::User),
            LogRole::Assistant => Some(Role::Assistant),
            LogRole::Error => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub session_id: String,
    pub seq: u64,
    pub role: LogRole,
    pub content: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConfirmationStatus {
    Confirmed,
    Unconfirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleReceipt {
    pub rule_id: RuleId,
    pub status: ConfirmationStatus,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadReceipt {
    pub session_id: String,
    pub entries: Vec<RuleReceipt>,
}

impl LoadReceipt {
    pub fn all_confirmed(&self) -> bool {
        self.entries.iter().all(|e| e.status == ConfirmationStatus::Confirmed)
    }
}

/// A model's answer for one case, as parsed from its reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub case_id: u32,
    pub recommendation: ModelRecommendation,
    pub cited_rules: BTreeSet<RuleId>,
    #[serde(default)]
    pub unknown_citations: BTreeSet<String>,
    pub explanation_text: String,
    pub raw_response: String,
}

/// One conversation under one session id. Exchanges are strictly sequential.
pub struct Session {
    session_id: String,
    system_role_text: String,
    log: Vec<TranscriptEntry>,
    backend: Box<dyn ChatBackend>,
    rule_id_map: BTreeMap<RuleId, ConfirmationStatus>,
    loaded: Option<RuleSet>,
    prompts: PromptSet,
    max_retries: u32,
    fresh_per_case: bool,
    /// Log length once loading finished; the shared prefix for fresh-per-case queries.
    loaded_prefix: usize,
    backend_calls: usize,
}

/// Build the backend named by `cfg` and open a session on it.
pub fn start_session(cfg: &BackendConfig, prompts: &PromptSet) -> Result<Session, LlmError> {
    cfg.validate().map_err(LlmError::InvalidConfig)?;
    let backend: Box<dyn ChatBackend> = match cfg.kind {
        BackendKind::MockPerfect => Box::new(MockBackend::new(MockMode::Perfect)),
        BackendKind::MockNoisy => Box::new(MockBackend::new(MockMode::Noisy(
            cfg.noise_profile.clone().unwrap_or_default(),
        ))),
        BackendKind::Remote => {
            let key = cfg.api_key.as_deref().ok_or(LlmError::MissingCredential)?;
            let probe_timeout = Duration::from_secs_f64(cfg.timeout_s.min(10.0));
            probe_endpoint(&cfg.endpoint_url, probe_timeout).map_err(LlmError::BackendUnreachable)?;
            Box::new(RemoteBackend::new(
                &cfg.endpoint_url,
                &cfg.model_name,
                cfg.temperature,
                cfg.timeout_s,
                key,
            ))
        }
    };
    Ok(Session::with_backend(backend, prompts.clone(), cfg.max_retries))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn confirmed(reply: &str, rule_id: RuleId) -> bool {
    let want = format!("CONFIRMED {rule_id}");
    reply.split_whitespace().collect::<Vec<_>>().windows(2).any(|w| {
        let joined = format!("{} {}", w[0], w[1].trim_end_matches(|c: char| !c.is_ascii_alphanumeric()));
        joined.eq_ignore_ascii_case(&want)
    })
}

impl Session {
    pub fn with_backend(backend: Box<dyn ChatBackend>, prompts: PromptSet, max_retries: u32) -> Self {
        let session_id = uuid::Uuid::new_v4().to_string();
        let mut s = Self {
            session_id,
            system_role_text: prompts.system_role.clone(),
            log: Vec::new(),
            backend,
            rule_id_map: BTreeMap::new(),
            loaded: None,
            prompts,
            max_retries,
            fresh_per_case: false,
            loaded_prefix: 0,
            backend_calls: 0,
        };
        let text = s.system_role_text.clone();
        s.push(LogRole::System, text);
        s
    }

    pub fn set_fresh_per_case(&mut self, fresh: bool) {
        self.fresh_per_case = fresh;
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn system_role_text(&self) -> &str {
        &self.system_role_text
    }

    pub fn message_log(&self) -> &[TranscriptEntry] {
        &self.log
    }

    pub fn rule_id_map(&self) -> &BTreeMap<RuleId, ConfirmationStatus> {
        &self.rule_id_map
    }

    pub fn backend_calls(&self) -> usize {
        self.backend_calls
    }

    pub fn rules_loaded(&self) -> bool {
        self.loaded.is_some()
    }

    fn push(&mut self, role: LogRole, content: String) {
        let seq = self.log.len() as u64;
        self.log.push(TranscriptEntry {
            session_id: self.session_id.clone(),
            seq,
            role,
            content,
            timestamp: now(),
        });
    }

    fn context(entries: &[TranscriptEntry]) -> Vec<ChatMessage> {
        entries
            .iter()
            .filter_map(|e| e.role.chat_role().map(|r| ChatMessage::new(r, e.content.clone())))
            .collect()
    }

    /// Send `prompt`, log both sides, and return the reply.
    fn exchange(&mut self, prompt: &str, fresh: bool) -> Result<String, BackendError> {
        self.push(LogRole::User, prompt.to_string());
        let messages = if fresh {
            let mut m = Self::context(&self.log[..self.loaded_prefix]);
            m.push(ChatMessage::new(Role::User, prompt));
            m
        } else {
            Self::context(&self.log)
        };
        self.backend_calls += 1;
        match self.backend.complete(&messages) {
            Ok(reply) => {
                self.push(LogRole::Assistant, reply.clone());
                Ok(reply)
            }
            Err(e) => {
                self.push(LogRole::Error, e.to_string());
                Err(e)
            }
        }
    }

    pub fn rule_prompt(&self, rule: &crate::rules::Rule) -> String {
        let instruction = self.prompts.confirm_instruction.replace("{rule_id}", &rule.rule_id.to_string());
        format!("{}\n{}", render_rule_prompt(rule), instruction)
    }

    pub fn case_prompt(&self, rc: &RenderedCase) -> String {
        format!(
            "{CASE_BEGIN} {id} ---\n{text}\n{CASE_END} {id} ---\n\n{clause}",
            id = rc.case_id,
            text = rc.text,
            clause = self.prompts.enforcement_clause
        )
    }

    /// Feed rules one at a time, each acknowledged before the next is sent.
    pub fn load_rules(&mut self, rs: &RuleSet) -> Result<LoadReceipt, LlmError> {
        if rs.is_empty() {
            return Err(LlmError::EmptyRuleSet);
        }
        self.backend.attach_rules(rs);
        let mut entries = Vec::with_capacity(rs.len());
        for rule in rs.rules() {
            let prompt = self.rule_prompt(rule);
            let mut attempts = 0;
            let mut outcome: Result<(), LlmError> = Ok(());
            let mut ok = false;
            while attempts <= self.max_retries {
                attempts += 1;
                match self.exchange(&prompt, false) {
                    Ok(reply) if confirmed(&reply, rule.rule_id) => {
                        ok = true;
                        break;
                    }
                    Ok(reply) => {
                        outcome = Err(LlmError::ConfirmationFailed {
                            rule_id: rule.rule_id.to_string(),
                            raw_reply: reply,
                        })
                    }
                    Err(e) => outcome = Err(LlmError::Backend(e)),
                }
            }
            let status = if ok { ConfirmationStatus::Confirmed } else { ConfirmationStatus::Unconfirmed };
            self.rule_id_map.insert(rule.rule_id, status);
            entries.push(RuleReceipt { rule_id: rule.rule_id, status, attempts });
            if !ok {
                return Err(outcome.expect_err("unconfirmed rule carries an error"));
            }
        }
        self.loaded = Some(rs.clone());
        self.loaded_prefix = self.log.len();
        Ok(LoadReceipt { session_id: self.session_id.clone(), entries })
    }

    /// Ask for a recommendation with enforced rule citations and explanation.
    pub fn query_case(&mut self, rc: &RenderedCase) -> Result<LlmVerdict, LlmError> {
        let known: BTreeSet<RuleId> = match &self.loaded {
            Some(rs) => rs.ids().into_iter().collect(),
            None => return Err(LlmError::RulesNotLoaded),
        };
        let prompt = self.case_prompt(rc);
        let mut attempts = 0;
        let raw = loop {
            attempts += 1;
            match self.exchange(&prompt, self.fresh_per_case) {
                Ok(reply) => break reply,
                Err(e) if attempts > self.max_retries => {
                    return Err(match e {
                        BackendError::Timeout(detail) => LlmError::Timeout(detail),
                        other => LlmError::Backend(other),
                    })
                }
                Err(_) => continue,
            }
        };
        let parsed = parse_response(&raw, &known);
        Ok(LlmVerdict {
            case_id: rc.case_id,
            recommendation: parsed.recommendation,
            cited_rules: parsed.cited_rules,
            unknown_citations: parsed.unknown_citations,
            explanation_text: parsed.explanation,
            raw_response: raw,
        })
    }

    pub fn write_transcript<W: Write>(&self, mut out: W) -> io::Result<()> {
        for entry in &self.log {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confirmation_matching() {
        let r3: RuleId = "R3".parse().unwrap();
        assert!(confirmed("CONFIRMED R3", r3));
        assert!(confirmed("Sure. confirmed R3.", r3));
        assert!(!confirmed("CONFIRMED R30", r3));
        assert!(!confirmed("OK", r3));
        assert!(!confirmed("R3 CONFIRMED", r3));
    }
}
