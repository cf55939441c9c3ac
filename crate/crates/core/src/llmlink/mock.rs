//! Offline backends.
//!
//! [`MockBackend`] answers like an ideal expert system shell by re-reading the
//! case from the prompt and delegating to the oracle; the noisy variant then
//! corrupts chosen cases so observed error counts can be replayed.
//! [`ScriptedBackend`] returns canned replies.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::backend::{BackendError, BackendKind, ChatBackend, ChatMessage, Role};
use crate::casegen::{parse_structured, UseCase};
use crate::oracle::{condition_holds, evaluate};
use crate::rules::{Gender, Recommendation, RiskFactor, RuleId, RuleSet, MAX_CASE_AGE, MIN_CASE_AGE};

/// Case ids whose replies get corrupted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    /// Recommendation replaced by a different one; citations untouched.
    #[serde(default)]
    pub wrong_recommendation_indices: BTreeSet<u32>,
    /// One loaded but non-triggered rule added to the citations.
    #[serde(default)]
    pub extra_rule_indices: BTreeSet<u32>,
    /// Citations emptied; recommendation kept.
    #[serde(default)]
    pub zero_rule_indices: BTreeSet<u32>,
}

impl NoiseProfile {
    pub fn all_indices(&self) -> BTreeSet<u32> {
        self.wrong_recommendation_indices
            .iter()
            .chain(&self.extra_rule_indices)
            .chain(&self.zero_rule_indices)
            .copied()
            .collect()
    }

    /// Every index must name one of `case_ids`.
    pub fn check_range(&self, case_ids: &BTreeSet<u32>) -> Result<(), String> {
        match self.all_indices().into_iter().find(|i| !case_ids.contains(i)) {
            Some(i) => Err(format!("noise profile index {i} is not a case id of this run")),
            None => Ok(()),
        }
    }
}

/// Noise file contents: one profile for every arm, or one per arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSchedule {
    Shared(NoiseProfile),
    PerArm(PerArmNoise),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerArmNoise {
    #[serde(default)]
    pub structured: NoiseProfile,
    #[serde(default)]
    pub unstructured: NoiseProfile,
}

impl NoiseSchedule {
    pub fn for_arm(&self, mode: crate::casegen::RenderMode) -> &NoiseProfile {
        use crate::casegen::RenderMode;
        match (self, mode) {
            (NoiseSchedule::Shared(p), _) => p,
            (NoiseSchedule::PerArm(p), RenderMode::Structured) => &p.structured,
            (NoiseSchedule::PerArm(p), RenderMode::Unstructured) => &p.unstructured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockMode {
    Perfect,
    Noisy(NoiseProfile),
}

pub const CASE_BEGIN: &str = "--- BEGIN USE CASE";
pub const CASE_END: &str = "--- END USE CASE";

fn rule_load_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^Rule (R\d+):").expect("regex"))
}

fn case_block_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?s)--- BEGIN USE CASE (\d+) ---\n(.*?)\n--- END USE CASE (\d+) ---").expect("regex")
    })
}

/// Best-effort fact extraction from a narrative: first gender word, first
/// standalone integer in the case age range, and every factor label present.
pub fn extract_case_from_narrative(text: &str, case_id: u32) -> UseCase {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split(|c: char| !c.is_ascii_alphabetic()).filter(|w| !w.is_empty()).collect();
    let gender = words
        .iter()
        .find_map(|w| match *w {
            "woman" | "female" | "she" | "her" | "lady" | "girl" => Some(Gender::Female),
            "man" | "male" | "he" | "his" | "him" | "gentleman" | "boy" => Some(Gender::Male),
            _ => None,
        })
        .unwrap_or(Gender::Female);

    let mut age = None;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let glued = start > 0 && bytes[start - 1].is_ascii_alphabetic();
            if !glued {
                if let Ok(n) = text[start..i].parse::<u32>() {
                    if (MIN_CASE_AGE..=MAX_CASE_AGE).contains(&n) {
                        age = Some(n);
                        break;
                    }
                }
            }
        } else {
            i += 1;
        }
    }

    let risk_factors = RiskFactor::ALL
        .into_iter()
        .filter(|rf| lower.contains(&rf.display_name().to_lowercase()))
        .collect();

    UseCase {
        case_id,
        gender,
        age: age.unwrap_or(MIN_CASE_AGE),
        risk_factors,
        history_text: text.to_string(),
    }
}

fn loaded_subset(messages: &[ChatMessage], rules: &RuleSet) -> RuleSet {
    let mentioned: BTreeSet<RuleId> = messages
        .iter()
        .filter(|m| m.role == Role::User)
        .flat_map(|m| rule_load_regex().captures_iter(&m.content).filter_map(|c| c[1].parse().ok()).collect::<Vec<_>>())
        .collect();
    let rules = rules.rules().iter().filter(|r| mentioned.contains(&r.rule_id)).cloned().collect();
    RuleSet::new("mock", rules).expect("subset of a valid rule set")
}

fn canonical_block(rec: Recommendation, cited: &[RuleId], explanation: &str) -> String {
    let ids = if cited.is_empty() {
        "NONE".to_string()
    } else {
        cited.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
    };
    format!("RECOMMENDATION: {rec}\nTRIGGERED_RULES: {ids}\nEXPLANATION: {explanation}")
}

fn explain(case: &UseCase, rules: &RuleSet, triggered: &[RuleId]) -> String {
    if triggered.is_empty() {
        return "No stored rule has all of its conditions satisfied by this person, so a consultation with a physician is advised.".into();
    }
    triggered
        .iter()
        .filter_map(|id| rules.get(*id))
        .map(|rule| {
            let held: Vec<String> = rule
                .conditions
                .iter()
                .filter(|c| condition_holds(c, case))
                .map(|c| c.to_string())
                .collect();
            format!(
                "Rule {} applies because {} hold, so it recommends {}.",
                rule.rule_id,
                held.join(" and "),
                rule.recommendation.phrase()
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn wrong_recommendation(correct: Recommendation) -> Recommendation {
    let all = Recommendation::ALL;
    let idx = all.iter().position(|r| *r == correct).expect("member of ALL");
    all[(idx + 1) % all.len()]
}

/// Reply an ideal (or deliberately corrupted) shell would give to the last
/// user message in `messages`.
pub fn mock_respond(messages: &[ChatMessage], mode: &MockMode, loaded_rules: &RuleSet) -> String {
    let Some(last) = messages.iter().rev().find(|m| m.role == Role::User) else {
        return "READY".into();
    };

    if let Some(cap) = case_block_regex().captures(&last.content) {
        let case_id: u32 = cap[1].parse().unwrap_or(0);
        let body = cap[2].trim();
        let case = if body.starts_with("gender:") {
            parse_structured(body, case_id.max(1))
                .unwrap_or_else(|_| extract_case_from_narrative(body, case_id))
        } else {
            extract_case_from_narrative(body, case_id)
        };
        let rules = loaded_subset(messages, loaded_rules);
        let verdict = evaluate(&case, &rules);
        let mut rec = verdict.recommendation;
        let mut cited = verdict.triggered.clone();
        let explanation = explain(&case, &rules, &verdict.triggered);

        if let MockMode::Noisy(noise) = mode {
            if noise.wrong_recommendation_indices.contains(&case_id) {
                rec = wrong_recommendation(rec);
            }
            if noise.extra_rule_indices.contains(&case_id) {
                if let Some(extra) = rules.ids().into_iter().find(|id| !cited.contains(id)) {
                    cited.push(extra);
                }
            }
            if noise.zero_rule_indices.contains(&case_id) {
                return format!("RECOMMENDATION: {rec}\nTRIGGERED_RULES:\nEXPLANATION: {explanation}");
            }
        }
        return canonical_block(rec, &cited, &explanation);
    }

    if let Some(cap) = rule_load_regex().captures(&last.content) {
        return format!("CONFIRMED {}", &cap[1]);
    }
    "READY".into()
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    mode: MockMode,
    rules: RuleSet,
}

impl MockBackend {
    pub fn new(mode: MockMode) -> Self {
        Self { mode, rules: RuleSet::new("empty", vec![]).expect("empty set is valid") }
    }

    pub fn kind(&self) -> BackendKind {
        match self.mode {
            MockMode::Perfect => BackendKind::MockPerfect,
            MockMode::Noisy(_) => BackendKind::MockNoisy,
        }
    }
}

impl ChatBackend for MockBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        Ok(mock_respond(messages, &self.mode, &self.rules))
    }

    fn attach_rules(&mut self, rules: &RuleSet) {
        self.rules = rules.clone();
    }

    fn describe(&self) -> String {
        self.kind().to_string()
    }
}

/// Canned replies served in order, cycling when exhausted. `Err` entries
/// simulate transport failures.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    replies: Vec<Result<String, BackendError>>,
    next: usize,
    pub calls: usize,
    pub seen: Vec<Vec<ChatMessage>>,
}

impl ScriptedBackend {
    pub fn new(replies: Vec<Result<String, BackendError>>) -> Self {
        assert!(!replies.is_empty(), "ScriptedBackend needs at least one reply");
        Self { replies, next: 0, calls: 0, seen: Vec::new() }
    }

    pub fn fixed(reply: impl Into<String>) -> Self {
        Self::new(vec![Ok(reply.into())])
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let reply = self.replies[self.next % self.replies.len()].clone();
        self.next += 1;
        self.calls += 1;
        self.seen.push(messages.to_vec());
        reply
    }

    fn describe(&self) -> String {
        "scripted".into()
    }
}
