use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EvalError;
use crate::llmlink::{BackendKind, LlmError, NoiseSchedule, PromptSet};
use crate::rules::RuleSet;

/// Everything that determines a run's outputs, minus the clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub rules_path: String,
    pub cases_path: Option<String>,
    pub seed: Option<u64>,
    pub count: Option<u32>,
    pub template_seed: u64,
    pub mode: String,
    pub prompts_dir: Option<String>,
    pub backend_kind: BackendKind,
    pub model: String,
    pub endpoint: Option<String>,
    pub temperature: f64,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub fresh_per_case: bool,
    pub noise_schedule: Option<NoiseSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ConfigSnapshot,
    pub rule_pack_version: String,
    pub rule_pack_checksum: String,
    pub prompt_version: String,
    pub prompt_hashes: BTreeMap<String, String>,
    /// SHA-256 over config, rule checksum and prompt hashes.
    pub config_hash: String,
    pub started_at: String,
    pub finished_at: Option<String>,
}

impl RunManifest {
    pub fn short_hash(&self) -> &str {
        &self.config_hash[..12]
    }
}

/// Prompt templates a snapshot refers to: its directory, or the built-in set.
pub fn snapshot_prompts(snapshot: &ConfigSnapshot) -> Result<PromptSet, EvalError> {
    match &snapshot.prompts_dir {
        Some(dir) => PromptSet::load_dir(Path::new(dir)).map_err(|e| match e {
            LlmError::MissingPromptFile(p) => EvalError::MissingPromptFile(p),
            other => EvalError::Encoding(other.to_string()),
        }),
        None => Ok(PromptSet::builtin()),
    }
}

pub fn run_manifest(
    snapshot: &ConfigSnapshot,
    rules: &RuleSet,
    started_at: &str,
) -> Result<RunManifest, EvalError> {
    let prompts = snapshot_prompts(snapshot)?;
    let prompt_hashes = prompts.hashes();
    let hash_input = serde_json::json!({
        "config": snapshot,
        "rule_pack_checksum": rules.checksum(),
        "prompt_hashes": prompt_hashes,
    });
    let config_hash = hex::encode(Sha256::digest(hash_input.to_string().as_bytes()));
    Ok(RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: snapshot.clone(),
        rule_pack_version: rules.version().to_string(),
        rule_pack_checksum: rules.checksum().to_string(),
        prompt_version: prompts.version,
        prompt_hashes,
        config_hash,
        started_at: started_at.to_string(),
        finished_at: None,
    })
}
