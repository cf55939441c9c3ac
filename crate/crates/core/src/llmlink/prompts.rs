use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::LlmError;

pub const SYSTEM_ROLE_FILE: &str = "system_role.txt";
pub const CONFIRM_INSTRUCTION_FILE: &str = "confirm_instruction.txt";
pub const ENFORCEMENT_CLAUSE_FILE: &str = "enforcement_clause.txt";
pub const PROMPT_FILES: [&str; 3] = [SYSTEM_ROLE_FILE, CONFIRM_INSTRUCTION_FILE, ENFORCEMENT_CLAUSE_FILE];

pub const BUILTIN_PROMPT_VERSION: &str = "v1";

/// The three versioned prompt templates driving the protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub version: String,
    pub system_role: String,
    /// Contains the `{rule_id}` placeholder.
    pub confirm_instruction: String,
    pub enforcement_clause: String,
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self {
            version: BUILTIN_PROMPT_VERSION.to_string(),
            system_role: include_str!("../../assets/prompts/v1/system_role.txt").trim_end().to_string(),
            confirm_instruction: include_str!("../../assets/prompts/v1/confirm_instruction.txt")
                .trim_end()
                .to_string(),
            enforcement_clause: include_str!("../../assets/prompts/v1/enforcement_clause.txt")
                .trim_end()
                .to_string(),
        }
    }

    /// Load from a directory holding the three template files. The directory
    /// name is taken as the version.
    pub fn load_dir(dir: &Path) -> Result<Self, LlmError> {
        let read = |name: &str| -> Result<String, LlmError> {
            let path = dir.join(name);
            std::fs::read_to_string(&path)
                .map(|s| s.trim_end().to_string())
                .map_err(|_| LlmError::MissingPromptFile(path))
        };
        let version = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Ok(Self {
            version,
            system_role: read(SYSTEM_ROLE_FILE)?,
            confirm_instruction: read(CONFIRM_INSTRUCTION_FILE)?,
            enforcement_clause: read(ENFORCEMENT_CLAUSE_FILE)?,
        })
    }

    /// SHA-256 of each template, keyed by file name.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        [
            (SYSTEM_ROLE_FILE, &self.system_role),
            (CONFIRM_INSTRUCTION_FILE, &self.confirm_instruction),
            (ENFORCEMENT_CLAUSE_FILE, &self.enforcement_clause),
        ]
        .into_iter()
        .map(|(name, text)| (name.to_string(), hex::encode(Sha256::digest(text.as_bytes()))))
        .collect()
    }

    pub fn write_dir(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, text) in [
            (SYSTEM_ROLE_FILE, &self.system_role),
            (CONFIRM_INSTRUCTION_FILE, &self.confirm_instruction),
            (ENFORCEMENT_CLAUSE_FILE, &self.enforcement_clause),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, format!("{text}\n"))?;
            written.push(path);
        }
        Ok(written)
    }
}
