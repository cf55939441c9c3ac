//! Run configuration resolved from flags, a TOML file, the environment and
//! defaults, in that order of precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use screenwise_core::casegen::DEFAULT_CASE_COUNT;
use screenwise_core::llmlink::{
    BackendConfig, BackendKind, NoiseSchedule, API_KEY_ENV, DEFAULT_ENDPOINT, DEFAULT_MAX_RETRIES, DEFAULT_MODEL,
    DEFAULT_TIMEOUT_S,
};
use serde::Deserialize;

use crate::args::RunArgs;
use crate::CliError;

pub const BACKEND_ENV: &str = "SCREENWISE_BACKEND";
pub const ENDPOINT_ENV: &str = "SCREENWISE_ENDPOINT";
pub const MODEL_ENV: &str = "SCREENWISE_MODEL";
pub const DEFAULT_OUT_DIR: &str = "runs";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Structured,
    Unstructured,
    /// Separate case sets per arm.
    Both,
    /// The same cases rendered both ways.
    Paired,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Structured => "structured",
            RunMode::Unstructured => "unstructured",
            RunMode::Both => "both",
            RunMode::Paired => "paired",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structured" => Ok(RunMode::Structured),
            "unstructured" => Ok(RunMode::Unstructured),
            "both" => Ok(RunMode::Both),
            "paired" => Ok(RunMode::Paired),
            other => Err(format!("unknown mode {other:?} (structured, unstructured, both, paired)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseSource {
    File(PathBuf),
    Generate { seed: u64, count: u32 },
}

/// The TOML config file. Keys mirror the `run` flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rules: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    pub seed: Option<u64>,
    pub count: Option<u32>,
    pub template_seed: Option<u64>,
    pub mode: Option<String>,
    pub backend: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub timeout_s: Option<f64>,
    pub noise_profile: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub fresh_per_case: Option<bool>,
    pub max_retries: Option<u32>,
    pub prompts: Option<PathBuf>,
    pub parallel_sessions: Option<bool>,
}

impl FileConfig {
    /// Relative paths in the file are taken relative to the file itself.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.rules, &mut cfg.cases, &mut cfg.noise_profile, &mut cfg.out, &mut cfg.prompts]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// `None` means the bundled pack.
    pub rules_path: Option<PathBuf>,
    pub source: CaseSource,
    pub template_seed: u64,
    pub mode: RunMode,
    pub backend: BackendConfig,
    pub noise_path: Option<PathBuf>,
    pub noise_schedule: Option<NoiseSchedule>,
    pub out_dir: PathBuf,
    pub max_retries: u32,
    pub fresh_per_case: bool,
    pub prompts_dir: Option<PathBuf>,
    pub parallel_sessions: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn load_noise_schedule(path: &Path) -> Result<NoiseSchedule, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read noise profile {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| usage(format!("invalid noise profile {}: {e}", path.display())))
}

/// Merge the layers. `env` looks up environment variables.
pub fn resolve(args: &RunArgs, file: &FileConfig, env: &dyn Fn(&str) -> Option<String>) -> Result<RunConfig, CliError> {
    let env_nonempty = |k: &str| env(k).filter(|v| !v.trim().is_empty());

    let mode_text = if args.paired { Some("paired".to_string()) } else { args.mode.clone().or(file.mode.clone()) };
    let mode = match mode_text {
        Some(m) => m.parse::<RunMode>().map_err(usage)?,
        None => RunMode::Paired,
    };

    let cases = args.cases.clone().or(file.cases.clone());
    let seed = args.seed.or(file.seed);
    let count = args.count.or(file.count);
    let source = match (cases, seed, count) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(usage("give either a cases file or generator seed/count, not both"))
        }
        (Some(path), None, None) => CaseSource::File(path),
        (None, seed, count) => CaseSource::Generate {
            seed: seed.unwrap_or(DEFAULT_SEED),
            count: count.unwrap_or(DEFAULT_CASE_COUNT),
        },
    };
    if let CaseSource::Generate { count: 0, .. } = source {
        return Err(usage("count must be at least 1"));
    }
    if mode == RunMode::Both && matches!(source, CaseSource::File(_)) {
        return Err(usage("mode both draws separate case sets and needs the generator; use paired with a cases file"));
    }
    let template_seed = args.template_seed.or(file.template_seed).unwrap_or(match source {
        CaseSource::Generate { seed, .. } => seed,
        CaseSource::File(_) => DEFAULT_SEED,
    });

    let kind = match args.backend.clone().or(file.backend.clone()).or_else(|| env_nonempty(BACKEND_ENV)) {
        Some(b) => b.parse::<BackendKind>().map_err(usage)?,
        None => BackendKind::MockPerfect,
    };
    let mut backend = BackendConfig::new(kind);
    backend.endpoint_url = args
        .endpoint
        .clone()
        .or(file.endpoint.clone())
        .or_else(|| env_nonempty(ENDPOINT_ENV))
        .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());
    backend.model_name = args
        .model
        .clone()
        .or(file.model.clone())
        .or_else(|| env_nonempty(MODEL_ENV))
        .unwrap_or_else(|| DEFAULT_MODEL.to_string());
    backend.temperature = args.temperature.or(file.temperature).unwrap_or(0.0);
    backend.timeout_s = args.timeout.or(file.timeout_s).unwrap_or(DEFAULT_TIMEOUT_S);
    let max_retries = args.max_retries.or(file.max_retries).unwrap_or(DEFAULT_MAX_RETRIES);
    backend.max_retries = max_retries;
    if kind == BackendKind::Remote {
        backend.api_key = env_nonempty(API_KEY_ENV);
    }

    let noise_path = args.noise_profile.clone().or(file.noise_profile.clone());
    let noise_schedule = match (&noise_path, kind) {
        (Some(p), BackendKind::MockNoisy) => Some(load_noise_schedule(p)?),
        (Some(_), _) => return Err(usage("--noise-profile only applies to the mock-noisy backend")),
        (None, BackendKind::MockNoisy) => return Err(usage("the mock-noisy backend needs --noise-profile")),
        (None, _) => None,
    };
    // The per-arm noise profile is attached when each session starts.
    let mut probe = backend.clone();
    if kind == BackendKind::MockNoisy {
        probe.noise_profile.get_or_insert_with(Default::default);
    }
    probe.validate().map_err(usage)?;

    Ok(RunConfig {
        rules_path: args.rules.clone().or(file.rules.clone()),
        source,
        template_seed,
        mode,
        backend,
        noise_path,
        noise_schedule,
        out_dir: args.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        max_retries,
        fresh_per_case: args.fresh_per_case || file.fresh_per_case.unwrap_or(false),
        prompts_dir: args.prompts.clone().or(file.prompts.clone()),
        parallel_sessions: args.parallel_sessions || file.parallel_sessions.unwrap_or(false),
    })
}
