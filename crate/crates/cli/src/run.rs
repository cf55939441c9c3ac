//! The `run` pipeline: start sessions, load rules, query cases, score, persist.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use screenwise_core::casegen::{
    generate_cases, read_cases, render_structured, render_unstructured, write_cases, CaseRecord, GeneratorConfig,
    RenderMode, RenderedCase, UseCase,
};
use screenwise_core::evalkit::{
    emit_report, run_manifest, score_case, summarize, ConfigSnapshot, EvaluationRecord, MetricsSummary, ReportFormat,
    RunManifest,
};
use screenwise_core::llmlink::{start_session, BackendKind, LlmError, LlmVerdict, PromptSet, Session};
use screenwise_core::oracle::evaluate;
use screenwise_core::rules::{default_ruleset, parse_rules, validate_ruleset, RuleSet};
use serde::Serialize;

use crate::config::{CaseSource, RunConfig, RunMode};
use crate::CliError;

pub const REPORT_MD: &str = "report.md";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const TRANSCRIPT: &str = "transcript.jsonl";
pub const VERDICTS: &str = "verdicts.jsonl";
pub const CASES: &str = "cases.jsonl";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub summaries: Vec<MetricsSummary>,
}

struct Arm {
    mode: RenderMode,
    cases: Vec<UseCase>,
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    mode: RenderMode,
    #[serde(flatten)]
    verdict: &'a LlmVerdict,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

fn from_llm(e: LlmError) -> CliError {
    match e {
        LlmError::InvalidConfig(_) | LlmError::MissingPromptFile(_) => usage(e.to_string()),
        other => runtime(other.to_string()),
    }
}

pub fn load_rules(path: Option<&Path>) -> Result<RuleSet, CliError> {
    let Some(path) = path else {
        return Ok(default_ruleset());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read rules {}: {e}", path.display())))?;
    parse_rules(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_prompts(dir: Option<&Path>) -> Result<PromptSet, CliError> {
    match dir {
        Some(d) => PromptSet::load_dir(d).map_err(from_llm),
        None => Ok(PromptSet::builtin()),
    }
}

fn build_arms(cfg: &RunConfig) -> Result<(Vec<Arm>, bool), CliError> {
    let (cases, generated) = match &cfg.source {
        CaseSource::File(path) => {
            let records = read_cases(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let cases = records
                .iter()
                .map(|r| r.to_case())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(e.to_string()))?;
            if cases.is_empty() {
                return Err(usage(format!("{} holds no cases", path.display())));
            }
            (cases, false)
        }
        CaseSource::Generate { seed, count } => {
            let n = if cfg.mode == RunMode::Both { count * 2 } else { *count };
            (generate_cases(&GeneratorConfig::new(*seed, n)).map_err(|e| usage(e.to_string()))?, true)
        }
    };
    let arms = match cfg.mode {
        RunMode::Structured => vec![Arm { mode: RenderMode::Structured, cases }],
        RunMode::Unstructured => vec![Arm { mode: RenderMode::Unstructured, cases }],
        RunMode::Paired => vec![
            Arm { mode: RenderMode::Structured, cases: cases.clone() },
            Arm { mode: RenderMode::Unstructured, cases },
        ],
        RunMode::Both => {
            let half = cases.len() / 2;
            let second = cases[half..].to_vec();
            let mut first = cases;
            first.truncate(half);
            vec![Arm { mode: RenderMode::Structured, cases: first }, Arm { mode: RenderMode::Unstructured, cases: second }]
        }
    };
    Ok((arms, generated))
}

fn render(c: &UseCase, mode: RenderMode, template_seed: u64) -> RenderedCase {
    match mode {
        RenderMode::Structured => render_structured(c),
        RenderMode::Unstructured => render_unstructured(c, template_seed),
    }
}

fn snapshot(cfg: &RunConfig) -> ConfigSnapshot {
    let path_str = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let (seed, count) = match cfg.source {
        CaseSource::Generate { seed, count } => (Some(seed), Some(count)),
        CaseSource::File(_) => (None, None),
    };
    ConfigSnapshot {
        rules_path: path_str(&cfg.rules_path).unwrap_or_else(|| "builtin:default.rules".into()),
        cases_path: match &cfg.source {
            CaseSource::File(p) => Some(p.display().to_string()),
            CaseSource::Generate { .. } => None,
        },
        seed,
        count,
        template_seed: cfg.template_seed,
        mode: cfg.mode.to_string(),
        prompts_dir: path_str(&cfg.prompts_dir),
        backend_kind: cfg.backend.kind,
        model: cfg.backend.model_name.clone(),
        endpoint: (cfg.backend.kind == BackendKind::Remote).then(|| cfg.backend.endpoint_url.clone()),
        temperature: cfg.backend.temperature,
        timeout_s: cfg.backend.timeout_s,
        max_retries: cfg.max_retries,
        fresh_per_case: cfg.fresh_per_case,
        noise_schedule: cfg.noise_schedule.clone(),
    }
}

fn now() -> chrono::DateTime<chrono::Utc> {
    chrono::Utc::now()
}

fn create_run_dir(base: &Path, stamp: &str, hash: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(base).map_err(|e| usage(format!("cannot create output directory {}: {e}", base.display())))?;
    let mut n = 1;
    loop {
        let name = if n == 1 { format!("{stamp}-{hash}") } else { format!("{stamp}-{hash}-{n}") };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
            Err(e) => return Err(usage(format!("cannot create run directory {}: {e}", dir.display()))),
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let err = |e: std::io::Error| runtime(format!("cannot write {}: {e}", path.display()));
    let mut out = BufWriter::new(fs::File::create(path).map_err(err)?);
    for item in items {
        serde_json::to_writer(&mut out, &item).map_err(|e| runtime(e.to_string()))?;
        out.write_all(b"\n").map_err(err)?;
    }
    out.flush().map_err(err)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| runtime(e.to_string()))?;
    text.push('\n');
    write_file(&dir.join(MANIFEST), text.as_bytes())
}

type ArmResult = (Session, Result<Vec<LlmVerdict>, LlmError>);

fn drive_arm(mut session: Session, rules: &RuleSet, arm: &Arm, template_seed: u64) -> ArmResult {
    let result = session.load_rules(rules).and_then(|_| {
        arm.cases
            .iter()
            .map(|c| session.query_case(&render(c, arm.mode, template_seed)))
            .collect::<Result<Vec<_>, _>>()
    });
    (session, result)
}

/// Execute a resolved configuration end to end.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let rules = load_rules(cfg.rules_path.as_deref())?;
    let report = validate_ruleset(&rules);
    for id in &report.unreachable {
        eprintln!("warning: rule {id} can never fire on a valid use case");
    }
    let prompts = load_prompts(cfg.prompts_dir.as_deref())?;
    let (arms, generated) = build_arms(cfg)?;

    if let Some(schedule) = &cfg.noise_schedule {
        for arm in &arms {
            let ids = arm.cases.iter().map(|c| c.case_id).collect();
            schedule.for_arm(arm.mode).check_range(&ids).map_err(|e| usage(format!("{} arm: {e}", arm.mode)))?;
        }
    }

    let mut sessions = Vec::with_capacity(arms.len());
    for arm in &arms {
        let mut backend = cfg.backend.clone();
        if let Some(schedule) = &cfg.noise_schedule {
            backend.noise_profile = Some(schedule.for_arm(arm.mode).clone());
        }
        let mut s = start_session(&backend, &prompts).map_err(from_llm)?;
        s.set_fresh_per_case(cfg.fresh_per_case);
        sessions.push(s);
    }

    let started = now();
    let snap = snapshot(cfg);
    let mut manifest = run_manifest(&snap, &rules, &started.to_rfc3339()).map_err(|e| usage(e.to_string()))?;
    let run_dir = create_run_dir(&cfg.out_dir, &started.format("%Y%m%dT%H%M%SZ").to_string(), manifest.short_hash())?;

    if generated {
        let records: Vec<CaseRecord> = cases_with_renderings(&arms, cfg.template_seed);
        write_cases(&run_dir.join(CASES), &records).map_err(|e| runtime(format!("cannot write cases: {e}")))?;
    }

    let results: Vec<ArmResult> = if cfg.parallel_sessions && arms.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = sessions
                .into_iter()
                .zip(&arms)
                .map(|(s, arm)| scope.spawn(|| drive_arm(s, &rules, arm, cfg.template_seed)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("arm thread panicked")).collect()
        })
    } else {
        sessions.into_iter().zip(&arms).map(|(s, arm)| drive_arm(s, &rules, arm, cfg.template_seed)).collect()
    };

    let mut transcript = Vec::new();
    for (session, _) in &results {
        session.write_transcript(&mut transcript).map_err(|e| runtime(e.to_string()))?;
    }
    write_file(&run_dir.join(TRANSCRIPT), &transcript)?;

    let mut failure = None;
    let mut verdicts: Vec<(RenderMode, Vec<LlmVerdict>)> = Vec::new();
    for ((_, result), arm) in results.into_iter().zip(&arms) {
        match result {
            Ok(v) => verdicts.push((arm.mode, v)),
            Err(e) => failure = failure.or(Some(format!("{} arm: {e}", arm.mode))),
        }
    }
    if let Some(msg) = failure {
        manifest.finished_at = Some(now().to_rfc3339());
        write_manifest(&run_dir, &manifest)?;
        return Err(runtime(format!("{msg} (transcript in {})", run_dir.display())));
    }

    let mut records: Vec<EvaluationRecord> = Vec::new();
    for ((mode, vs), arm) in verdicts.iter().zip(&arms) {
        for (case, v) in arm.cases.iter().zip(vs) {
            let oracle = evaluate(case, &rules);
            records.push(score_case(&oracle, v, *mode).map_err(|e| runtime(e.to_string()))?);
        }
    }
    write_jsonl(
        &run_dir.join(VERDICTS),
        verdicts.iter().flat_map(|(mode, vs)| vs.iter().map(|v| VerdictLine { mode: *mode, verdict: v })),
    )?;

    let summaries: Vec<MetricsSummary> = arms.iter().map(|a| summarize(a.mode, &records)).collect();
    for (format, name) in [
        (ReportFormat::Markdown, REPORT_MD),
        (ReportFormat::Csv, REPORT_CSV),
        (ReportFormat::Json, REPORT_JSON),
    ] {
        let text = emit_report(&summaries, &records, format).map_err(|e| runtime(e.to_string()))?;
        write_file(&run_dir.join(name), text.as_bytes())?;
    }
    manifest.finished_at = Some(now().to_rfc3339());
    write_manifest(&run_dir, &manifest)?;

    Ok(RunOutcome { run_dir, summaries })
}

/// Generated cases with the renderings each arm actually sent.
fn cases_with_renderings(arms: &[Arm], template_seed: u64) -> Vec<CaseRecord> {
    let mut out: Vec<CaseRecord> = Vec::new();
    for arm in arms {
        for c in &arm.cases {
            let text = render(c, arm.mode, template_seed).text;
            let idx = match out.iter().position(|r| r.case_id == c.case_id) {
                Some(i) => i,
                None => {
                    out.push(CaseRecord::from_case(c));
                    out.len() - 1
                }
            };
            match arm.mode {
                RenderMode::Structured => out[idx].rendered_structured = Some(text),
                RenderMode::Unstructured => out[idx].rendered_unstructured = Some(text),
            }
        }
    }
    out.sort_by_key(|r| r.case_id);
    out
}
