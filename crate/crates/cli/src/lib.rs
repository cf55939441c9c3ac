//! Command-line front end: `rules check`, `gen`, `run` and `report`.
//!
//! Exit codes: 0 success, 1 runtime or protocol failure, 2 usage or config error.

pub mod args;
pub mod config;
pub mod run;

use std::io::Write;
use std::path::Path;

use screenwise_core::casegen::{generate_cases, write_cases, CaseRecord, GeneratorConfig};
use screenwise_core::evalkit::{emit_report, parse_json_report, ReportFormat};
use screenwise_core::rules::{default_ruleset, parse_rules, validate_ruleset};
use thiserror::Error;

use args::{Cli, Command, GenArgs, ReportArgs, RulesAction, RunArgs};
use config::FileConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Rules { action: RulesAction::Check { rules } } => rules_check(rules.as_deref(), out),
        Command::Gen(a) => gen(&a, out),
        Command::Run(a) => run_cmd(&a, out),
        Command::Report(a) => report(&a, out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn rules_check(path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let (label, rs) = match path {
        None => ("bundled pack".to_string(), default_ruleset()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            let rs = parse_rules(&text).map_err(|e| {
                let debug = format!("{e:?}");
                let kind = debug.split([' ', '{', '(']).next().unwrap_or_default().to_string();
                CliError::Runtime(format!("{}: {kind}: {e}", p.display()))
            })?;
            (p.display().to_string(), rs)
        }
    };
    let report = validate_ruleset(&rs);
    writeln!(out, "{label}: {} rules, version {:?}, checksum {}", rs.len(), rs.version(), rs.checksum()).map_err(io_err)?;
    for c in &report.conflicts {
        writeln!(
            out,
            "note: {} ({}) and {} ({}) can fire together; the higher priority wins",
            c.rule_ids[0], c.recommendations[0], c.rule_ids[1], c.recommendations[1]
        )
        .map_err(io_err)?;
    }
    if report.unreachable.is_empty() {
        writeln!(out, "ok").map_err(io_err)?;
        Ok(())
    } else {
        let ids: Vec<String> = report.unreachable.iter().map(|i| i.to_string()).collect();
        Err(CliError::Runtime(format!("unreachable rules: {}", ids.join(", "))))
    }
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cases = generate_cases(&GeneratorConfig::new(a.seed, a.count)).map_err(|e| CliError::Usage(e.to_string()))?;
    let records: Vec<CaseRecord> = cases.iter().map(CaseRecord::from_case).collect();
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    write_cases(&a.out, &records).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", a.out.display())))?;
    writeln!(out, "wrote {} cases to {}", records.len(), a.out.display()).map_err(io_err)
}

fn run_cmd(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let cfg = config::resolve(a, &file, &|k| std::env::var(k).ok())?;
    let outcome = run::execute(&cfg)?;
    for s in &outcome.summaries {
        let acc = s.accuracy_percent.map_or("N/A".to_string(), |v| format!("{v:.1}%"));
        writeln!(
            out,
            "{}: {}/{} correct ({acc}), {} faithful",
            s.mode, s.n_correct, s.total, s.n_faithful
        )
        .map_err(io_err)?;
    }
    writeln!(out, "{}", outcome.run_dir.display()).map_err(io_err)
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = a.run_dir.join(run::REPORT_JSON);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_json_report(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let emit = |f| emit_report(&parsed.summaries, &parsed.records, f).map_err(|e| CliError::Runtime(e.to_string()));
    match &a.format {
        Some(f) => {
            let format: ReportFormat = f.parse().map_err(|e: screenwise_core::evalkit::EvalError| CliError::Usage(e.to_string()))?;
            out.write_all(emit(format)?.as_bytes()).map_err(io_err)
        }
        None => {
            for (format, name) in [(ReportFormat::Markdown, run::REPORT_MD), (ReportFormat::Csv, run::REPORT_CSV)] {
                std::fs::write(a.run_dir.join(name), emit(format)?).map_err(io_err)?;
            }
            writeln!(out, "rewrote reports in {}", a.run_dir.display()).map_err(io_err)
        }
    }
}
