use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::score::{EvaluationRecord, MetricsSummary};
use super::EvalError;
use crate::casegen::RenderMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(EvalError::UnsupportedFormat(other.to_string())),
        }
    }
}

fn mode_title(mode: RenderMode) -> &'static str {
    match mode {
        RenderMode::Structured => "Structured",
        RenderMode::Unstructured => "Unstructured",
    }
}

fn fmt_accuracy(a: Option<f64>) -> String {
    a.map_or_else(|| "N/A".to_string(), |v| format!("{v:.1}"))
}

fn markdown(summaries: &[MetricsSummary], records: &[EvaluationRecord]) -> String {
    let mut out = String::new();
    out.push_str("# Use case evaluation\n\n");
    out.push_str("Scores compare model answers with the rule engine. Not a diagnostic instrument.\n\n");
    out.push_str("| Use Case Type | Correct | Incorrect | 1-Rule | N-Rule | Zero-Rule | Accuracy | Faithful |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for s in summaries {
        let acc = match s.accuracy_percent {
            Some(a) => format!("{a:.1}%"),
            None => "N/A".into(),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            mode_title(s.mode),
            s.n_correct,
            s.n_incorrect,
            s.n_one_rule,
            s.n_multi_rule,
            s.n_zero_rule,
            acc,
            s.n_faithful
        );
    }

    let mut flagged: Vec<&EvaluationRecord> = records.iter().filter(|r| !r.correct || !r.faithful).collect();
    flagged.sort_by_key(|r| (r.mode, r.case_id));
    if !flagged.is_empty() {
        out.push_str("\n## Cases to review\n\n");
        out.push_str("| Case | Type | Expected | Model | Triggered | Cited | Correct | Faithful |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        let ids = |v: &mut dyn Iterator<Item = String>| {
            let s = v.collect::<Vec<_>>().join(", ");
            if s.is_empty() { "-".to_string() } else { s }
        };
        for r in flagged {
            let mut cited = r
                .llm
                .cited_rules
                .iter()
                .map(|i| i.to_string())
                .chain(r.unknown_citations.iter().map(|u| format!("{u}?")));
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                r.case_id,
                r.mode,
                r.oracle.recommendation,
                r.llm.recommendation,
                ids(&mut r.oracle.triggered.iter().map(|i| i.to_string())),
                ids(&mut cited),
                if r.correct { "yes" } else { "no" },
                if r.faithful { "yes" } else { "no" },
            );
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    mode: RenderMode,
    total: usize,
    n_correct: usize,
    n_incorrect: usize,
    n_one_rule: usize,
    n_multi_rule: usize,
    n_zero_rule: usize,
    accuracy_percent: String,
    n_faithful: usize,
}

fn csv_text(summaries: &[MetricsSummary]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summaries {
        w.serialize(CsvRow {
            mode: s.mode,
            total: s.total,
            n_correct: s.n_correct,
            n_incorrect: s.n_incorrect,
            n_one_rule: s.n_one_rule,
            n_multi_rule: s.n_multi_rule,
            n_zero_rule: s.n_zero_rule,
            accuracy_percent: fmt_accuracy(s.accuracy_percent),
            n_faithful: s.n_faithful,
        })
        .map_err(|e| EvalError::Encoding(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Encoding(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Encoding(e.to_string()))
}

/// Summaries back from a CSV report.
pub fn parse_csv_report(text: &str) -> Result<Vec<MetricsSummary>, EvalError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| EvalError::Encoding(e.to_string()))?;
            let accuracy_percent = match row.accuracy_percent.as_str() {
                "N/A" => None,
                v => Some(v.parse::<f64>().map_err(|e| EvalError::Encoding(e.to_string()))?),
            };
            Ok(MetricsSummary {
                mode: row.mode,
                total: row.total,
                n_correct: row.n_correct,
                n_incorrect: row.n_incorrect,
                n_one_rule: row.n_one_rule,
                n_multi_rule: row.n_multi_rule,
                n_zero_rule: row.n_zero_rule,
                accuracy_percent,
                n_faithful: row.n_faithful,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub summaries: Vec<MetricsSummary>,
    pub records: Vec<EvaluationRecord>,
}

pub fn parse_json_report(text: &str) -> Result<JsonReport, EvalError> {
    serde_json::from_str(text).map_err(|e| EvalError::Encoding(e.to_string()))
}

pub fn emit_report(
    summaries: &[MetricsSummary],
    records: &[EvaluationRecord],
    format: ReportFormat,
) -> Result<String, EvalError> {
    if summaries.is_empty() {
        return Err(EvalError::NoSummaries);
    }
    match format {
        ReportFormat::Markdown => Ok(markdown(summaries, records)),
        ReportFormat::Csv => csv_text(summaries),
        ReportFormat::Json => {
            let report = JsonReport { summaries: summaries.to_vec(), records: records.to_vec() };
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| EvalError::Encoding(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::accuracy_percent;

    fn summary(mode: RenderMode, correct: usize, total: usize) -> MetricsSummary {
        MetricsSummary {
            mode,
            total,
            n_correct: correct,
            n_incorrect: total - correct,
            n_one_rule: total,
            n_multi_rule: 0,
            n_zero_rule: 0,
            accuracy_percent: accuracy_percent(correct, total),
            n_faithful: correct,
        }
    }

    #[test]
    fn unsupported_format() {
        assert_eq!("xml".parse::<ReportFormat>().unwrap_err(), EvalError::UnsupportedFormat("xml".into()));
        assert_eq!("MD".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
    }

    #[test]
    fn csv_one_mode_shape() {
        let text = emit_report(&[summary(RenderMode::Structured, 2, 3)], &[], ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "mode,total,n_correct,n_incorrect,n_one_rule,n_multi_rule,n_zero_rule,accuracy_percent,n_faithful"
        );
        assert_eq!(lines[1], "structured,3,2,1,3,0,0,66.7,2");
    }

    #[test]
    fn na_survives_csv() {
        let s = vec![summary(RenderMode::Unstructured, 0, 0)];
        let text = emit_report(&s, &[], ReportFormat::Csv).unwrap();
        assert!(text.contains(",N/A,"));
        assert_eq!(parse_csv_report(&text).unwrap(), s);
        assert!(emit_report(&s, &[], ReportFormat::Markdown).unwrap().contains("| N/A |"));
    }

    #[test]
    fn empty_summaries_rejected() {
        assert_eq!(emit_report(&[], &[], ReportFormat::Json).unwrap_err(), EvalError::NoSummaries);
    }
}
