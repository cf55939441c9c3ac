use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CaseError, UseCase};
use crate::rules::{Gender, RiskFactor};

/// One line of a cases file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseRecord {
    pub case_id: u32,
    pub gender: Gender,
    pub age: u32,
    pub risk_factors: Vec<RiskFactor>,
    pub history: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendered_structured: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendered_unstructured: Option<String>,
}

impl CaseRecord {
    pub fn from_case(c: &UseCase) -> Self {
        Self {
            case_id: c.case_id,
            gender: c.gender,
            age: c.age,
            risk_factors: c.risk_factors.iter().copied().collect(),
            history: c.history_text.clone(),
            rendered_structured: None,
            rendered_unstructured: None,
        }
    }

    pub fn to_case(&self) -> Result<UseCase, CaseError> {
        let risk_factors: BTreeSet<RiskFactor> = self.risk_factors.iter().copied().collect();
        if risk_factors.len() != self.risk_factors.len() {
            return Err(CaseError::Invalid {
                case_id: self.case_id,
                reason: "duplicate risk factor".into(),
            });
        }
        let case = UseCase {
            case_id: self.case_id,
            gender: self.gender,
            age: self.age,
            risk_factors,
            history_text: self.history.clone(),
        };
        case.validate()?;
        Ok(case)
    }
}

pub fn write_cases_jsonl<W: Write>(mut out: W, records: &[CaseRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Parse and validate every line; blank lines are skipped.
pub fn read_cases_jsonl<R: BufRead>(input: R) -> Result<Vec<CaseRecord>, CaseError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CaseError::File { line: line_no, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CaseRecord = serde_json::from_str(&line)
            .map_err(|e| CaseError::File { line: line_no, reason: e.to_string() })?;
        record
            .to_case()
            .map_err(|e| CaseError::File { line: line_no, reason: e.to_string() })?;
        if !ids.insert(record.case_id) {
            return Err(CaseError::File {
                line: line_no,
                reason: format!("duplicate case_id {}", record.case_id),
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_cases(path: &Path, records: &[CaseRecord]) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_cases_jsonl(io::BufWriter::new(file), records)
}

pub fn read_cases(path: &Path) -> Result<Vec<CaseRecord>, CaseError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CaseError::File { line: 0, reason: format!("{}: {e}", path.display()) })?;
    read_cases_jsonl(io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casegen::{generate_cases, render_structured, GeneratorConfig};

    #[test]
    fn field_layout_is_stable() {
        let case = &generate_cases(&GeneratorConfig::new(1, 1)).unwrap()[0];
        let mut rec = CaseRecord::from_case(case);
        rec.rendered_structured = Some(render_structured(case).text);
        let line = serde_json::to_string(&rec).unwrap();
        let keys: Vec<&str> = ["\"case_id\"", "\"gender\"", "\"age\"", "\"risk_factors\"", "\"history\"", "\"rendered_structured\""]
            .into_iter()
            .collect();
        let mut last = 0;
        for k in keys {
            let at = line.find(k).unwrap_or_else(|| panic!("{k} missing in {line}"));
            assert!(at >= last);
            last = at;
        }
        assert!(!line.contains("rendered_unstructured"));
    }

    #[test]
    fn rejects_bad_lines() {
        let bad_age = r#"{"case_id":1,"gender":"female","age":12,"risk_factors":["DENSE_BREAST_TISSUE"],"history":"dense breast tissue"}"#;
        assert!(matches!(read_cases_jsonl(bad_age.as_bytes()), Err(CaseError::File { line: 1, .. })));
        let unknown = r#"{"case_id":1,"gender":"female","age":40,"risk_factors":["SMOKING"],"history":"x"}"#;
        assert!(read_cases_jsonl(unknown.as_bytes()).is_err());
        let good = r#"{"case_id":1,"gender":"female","age":40,"risk_factors":["DENSE_BREAST_TISSUE"],"history":"dense breast tissue"}"#;
        let dup = format!("{good}\n\n{good}\n");
        assert!(matches!(read_cases_jsonl(dup.as_bytes()), Err(CaseError::File { line: 3, .. })));
    }
}
