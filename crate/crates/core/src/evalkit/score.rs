use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::casegen::RenderMode;
use crate::llmlink::{LlmVerdict, ModelRecommendation};
use crate::oracle::OracleVerdict;
use crate::rules::RuleId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub case_id: u32,
    pub mode: RenderMode,
    pub oracle: OracleVerdict,
    pub llm: LlmVerdict,
    pub correct: bool,
    pub n_cited: usize,
    pub zero_cited: bool,
    pub faithful: bool,
    pub unknown_citations: BTreeSet<String>,
}

/// Correctness looks only at the recommendation; citations feed the rule
/// counts and faithfulness.
pub fn score_case(
    oracle: &OracleVerdict,
    llm: &LlmVerdict,
    mode: RenderMode,
) -> Result<EvaluationRecord, EvalError> {
    if oracle.case_id != llm.case_id {
        return Err(EvalError::CaseIdMismatch { oracle: oracle.case_id, llm: llm.case_id });
    }
    let correct = llm.recommendation == ModelRecommendation::Known(oracle.recommendation);
    let n_cited = llm.cited_rules.len();
    let triggered: BTreeSet<RuleId> = oracle.triggered.iter().copied().collect();
    let faithful = llm.cited_rules == triggered && llm.unknown_citations.is_empty();
    Ok(EvaluationRecord {
        case_id: oracle.case_id,
        mode,
        oracle: oracle.clone(),
        llm: llm.clone(),
        correct,
        n_cited,
        zero_cited: n_cited == 0,
        faithful,
        unknown_citations: llm.unknown_citations.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub mode: RenderMode,
    pub total: usize,
    pub n_correct: usize,
    pub n_incorrect: usize,
    pub n_one_rule: usize,
    pub n_multi_rule: usize,
    pub n_zero_rule: usize,
    /// Rounded half-up to one decimal; `None` when `total == 0`.
    pub accuracy_percent: Option<f64>,
    pub n_faithful: usize,
}

/// `100 * correct / total` rounded half-up to tenths, in integer arithmetic.
pub fn accuracy_percent(correct: usize, total: usize) -> Option<f64> {
    if total == 0 {
        return None;
    }
    let (c, t) = (correct as u128, total as u128);
    let tenths = (2000 * c + t) / (2 * t);
    Some(tenths as f64 / 10.0)
}

pub fn summarize(mode: RenderMode, records: &[EvaluationRecord]) -> MetricsSummary {
    let mut s = MetricsSummary {
        mode,
        total: 0,
        n_correct: 0,
        n_incorrect: 0,
        n_one_rule: 0,
        n_multi_rule: 0,
        n_zero_rule: 0,
        accuracy_percent: None,
        n_faithful: 0,
    };
    for r in records.iter().filter(|r| r.mode == mode) {
        s.total += 1;
        if r.correct {
            s.n_correct += 1;
        } else {
            s.n_incorrect += 1;
        }
        match r.n_cited {
            0 => s.n_zero_rule += 1,
            1 => s.n_one_rule += 1,
            _ => s.n_multi_rule += 1,
        }
        if r.faithful {
            s.n_faithful += 1;
        }
    }
    s.accuracy_percent = accuracy_percent(s.n_correct, s.total);
    s
}

/// One summary per render mode, structured first.
pub fn aggregate(records: &[EvaluationRecord]) -> Vec<MetricsSummary> {
    [RenderMode::Structured, RenderMode::Unstructured]
        .into_iter()
        .map(|m| summarize(m, records))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Recommendation;

    fn rid(s: &str) -> RuleId {
        s.parse().unwrap()
    }

    fn oracle(rec: Recommendation, ids: &[&str]) -> OracleVerdict {
        OracleVerdict { case_id: 1, triggered: ids.iter().map(|s| rid(s)).collect(), recommendation: rec, trace: vec![] }
    }

    fn llm(rec: Recommendation, ids: &[&str]) -> LlmVerdict {
        LlmVerdict {
            case_id: 1,
            recommendation: ModelRecommendation::Known(rec),
            cited_rules: ids.iter().map(|s| rid(s)).collect(),
            unknown_citations: BTreeSet::new(),
            explanation_text: String::new(),
            raw_response: String::new(),
        }
    }

    #[test]
    fn scoring_examples() {
        use Recommendation::*;
        let r = score_case(&oracle(AnnualMammogram, &["R6"]), &llm(AnnualMammogram, &["R6"]), RenderMode::Structured).unwrap();
        assert!(r.correct && r.faithful && !r.zero_cited);

        let r = score_case(&oracle(AnnualMammogram, &["R6"]), &llm(AnnualMammogram, &[]), RenderMode::Structured).unwrap();
        assert!(r.correct && r.zero_cited && !r.faithful);

        let r = score_case(
            &oracle(AnnualMriAndMammogram, &["R1"]),
            &llm(AnnualMammogram, &["R1", "R5"]),
            RenderMode::Structured,
        )
        .unwrap();
        assert!(!r.correct && !r.faithful);
        assert_eq!(r.n_cited, 2);
    }

    #[test]
    fn unknown_citation_breaks_faithfulness() {
        let mut l = llm(Recommendation::AnnualMammogram, &["R6"]);
        l.unknown_citations.insert("R99".into());
        let r = score_case(&oracle(Recommendation::AnnualMammogram, &["R6"]), &l, RenderMode::Unstructured).unwrap();
        assert!(r.correct && !r.faithful);
    }

    #[test]
    fn unparseable_is_incorrect() {
        let mut l = llm(Recommendation::AnnualMammogram, &[]);
        l.recommendation = ModelRecommendation::Unparseable;
        let r = score_case(&oracle(Recommendation::AnnualMammogram, &[]), &l, RenderMode::Structured).unwrap();
        assert!(!r.correct);
        assert!(r.faithful);
    }

    #[test]
    fn mismatch() {
        let mut l = llm(Recommendation::AnnualMammogram, &[]);
        l.case_id = 2;
        assert_eq!(
            score_case(&oracle(Recommendation::AnnualMammogram, &[]), &l, RenderMode::Structured).unwrap_err(),
            EvalError::CaseIdMismatch { oracle: 1, llm: 2 }
        );
    }

    #[test]
    fn rounding() {
        assert_eq!(accuracy_percent(47, 50), Some(94.0));
        assert_eq!(accuracy_percent(41, 50), Some(82.0));
        assert_eq!(accuracy_percent(2, 3), Some(66.7));
        assert_eq!(accuracy_percent(1, 8), Some(12.5));
        assert_eq!(accuracy_percent(1, 16), Some(6.3));
        assert_eq!(accuracy_percent(0, 0), None);
    }

    #[test]
    fn empty_aggregate() {
        let all = aggregate(&[]);
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|s| s.total == 0 && s.accuracy_percent.is_none()));
    }
}
