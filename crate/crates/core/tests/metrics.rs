use std::collections::BTreeSet;

use proptest::prelude::*;
use screenwise_core::casegen::RenderMode;
use screenwise_core::evalkit::{
    aggregate, emit_report, parse_csv_report, parse_json_report, score_case, EvaluationRecord, ReportFormat,
};
use screenwise_core::llmlink::{LlmVerdict, ModelRecommendation};
use screenwise_core::oracle::OracleVerdict;
use screenwise_core::rules::{Recommendation, RuleId};

fn rid(n: u32) -> RuleId {
    RuleId::new(n).unwrap()
}

/// A scored record built from the outcome it should have.
fn record(case_id: u32, mode: RenderMode, correct: bool, cited: &[u32], triggered: &[u32]) -> EvaluationRecord {
    let truth = Recommendation::AnnualMammogram;
    let answer = if correct { truth } else { Recommendation::OptionalAnnualMammogram };
    let oracle = OracleVerdict {
        case_id,
        triggered: triggered.iter().map(|n| rid(*n)).collect(),
        recommendation: truth,
        trace: vec![],
    };
    let llm = LlmVerdict {
        case_id,
        recommendation: ModelRecommendation::Known(answer),
        cited_rules: cited.iter().map(|n| rid(*n)).collect(),
        unknown_citations: BTreeSet::new(),
        explanation_text: String::new(),
        raw_response: String::new(),
    };
    score_case(&oracle, &llm, mode).unwrap()
}

/// Structured: 47 right with one rule, 3 right with none.
/// Unstructured: 41 right, 9 wrong; 46 cite one rule, 4 cite two.
fn table_fixture() -> Vec<EvaluationRecord> {
    let mut v = Vec::new();
    for id in 1..=50 {
        let zero = id > 47;
        let cited: &[u32] = if zero { &[] } else { &[6] };
        let correct = id <= 47;
        v.push(record(id, RenderMode::Structured, correct, cited, &[6]));
    }
    for id in 1..=50 {
        let cited: &[u32] = if id > 46 { &[6, 7] } else { &[6] };
        v.push(record(id, RenderMode::Unstructured, id <= 41, cited, &[6]));
    }
    v
}

#[test]
fn table_fixture_rows() {
    let summaries = aggregate(&table_fixture());
    let s = &summaries[0];
    assert_eq!((s.n_correct, s.n_incorrect, s.n_one_rule, s.n_multi_rule, s.n_zero_rule), (47, 3, 47, 0, 3));
    assert_eq!(s.accuracy_percent, Some(94.0));
    let u = &summaries[1];
    assert_eq!((u.n_correct, u.n_incorrect, u.n_one_rule, u.n_multi_rule, u.n_zero_rule), (41, 9, 46, 4, 0));
    assert_eq!(u.accuracy_percent, Some(82.0));

    let md = emit_report(&summaries, &table_fixture(), ReportFormat::Markdown).unwrap();
    assert!(md.contains("| Structured | 47 | 3 | 47 | 0 | 3 | 94.0% |"), "{md}");
    assert!(md.contains("| Unstructured | 41 | 9 | 46 | 4 | 0 | 82.0% |"), "{md}");
    for col in ["Correct", "Incorrect", "1-Rule", "N-Rule", "Zero-Rule", "Accuracy", "Faithful"] {
        assert!(md.lines().any(|l| l.starts_with("| Use Case Type") && l.contains(col)));
    }
}

#[test]
fn formats_round_trip_and_are_deterministic() {
    let records = table_fixture();
    let summaries = aggregate(&records);
    let json = emit_report(&summaries, &records, ReportFormat::Json).unwrap();
    let back = parse_json_report(&json).unwrap();
    assert_eq!(back.summaries, summaries);
    assert_eq!(back.records, records);
    assert_eq!(parse_csv_report(&emit_report(&summaries, &records, ReportFormat::Csv).unwrap()).unwrap(), summaries);
    for f in ReportFormat::ALL {
        assert_eq!(emit_report(&summaries, &records, f).unwrap(), emit_report(&summaries, &records, f).unwrap());
    }
}

fn records_strategy() -> impl Strategy<Value = Vec<EvaluationRecord>> {
    prop::collection::vec(
        (
            prop::bool::ANY,
            prop::bool::ANY,
            prop::collection::btree_set(1u32..9, 0..4),
            prop::collection::btree_set(1u32..9, 0..3),
        ),
        0..80,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (structured, correct, cited, triggered))| {
                let mode = if structured { RenderMode::Structured } else { RenderMode::Unstructured };
                let cited: Vec<u32> = cited.into_iter().collect();
                let triggered: Vec<u32> = triggered.into_iter().collect();
                record(i as u32 + 1, mode, correct, &cited, &triggered)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn partition_holds(records in records_strategy()) {
        for s in aggregate(&records) {
            prop_assert_eq!(s.n_correct + s.n_incorrect, s.total);
            prop_assert_eq!(s.n_one_rule + s.n_multi_rule + s.n_zero_rule, s.total);
            prop_assert!(s.n_faithful <= s.total);
            prop_assert_eq!(s.accuracy_percent.is_none(), s.total == 0);
        }
    }

    #[test]
    fn order_does_not_matter(records in records_strategy(), seed in any::<u64>()) {
        let mut shuffled = records.clone();
        let n = shuffled.len();
        if n > 1 {
            let mut x = seed;
            for i in (1..n).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (x >> 33) as usize % (i + 1));
            }
        }
        prop_assert_eq!(aggregate(&records), aggregate(&shuffled));
    }

    #[test]
    fn csv_fidelity(records in records_strategy()) {
        let s = aggregate(&records);
        let csv = emit_report(&s, &records, ReportFormat::Csv).unwrap();
        prop_assert_eq!(parse_csv_report(&csv).unwrap(), s);
    }

    #[test]
    fn faithful_and_deterministic_policy_means_correct(
        triggered in prop::collection::btree_set(1u32..9, 0..4),
    ) {
        // A model that cites exactly the oracle's rules and resolves them the
        // same way must land on the oracle's recommendation.
        use screenwise_core::oracle::resolve_conflicts;
        use screenwise_core::rules::default_ruleset;
        let rs = default_ruleset();
        let ids: Vec<RuleId> = triggered.iter().map(|n| rid(*n)).collect();
        let recs: Vec<Recommendation> = ids.iter().map(|i| rs.get(*i).unwrap().recommendation).collect();
        let rec = resolve_conflicts(&recs).unwrap_or(Recommendation::FALLBACK);
        let oracle = OracleVerdict { case_id: 1, triggered: ids.clone(), recommendation: rec, trace: vec![] };
        let llm = LlmVerdict {
            case_id: 1,
            recommendation: ModelRecommendation::Known(rec),
            cited_rules: ids.into_iter().collect(),
            unknown_citations: BTreeSet::new(),
            explanation_text: String::new(),
            raw_response: String::new(),
        };
        let r = score_case(&oracle, &llm, RenderMode::Structured).unwrap();
        prop_assert!(r.faithful && r.correct);
    }
}
