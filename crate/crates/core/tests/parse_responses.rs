use std::collections::BTreeSet;

use proptest::prelude::*;
use screenwise_core::llmlink::{parse_response, ModelRecommendation};
use screenwise_core::rules::{Recommendation, RuleId};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    name: String,
    raw: String,
    recommendation: String,
    cited: Vec<String>,
    unknown: Vec<String>,
}

fn known() -> BTreeSet<RuleId> {
    (1..=8).map(|n| RuleId::new(n).unwrap()).collect()
}

fn fixtures() -> Vec<Fixture> {
    serde_json::from_str(include_str!("fixtures/adversarial_responses.json")).unwrap()
}

#[test]
fn adversarial_fixture() {
    let all = fixtures();
    assert_eq!(all.len(), 30);
    let mut failures = Vec::new();
    for f in &all {
        let p = parse_response(&f.raw, &known());
        let cited: Vec<String> = p.cited_rules.iter().map(|r| r.to_string()).collect();
        let unknown: Vec<String> = p.unknown_citations.iter().cloned().collect();
        if p.recommendation.code() != f.recommendation || cited != f.cited || unknown != f.unknown {
            failures.push(format!("{}: got {} {:?} {:?}", f.name, p.recommendation, cited, unknown));
        }
        assert!(!p.cited_rules.iter().any(|r| r.number() == 99), "{}", f.name);
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn explanation_is_captured() {
    let p = parse_response(
        "RECOMMENDATION: ANNUAL_MAMMOGRAM\nTRIGGERED_RULES: R6\nEXPLANATION: The person is 47.\nShe is female.\n\nThanks!",
        &known(),
    );
    assert_eq!(p.explanation, "The person is 47.\nShe is female.");
}

fn block() -> impl Strategy<Value = String> {
    (
        prop::sample::select(Recommendation::ALL.to_vec()),
        prop::collection::btree_set(1u32..120, 0..5),
        "[0-9 .,!?()-]{0,40}",
        "[0-9 .,!?()\n-]{0,40}",
    )
        .prop_map(|(rec, ids, before, after)| {
            let ids: Vec<String> = ids.into_iter().map(|n| format!("R{n}")).collect();
            format!(
                "{before}\nRECOMMENDATION: {}\nTRIGGERED_RULES: {}\nEXPLANATION: x\n\n{after}",
                rec.code(),
                ids.join(", ")
            )
        })
}

proptest! {
    #[test]
    fn never_panics(raw in "\\PC{0,300}") {
        let p = parse_response(&raw, &known());
        prop_assert!(p.cited_rules.iter().all(|r| known().contains(r)));
        prop_assert!(p.unknown_citations.iter().all(|u| u.starts_with('R')));
    }

    #[test]
    fn never_panics_on_label_soup(parts in prop::collection::vec(prop::sample::select(vec![
        "RECOMMENDATION:", "TRIGGERED_RULES:", "EXPLANATION:", "R1", "R99", "\n", "\n\n", " ",
        "ANNUAL_MAMMOGRAM", "**", ":", "NONE", "é", ","
    ]), 0..40)) {
        let raw: String = parts.concat();
        let _ = parse_response(&raw, &known());
    }

    #[test]
    fn canonical_blocks_parse_exactly(raw in block()) {
        let p = parse_response(&raw, &known());
        prop_assert!(matches!(p.recommendation, ModelRecommendation::Known(_)));
        prop_assert!(p.cited_rules.iter().all(|r| r.number() <= 8));
        prop_assert!(p.unknown_citations.iter().all(|u| u[1..].parse::<u32>().unwrap() > 8));
        let total = p.cited_rules.len() + p.unknown_citations.len();
        prop_assert_eq!(total, raw.matches(", R").count() + usize::from(raw.contains("RULES: R")));
    }
}
