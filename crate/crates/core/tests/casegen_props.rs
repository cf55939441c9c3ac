use std::collections::BTreeSet;

use proptest::prelude::*;
use screenwise_core::casegen::{
    generate_cases, parse_structured, read_cases_jsonl, render_structured, render_unstructured,
    write_cases_jsonl, CaseError, CaseRecord, GeneratorConfig, TemplatePool,
};
use screenwise_core::rules::{Gender, RiskFactor, MAX_CASE_AGE, MIN_CASE_AGE};

fn cases_file(seed: u64, count: u32) -> Vec<u8> {
    let cases = generate_cases(&GeneratorConfig::new(seed, count)).unwrap();
    let records: Vec<CaseRecord> = cases.iter().map(CaseRecord::from_case).collect();
    let mut buf = Vec::new();
    write_cases_jsonl(&mut buf, &records).unwrap();
    buf
}

#[test]
fn hundred_seeds_bounds_determinism_round_trip() {
    let mut violations = Vec::new();
    for seed in 0..100u64 {
        let cases = generate_cases(&GeneratorConfig::new(seed, 50)).unwrap();
        assert_eq!(cases.len(), 50);
        for c in &cases {
            if !(MIN_CASE_AGE..=MAX_CASE_AGE).contains(&c.age) || !(1..=4).contains(&c.risk_factors.len()) {
                violations.push(format!("seed {seed} case {}: bounds", c.case_id));
            }
            let back = parse_structured(&render_structured(c).text, c.case_id);
            if back.as_ref() != Ok(c) {
                violations.push(format!("seed {seed} case {}: round trip {back:?}", c.case_id));
            }
        }
        if cases_file(seed, 50) != cases_file(seed, 50) {
            violations.push(format!("seed {seed}: files differ"));
        }
    }
    assert!(violations.is_empty(), "{violations:#?}");
}

#[test]
fn coverage_over_a_thousand_cases() {
    let cases = generate_cases(&GeneratorConfig::new(2024, 1000)).unwrap();
    let factors: BTreeSet<RiskFactor> = cases.iter().flat_map(|c| c.risk_factors.iter().copied()).collect();
    assert_eq!(factors.len(), RiskFactor::ALL.len());
    let genders: BTreeSet<Gender> = cases.iter().map(|c| c.gender).collect();
    assert_eq!(genders.len(), 2);
    let counts: BTreeSet<usize> = cases.iter().map(|c| c.risk_factors.len()).collect();
    assert_eq!(counts, BTreeSet::from([1, 2, 3, 4]));
    assert!(cases.iter().any(|c| c.age == MIN_CASE_AGE));
    assert!(cases.iter().any(|c| c.age == MAX_CASE_AGE));
}

#[test]
fn different_seeds_differ() {
    assert_ne!(cases_file(1, 50), cases_file(2, 50));
}

#[test]
fn cases_file_round_trip() {
    let bytes = cases_file(5, 50);
    assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), 50);
    let records = read_cases_jsonl(bytes.as_slice()).unwrap();
    let cases: Vec<_> = records.iter().map(|r| r.to_case().unwrap()).collect();
    assert_eq!(cases, generate_cases(&GeneratorConfig::new(5, 50)).unwrap());
}

#[test]
fn bad_cases_file_lines_are_located() {
    let text = "{\"case_id\":1,\"gender\":\"female\",\"age\":40,\"risk_factors\":[\"DENSE_BREAST_TISSUE\"],\"history\":\"dense breast tissue\"}\n\
                {\"case_id\":2,\"gender\":\"female\",\"age\":12,\"risk_factors\":[\"DENSE_BREAST_TISSUE\"],\"history\":\"dense breast tissue\"}\n";
    match read_cases_jsonl(text.as_bytes()).unwrap_err() {
        CaseError::File { line, .. } => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn narratives_state_the_facts() {
    let pool = TemplatePool::builtin();
    assert!(pool.templates.len() >= 5);
    let cases = generate_cases(&GeneratorConfig::new(3, 200)).unwrap();
    let mut used = BTreeSet::new();
    for c in &cases {
        let text = render_unstructured(c, 11).text;
        assert!(text.contains(&c.age.to_string()));
        for rf in &c.risk_factors {
            assert!(text.contains(rf.display_name()), "{text}");
        }
        assert!(!text.contains('\n'));
        used.insert(text.split(' ').nth(1).map(str::to_string));
    }
    assert!(used.len() > 1);
}

#[test]
fn structured_parse_errors() {
    assert_eq!(
        parse_structured("age: 40\ngender: female\nrisk_factors: BRCA_MUTATION\nhistory: x", 1),
        Err(CaseError::Format("gender: line out of order".into()))
    );
    assert!(matches!(parse_structured("", 1), Err(CaseError::Format(m)) if m.contains("missing gender:")));
}

proptest! {
    #[test]
    fn generation_is_pure(seed in any::<u64>(), count in 1u32..60) {
        let a = generate_cases(&GeneratorConfig::new(seed, count)).unwrap();
        let b = generate_cases(&GeneratorConfig::new(seed, count)).unwrap();
        prop_assert_eq!(&a, &b);
        for c in &a {
            prop_assert!(c.validate().is_ok());
            prop_assert_eq!(parse_structured(&render_structured(c).text, c.case_id), Ok(c.clone()));
        }
    }
}
