use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CaseError, RenderMode, RenderedCase, UseCase};
use crate::rules::{Gender, RiskFactor};

pub const DEFAULT_TEMPLATE_POOL: &str = "narrative-v1";

/// Paragraph templates with slots `{name}`, `{age}`, `{noun}`, `{Subj}`,
/// `{subj}`, `{Poss}`, `{poss}`, `{obj}` and `{factors}`.
///
/// Every template states the age before the factor list, since some factor
/// labels contain numbers of their own.
#[derive(Debug, Clone)]
pub struct TemplatePool {
    pub id: &'static str,
    pub templates: &'static [&'static str],
    pub female_names: &'static [&'static str],
    pub male_names: &'static [&'static str],
}

const NARRATIVE_V1: TemplatePool = TemplatePool {
    id: DEFAULT_TEMPLATE_POOL,
    templates: &[
        "{name} is a {age}-year-old {noun}. {Subj} tells the nurse about {factors}. {Subj} wants to know which breast cancer screening makes sense for {obj}.",
        "At {age}, {name} is a {noun} who has come in for advice. {Poss} chart lists {factors}. What screening should {subj} follow?",
        "{name}, a {age}-year-old {noun}, recently moved to the area. During the first appointment {subj} brought up {factors}. {Subj} asks what kind of breast screening is appropriate.",
        "This is {name}, {age} years old, a {noun} looking for guidance. Relevant background includes {factors}. Please advise on screening.",
        "A {noun} named {name}, aged {age}, writes in. {Subj} explains that {poss} background includes {factors}, and asks whether any screening is needed.",
        "{name} ({age}, {noun}) visited the clinic last week. The intake notes mention {factors}. {Subj} would like a screening plan.",
    ],
    female_names: &["Maria", "Anna", "Grace", "Sofia", "Helen", "Laura", "Ruth", "Nadia"],
    male_names: &["James", "Tomasz", "David", "Omar", "Peter", "Samuel", "Victor", "Lukas"],
};

impl TemplatePool {
    pub fn builtin() -> &'static TemplatePool {
        &NARRATIVE_V1
    }

    pub fn by_id(id: &str) -> Option<&'static TemplatePool> {
        (id == NARRATIVE_V1.id).then_some(&NARRATIVE_V1)
    }
}

fn join_factors(factors: &BTreeSet<RiskFactor>) -> String {
    let names: Vec<&str> = factors.iter().map(|f| f.display_name()).collect();
    match names.as_slice() {
        [] => String::new(),
        [one] => (*one).to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Four labeled lines; factors in registry order.
pub fn render_structured(c: &UseCase) -> RenderedCase {
    let codes: Vec<&str> = c.risk_factors.iter().map(|f| f.code()).collect();
    let text = format!(
        "gender: {}\nage: {}\nrisk_factors: {}\nhistory: {}",
        c.gender,
        c.age,
        codes.join(", "),
        c.history_text
    );
    RenderedCase { case_id: c.case_id, mode: RenderMode::Structured, text }
}

pub fn render_unstructured(c: &UseCase, template_seed: u64) -> RenderedCase {
    render_unstructured_with(TemplatePool::builtin(), c, template_seed)
}

pub fn render_unstructured_with(pool: &TemplatePool, c: &UseCase, template_seed: u64) -> RenderedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(template_seed);
    rng.set_stream(u64::from(c.case_id));
    let template = pool.templates.choose(&mut rng).expect("template pool is nonempty");
    let (names, noun, subj, poss, obj) = match c.gender {
        Gender::Female => (pool.female_names, "woman", "she", "her", "her"),
        Gender::Male => (pool.male_names, "man", "he", "his", "him"),
    };
    let name = names.choose(&mut rng).expect("name pool is nonempty");
    let text = template
        .replace("{name}", name)
        .replace("{age}", &c.age.to_string())
        .replace("{noun}", noun)
        .replace("{Subj}", &capitalize(subj))
        .replace("{subj}", subj)
        .replace("{Poss}", &capitalize(poss))
        .replace("{poss}", poss)
        .replace("{obj}", obj)
        .replace("{factors}", &join_factors(&c.risk_factors));
    RenderedCase { case_id: c.case_id, mode: RenderMode::Unstructured, text }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Inverse of [`render_structured`]. The text carries no id, so the caller
/// supplies it.
pub fn parse_structured(text: &str, case_id: u32) -> Result<UseCase, CaseError> {
    const LABELS: [&str; 4] = ["gender:", "age:", "risk_factors:", "history:"];
    let lines: Vec<&str> = text.lines().collect();
    let mut values = Vec::with_capacity(4);
    for (i, label) in LABELS.iter().enumerate() {
        let line = lines
            .get(i)
            .ok_or_else(|| CaseError::Format(format!("missing {label} line")))?;
        let value = line.strip_prefix(label).ok_or_else(|| {
            if lines.iter().any(|l| l.starts_with(label)) {
                CaseError::Format(format!("{label} line out of order"))
            } else {
                CaseError::Format(format!("missing {label} line"))
            }
        })?;
        values.push(value.strip_prefix(' ').unwrap_or(value));
    }
    if lines.len() > LABELS.len() {
        return Err(CaseError::Format(format!(
            "unexpected line after history: {:?}",
            lines[LABELS.len()]
        )));
    }

    let gender = values[0].parse::<Gender>().map_err(CaseError::Format)?;
    let age = values[1]
        .trim()
        .parse::<u32>()
        .map_err(|_| CaseError::Format(format!("age {:?} is not an integer", values[1])))?;
    let mut risk_factors = BTreeSet::new();
    for code in values[2].split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let rf = RiskFactor::from_code(code)
            .ok_or_else(|| CaseError::Format(format!("unknown risk factor {code}")))?;
        if !risk_factors.insert(rf) {
            return Err(CaseError::Format(format!("duplicate risk factor {code}")));
        }
    }
    let case = UseCase { case_id, gender, age, risk_factors, history_text: values[3].to_string() };
    case.validate()?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(gender: Gender, age: u32, factors: &[RiskFactor]) -> UseCase {
        let factors: BTreeSet<RiskFactor> = factors.iter().copied().collect();
        let history_text = format!(
            "Background history: {}.",
            factors.iter().map(|f| f.display_name()).collect::<Vec<_>>().join("; ")
        );
        UseCase { case_id: 1, gender, age, risk_factors: factors, history_text }
    }

    #[test]
    fn structured_layout() {
        let c = case(Gender::Female, 47, &[RiskFactor::FamilyHistoryBreastCancer]);
        let r = render_structured(&c);
        assert_eq!(r.mode, RenderMode::Structured);
        assert_eq!(
            r.text,
            "gender: female\nage: 47\nrisk_factors: FAMILY_HISTORY_BREAST_CANCER\nhistory: Background history: family history of breast cancer."
        );
        assert_eq!(parse_structured(&r.text, 1).unwrap(), c);
    }

    #[test]
    fn four_factors_in_registry_order() {
        let c = case(
            Gender::Male,
            60,
            &[
                RiskFactor::DenseBreastTissue,
                RiskFactor::BrcaMutation,
                RiskFactor::CowdenSyndrome,
                RiskFactor::FamilyHistoryBreastCancer,
            ],
        );
        let text = render_structured(&c).text;
        assert!(text.contains(
            "risk_factors: BRCA_MUTATION, FAMILY_HISTORY_BREAST_CANCER, COWDEN_SYNDROME, DENSE_BREAST_TISSUE\n"
        ));
        assert_eq!(text, render_structured(&c).text);
    }

    #[test]
    fn structured_negatives() {
        let missing_age = "gender: female\nrisk_factors: DENSE_BREAST_TISSUE\nhistory: x";
        assert!(matches!(parse_structured(missing_age, 1), Err(CaseError::Format(_))));
        let swapped = "age: 40\ngender: female\nrisk_factors: DENSE_BREAST_TISSUE\nhistory: dense breast tissue";
        assert_eq!(
            parse_structured(swapped, 1).unwrap_err(),
            CaseError::Format("gender: line out of order".into())
        );
        let too_old = "gender: female\nage: 200\nrisk_factors: DENSE_BREAST_TISSUE\nhistory: dense breast tissue";
        assert!(matches!(parse_structured(too_old, 1), Err(CaseError::Invalid { .. })));
    }

    #[test]
    fn narrative_mentions_everything_and_no_labels() {
        let c = case(Gender::Female, 52, &[RiskFactor::DenseBreastTissue]);
        for seed in 0..40 {
            let r = render_unstructured(&c, seed);
            assert_eq!(r.mode, RenderMode::Unstructured);
            assert!(r.text.contains("52"));
            assert!(r.text.contains("woman"));
            assert!(r.text.contains("dense breast tissue"));
            for label in ["gender:", "age:", "risk_factors:"] {
                assert!(!r.text.contains(label), "{}", r.text);
            }
            assert_eq!(r.text, render_unstructured(&c, seed).text);
        }
    }

    #[test]
    fn narrative_golden() {
        let c = case(Gender::Female, 52, &[RiskFactor::DenseBreastTissue]);
        assert_eq!(
            render_unstructured(&c, 7).text,
            include_str!("../../tests/golden/narrative_female_52_dense.txt").trim_end()
        );
    }
}
