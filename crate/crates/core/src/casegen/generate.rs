use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CaseError, UseCase, DEFAULT_TEMPLATE_POOL};
use crate::rules::{
    Gender, Registry, RiskFactor, MAX_CASE_AGE, MAX_CASE_FACTORS, MIN_CASE_AGE, MIN_CASE_FACTORS,
};

pub const DEFAULT_CASE_COUNT: u32 = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub count: u32,
    pub registry: Registry,
    pub template_pool_id: String,
}

impl GeneratorConfig {
    pub fn new(seed: u64, count: u32) -> Self {
        Self {
            seed,
            count,
            registry: Registry::standard(),
            template_pool_id: DEFAULT_TEMPLATE_POOL.to_string(),
        }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::new(1, DEFAULT_CASE_COUNT)
    }
}

const ONSET_PHRASES: [&str; 6] = [
    "confirmed through genetic counseling",
    "reported at intake",
    "noted in earlier medical records",
    "documented by a previous physician",
    "raised during a routine visit",
    "recorded on a family health questionnaire",
];

/// Each case draws from its own stream keyed by `case_id`, so a case does not
/// depend on how many cases precede it.
fn case_rng(seed: u64, case_id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(case_id));
    rng
}

fn history_sentence(factors: &BTreeSet<RiskFactor>, rng: &mut ChaCha8Rng) -> String {
    let items: Vec<String> = factors
        .iter()
        .map(|rf| {
            let onset = ONSET_PHRASES.choose(rng).expect("phrase pool is nonempty");
            format!("{} ({onset})", rf.display_name())
        })
        .collect();
    format!("Background history: {}.", items.join("; "))
}

fn generate_one(seed: u64, case_id: u32, registry: &Registry) -> UseCase {
    let mut rng = case_rng(seed, case_id);
    let gender = if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male };
    let age = rng.gen_range(MIN_CASE_AGE..=MAX_CASE_AGE);
    let max = MAX_CASE_FACTORS.min(registry.len());
    let count = rng.gen_range(MIN_CASE_FACTORS..=max);
    let risk_factors: BTreeSet<RiskFactor> = index::sample(&mut rng, registry.len(), count)
        .into_iter()
        .map(|i| registry.factors()[i])
        .collect();
    let history_text = history_sentence(&risk_factors, &mut rng);
    UseCase { case_id, gender, age, risk_factors, history_text }
}

/// Draw `cfg.count` cases with ids `1..=count`; a pure function of `cfg`.
pub fn generate_cases(cfg: &GeneratorConfig) -> Result<Vec<UseCase>, CaseError> {
    if cfg.registry.is_empty() {
        return Err(CaseError::EmptyRegistry);
    }
    if cfg.count == 0 {
        return Err(CaseError::ZeroCount);
    }
    if super::TemplatePool::by_id(&cfg.template_pool_id).is_none() {
        return Err(CaseError::UnknownTemplatePool(cfg.template_pool_id.clone()));
    }
    Ok((1..=cfg.count).map(|id| generate_one(cfg.seed, id, &cfg.registry)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_cases_within_bounds() {
        let cases = generate_cases(&GeneratorConfig::new(1, 50)).unwrap();
        assert_eq!(cases.len(), 50);
        for (i, c) in cases.iter().enumerate() {
            assert_eq!(c.case_id as usize, i + 1);
            c.validate().unwrap();
        }
        assert_eq!(cases, generate_cases(&GeneratorConfig::new(1, 50)).unwrap());
    }

    #[test]
    fn prefix_stability() {
        let short = generate_cases(&GeneratorConfig::new(9, 5)).unwrap();
        let long = generate_cases(&GeneratorConfig::new(9, 20)).unwrap();
        assert_eq!(short[..], long[..5]);
    }

    #[test]
    fn empty_registry_and_zero_count() {
        let mut cfg = GeneratorConfig::new(1, 5);
        cfg.registry = Registry::new(vec![]);
        assert_eq!(generate_cases(&cfg).unwrap_err(), CaseError::EmptyRegistry);
        assert_eq!(generate_cases(&GeneratorConfig::new(1, 0)).unwrap_err(), CaseError::ZeroCount);
    }

    #[test]
    fn small_registry_caps_factor_count() {
        let mut cfg = GeneratorConfig::new(4, 40);
        cfg.registry = Registry::new(vec![RiskFactor::DenseBreastTissue, RiskFactor::CowdenSyndrome]);
        for c in generate_cases(&cfg).unwrap() {
            assert!((1..=2).contains(&c.risk_factors.len()));
            assert!(c.risk_factors.iter().all(|f| cfg.registry.factors().contains(f)));
        }
    }

    #[test]
    fn different_seeds_still_valid() {
        for seed in [2, 3] {
            let cases = generate_cases(&GeneratorConfig::new(seed, 1)).unwrap();
            assert_eq!(cases.len(), 1);
            cases[0].validate().unwrap();
        }
    }
}
