//! Deterministic single-pass forward chaining over a [`RuleSet`].
//!
//! This is the ground truth model verdicts are scored against.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::casegen::UseCase;
use crate::rules::{
    Condition, Recommendation, Registry, RiskFactor, RuleId, RuleSet, MAX_CASE_AGE,
    MAX_CASE_FACTORS, MIN_CASE_AGE,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub rule_id: RuleId,
    /// DSL spelling of the condition.
    pub condition: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub case_id: u32,
    /// Fired rules, in rule-set order.
    pub triggered: Vec<RuleId>,
    pub recommendation: Recommendation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

pub fn condition_holds(cond: &Condition, case: &UseCase) -> bool {
    match *cond {
        Condition::GenderIs(g) => case.gender == g,
        Condition::AgeInRange { low, high } => low <= case.age && case.age <= high,
        Condition::HasRiskFactor(rf) => case.risk_factors.contains(&rf),
        Condition::RiskFactorCountAtLeast(n) => case.risk_factors.len() >= n as usize,
    }
}

/// Highest-priority recommendation; `None` for an empty slice.
pub fn resolve_conflicts(triggered: &[Recommendation]) -> Option<Recommendation> {
    triggered.iter().copied().max_by_key(|r| r.priority())
}

pub fn evaluate(case: &UseCase, rs: &RuleSet) -> OracleVerdict {
    let mut trace = Vec::new();
    let mut triggered = Vec::new();
    let mut recommendations = Vec::new();
    for rule in rs.rules() {
        let mut all = true;
        for cond in &rule.conditions {
            let holds = condition_holds(cond, case);
            all &= holds;
            trace.push(TraceEntry { rule_id: rule.rule_id, condition: cond.to_string(), holds });
        }
        if all {
            triggered.push(rule.rule_id);
            recommendations.push(rule.recommendation);
        }
    }
    OracleVerdict {
        case_id: case.case_id,
        triggered,
        recommendation: resolve_conflicts(&recommendations).unwrap_or(Recommendation::FALLBACK),
        trace,
    }
}

/// Ages at which some rule in `rs` can change its outcome: `low-1, low, low+1`
/// and `high, high+1` for every age interval, plus the case-range ends; values
/// outside the case range are dropped.
pub fn boundary_ages(rs: &RuleSet) -> BTreeSet<u32> {
    let mut ages = BTreeSet::from([MIN_CASE_AGE, MAX_CASE_AGE]);
    let in_range = |a: &u32| (MIN_CASE_AGE..=MAX_CASE_AGE).contains(a);
    for rule in rs.rules() {
        for cond in &rule.conditions {
            if let Condition::AgeInRange { low, high } = *cond {
                let candidates = [low.checked_sub(1), Some(low), Some(low + 1), Some(high), Some(high + 1)];
                ages.extend(candidates.into_iter().flatten().filter(in_range));
            }
        }
    }
    ages
}

/// Every gender × boundary age × factor subset of size 0..=4.
///
/// Grid cases are probes, not generated cases: they may carry no factors and
/// their history text is a placeholder.
pub fn enumerate_input_grid<'a>(
    rs: &RuleSet,
    registry: &'a Registry,
) -> impl Iterator<Item = UseCase> + 'a {
    let ages: Vec<u32> = boundary_ages(rs).into_iter().collect();
    let max_k = MAX_CASE_FACTORS.min(registry.len());
    let subsets: Vec<BTreeSet<RiskFactor>> = (0..=max_k)
        .flat_map(|k| registry.factors().iter().copied().combinations(k))
        .map(|v| v.into_iter().collect())
        .collect();
    let genders = crate::rules::Gender::ALL;
    genders
        .into_iter()
        .flat_map(move |g| ages.clone().into_iter().map(move |a| (g, a)))
        .flat_map(move |(g, a)| subsets.clone().into_iter().map(move |s| (g, a, s)))
        .enumerate()
        .map(|(i, (gender, age, risk_factors))| UseCase {
            case_id: i as u32 + 1,
            gender,
            age,
            risk_factors,
            history_text: "grid probe".to_string(),
        })
}
