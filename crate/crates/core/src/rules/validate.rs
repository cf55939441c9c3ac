use std::collections::BTreeSet;

use serde::Serialize;

use super::model::{
    Condition, Recommendation, Registry, Rule, RuleId, RuleSet, MAX_CASE_AGE, MAX_CASE_FACTORS,
    MIN_CASE_AGE, MIN_CASE_FACTORS,
};

/// Two rules that can fire on the same case with different conclusions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub rule_ids: [RuleId; 2],
    pub recommendations: [Recommendation; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Rules no use case in the input space can trigger.
    pub unreachable: Vec<RuleId>,
    /// Informational: overlapping rules with differing recommendations.
    pub conflicts: Vec<Conflict>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.unreachable.is_empty()
    }
}

/// Whether some use case (age in the case range, 1..=4 registered factors,
/// either gender) satisfies every condition at once.
pub fn conditions_satisfiable<'a>(
    conditions: impl IntoIterator<Item = &'a Condition>,
    registry: &Registry,
) -> bool {
    let mut genders = BTreeSet::new();
    let (mut low, mut high) = (MIN_CASE_AGE, MAX_CASE_AGE);
    let mut required = BTreeSet::new();
    let mut min_count = MIN_CASE_FACTORS;
    for cond in conditions {
        match *cond {
            Condition::GenderIs(g) => {
                genders.insert(g);
            }
            Condition::AgeInRange { low: l, high: h } => {
                low = low.max(l);
                high = high.min(h);
            }
            Condition::HasRiskFactor(rf) => {
                if !registry.factors().contains(&rf) {
                    return false;
                }
                required.insert(rf);
            }
            Condition::RiskFactorCountAtLeast(n) => {
                min_count = min_count.max(n as usize);
            }
        }
    }
    let needed = min_count.max(required.len());
    genders.len() <= 1 && low <= high && needed <= MAX_CASE_FACTORS.min(registry.len())
}

pub fn rule_reachable(rule: &Rule, registry: &Registry) -> bool {
    conditions_satisfiable(&rule.conditions, registry)
}

/// Report unreachable rules and pairwise conflicts over the standard registry.
pub fn validate_ruleset(rs: &RuleSet) -> ValidationReport {
    validate_with_registry(rs, &Registry::standard())
}

pub fn validate_with_registry(rs: &RuleSet, registry: &Registry) -> ValidationReport {
    let rules = rs.rules();
    let unreachable = rules
        .iter()
        .filter(|r| !rule_reachable(r, registry))
        .map(|r| r.rule_id)
        .collect();

    let mut conflicts = Vec::new();
    for (i, a) in rules.iter().enumerate() {
        for b in &rules[i + 1..] {
            if a.recommendation != b.recommendation
                && conditions_satisfiable(a.conditions.iter().chain(&b.conditions), registry)
            {
                conflicts.push(Conflict {
                    rule_ids: [a.rule_id, b.rule_id],
                    recommendations: [a.recommendation, b.recommendation],
                });
            }
        }
    }
    ValidationReport { unreachable, conflicts }
}
