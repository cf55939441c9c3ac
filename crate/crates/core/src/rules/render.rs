use super::model::{Condition, Rule};

fn condition_phrase(cond: &Condition) -> String {
    match cond {
        Condition::GenderIs(g) => format!("the person is {g}"),
        Condition::AgeInRange { low, high } => {
            format!("the person's age is between {low} and {high}")
        }
        Condition::HasRiskFactor(rf) => format!("the person has risk factor {}", rf.display_name()),
        Condition::RiskFactorCountAtLeast(n) => format!("the person has at least {n} risk factors"),
    }
}

/// English sentence used to load one rule into a chat session.
pub fn render_rule_prompt(rule: &Rule) -> String {
    let conditions = rule.conditions.iter().map(condition_phrase).collect::<Vec<_>>().join(" AND ");
    format!(
        "Rule {}: IF {} THEN recommend {}.",
        rule.rule_id,
        conditions,
        rule.recommendation.phrase()
    )
}
