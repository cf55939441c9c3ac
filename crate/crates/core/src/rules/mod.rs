//! Guideline rules: data model, DSL parsing, validation and prompt rendering.

mod dsl;
mod model;
mod render;
mod validate;

pub use dsl::{parse_rules, serialize, serialize_rule, RuleParseError};
pub use model::{
    Condition, Gender, Recommendation, Registry, RiskFactor, Rule, RuleId, RuleSet, MAX_CASE_AGE,
    MAX_CASE_FACTORS, MAX_RULE_AGE, MIN_CASE_AGE, MIN_CASE_FACTORS,
};
pub use render::render_rule_prompt;
pub use validate::{
    conditions_satisfiable, rule_reachable, validate_ruleset, validate_with_registry, Conflict,
    ValidationReport,
};

/// Source of the bundled rule pack.
pub const DEFAULT_RULES_TEXT: &str = include_str!("../../assets/rules/default.rules");

/// Path of the bundled pack relative to the core crate root.
pub const DEFAULT_RULES_PATH: &str = "assets/rules/default.rules";

pub fn default_ruleset() -> RuleSet {
    parse_rules(DEFAULT_RULES_TEXT).expect("bundled rule pack parses")
}
