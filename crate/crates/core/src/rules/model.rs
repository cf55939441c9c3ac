use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Upper bound accepted for any age literal in a rule.
pub const MAX_RULE_AGE: u32 = 130;

/// Input space rules are evaluated over: ages and factor counts a use case may carry.
pub const MIN_CASE_AGE: u32 = 16;
pub const MAX_CASE_AGE: u32 = 90;
pub const MIN_CASE_FACTORS: usize = 1;
pub const MAX_CASE_FACTORS: usize = 4;

/// Closed registry of risk factors a rule or a case may reference.
///
/// Declaration order is the registry order used when rendering factor lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskFactor {
    BrcaMutation,
    FirstDegreeRelativeBrca,
    FamilyHistoryBreastCancer,
    #[serde(rename = "CHEST_RADIATION_THERAPY_AGE_10_30")]
    ChestRadiationTherapyAge10To30,
    LiFraumeniSyndrome,
    CowdenSyndrome,
    BannayanRileyRuvalcabaSyndrome,
    PersonalHistoryBreastCancer,
    DenseBreastTissue,
}

impl RiskFactor {
    pub const ALL: [RiskFactor; 9] = [
        RiskFactor::BrcaMutation,
        RiskFactor::FirstDegreeRelativeBrca,
        RiskFactor::FamilyHistoryBreastCancer,
        RiskFactor::ChestRadiationTherapyAge10To30,
        RiskFactor::LiFraumeniSyndrome,
        RiskFactor::CowdenSyndrome,
        RiskFactor::BannayanRileyRuvalcabaSyndrome,
        RiskFactor::PersonalHistoryBreastCancer,
        RiskFactor::DenseBreastTissue,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RiskFactor::BrcaMutation => "BRCA_MUTATION",
            RiskFactor::FirstDegreeRelativeBrca => "FIRST_DEGREE_RELATIVE_BRCA",
            RiskFactor::FamilyHistoryBreastCancer => "FAMILY_HISTORY_BREAST_CANCER",
            RiskFactor::ChestRadiationTherapyAge10To30 => "CHEST_RADIATION_THERAPY_AGE_10_30",
            RiskFactor::LiFraumeniSyndrome => "LI_FRAUMENI_SYNDROME",
            RiskFactor::CowdenSyndrome => "COWDEN_SYNDROME",
            RiskFactor::BannayanRileyRuvalcabaSyndrome => "BANNAYAN_RILEY_RUVALCABA_SYNDROME",
            RiskFactor::PersonalHistoryBreastCancer => "PERSONAL_HISTORY_BREAST_CANCER",
            RiskFactor::DenseBreastTissue => "DENSE_BREAST_TISSUE",
        }
    }

    /// Human-readable label. No label is a substring of another, so narrative
    /// text can be scanned for labels unambiguously.
    pub fn display_name(self) -> &'static str {
        match self {
            RiskFactor::BrcaMutation => "known BRCA1/BRCA2 gene mutation",
            RiskFactor::FirstDegreeRelativeBrca => "first-degree relative with a BRCA1/BRCA2 mutation",
            RiskFactor::FamilyHistoryBreastCancer => "family history of breast cancer",
            RiskFactor::ChestRadiationTherapyAge10To30 => {
                "radiation therapy to the chest between ages 10 and 30"
            }
            RiskFactor::LiFraumeniSyndrome => "Li-Fraumeni syndrome",
            RiskFactor::CowdenSyndrome => "Cowden syndrome",
            RiskFactor::BannayanRileyRuvalcabaSyndrome => "Bannayan-Riley-Ruvalcaba syndrome",
            RiskFactor::PersonalHistoryBreastCancer => "personal history of breast cancer",
            RiskFactor::DenseBreastTissue => "dense breast tissue",
        }
    }

    pub fn from_code(code: &str) -> Option<RiskFactor> {
        RiskFactor::ALL.into_iter().find(|f| f.code() == code)
    }
}

impl fmt::Display for RiskFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// The set of risk factors a generator or grid draws from, in registry order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    factors: Vec<RiskFactor>,
}

impl Registry {
    pub fn standard() -> Self {
        Self { factors: RiskFactor::ALL.to_vec() }
    }

    pub fn new(mut factors: Vec<RiskFactor>) -> Self {
        factors.sort();
        factors.dedup();
        Self { factors }
    }

    pub fn factors(&self) -> &[RiskFactor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

/// Screening action a rule concludes.
///
/// `priority` is a total order used for conflict resolution: the most
/// intensive follow-up wins. `ConsultPhysician` sits above every screening
/// action and doubles as the fallback when nothing fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Recommendation {
    NoRoutineScreening,
    OptionalAnnualMammogram,
    AnnualMammogram,
    BiennialOrAnnualMammogram,
    AnnualMriAndMammogram,
    ConsultPhysician,
}

impl Recommendation {
    pub const ALL: [Recommendation; 6] = [
        Recommendation::NoRoutineScreening,
        Recommendation::OptionalAnnualMammogram,
        Recommendation::AnnualMammogram,
        Recommendation::BiennialOrAnnualMammogram,
        Recommendation::AnnualMriAndMammogram,
        Recommendation::ConsultPhysician,
    ];

    pub const FALLBACK: Recommendation = Recommendation::ConsultPhysician;

    pub fn code(self) -> &'static str {
        match self {
            Recommendation::NoRoutineScreening => "NO_ROUTINE_SCREENING",
            Recommendation::OptionalAnnualMammogram => "OPTIONAL_ANNUAL_MAMMOGRAM",
            Recommendation::AnnualMammogram => "ANNUAL_MAMMOGRAM",
            Recommendation::BiennialOrAnnualMammogram => "BIENNIAL_OR_ANNUAL_MAMMOGRAM",
            Recommendation::AnnualMriAndMammogram => "ANNUAL_MRI_AND_MAMMOGRAM",
            Recommendation::ConsultPhysician => "CONSULT_PHYSICIAN",
        }
    }

    /// Phrase used in rule prompts ("THEN recommend <phrase>").
    pub fn phrase(self) -> &'static str {
        match self {
            Recommendation::NoRoutineScreening => "no routine screening",
            Recommendation::OptionalAnnualMammogram => "optional annual mammogram",
            Recommendation::AnnualMammogram => "annual mammogram",
            Recommendation::BiennialOrAnnualMammogram => "biennial or annual mammogram",
            Recommendation::AnnualMriAndMammogram => "annual MRI and mammogram",
            Recommendation::ConsultPhysician => "consultation with a physician",
        }
    }

    pub fn priority(self) -> u8 {
        match self {
            Recommendation::NoRoutineScreening => 0,
            Recommendation::OptionalAnnualMammogram => 1,
            Recommendation::BiennialOrAnnualMammogram => 2,
            Recommendation::AnnualMammogram => 3,
            Recommendation::AnnualMriAndMammogram => 4,
            Recommendation::ConsultPhysician => 5,
        }
    }

    pub fn from_code(code: &str) -> Option<Recommendation> {
        Recommendation::ALL.into_iter().find(|r| r.code() == code)
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Rule identifier of the form `R<positive integer>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(u32);

impl RuleId {
    pub fn new(n: u32) -> Option<Self> {
        (n > 0).then_some(RuleId(n))
    }

    pub fn number(self) -> u32 {
        self.0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix('R')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| format!("rule id {s:?} does not match R<positive integer>"))?;
        digits
            .parse::<u32>()
            .ok()
            .and_then(RuleId::new)
            .ok_or_else(|| format!("rule id {s:?} does not match R<positive integer>"))
    }
}

impl Serialize for RuleId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RuleId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One atom of a rule's condition conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    GenderIs(Gender),
    /// Inclusive on both ends.
    AgeInRange { low: u32, high: u32 },
    HasRiskFactor(RiskFactor),
    RiskFactorCountAtLeast(u32),
}

impl fmt::Display for Condition {
    /// DSL spelling of the condition.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::GenderIs(g) => write!(f, "gender_is({g})"),
            Condition::AgeInRange { low, high } => write!(f, "age_in({low},{high})"),
            Condition::HasRiskFactor(rf) => write!(f, "has_risk_factor({})", rf.code()),
            Condition::RiskFactorCountAtLeast(n) => write!(f, "risk_factor_count_at_least({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub rule_id: RuleId,
    pub name: String,
    pub conditions: Vec<Condition>,
    pub recommendation: Recommendation,
    pub source_note: String,
}

/// Ordered rule collection. Construct through [`RuleSet::new`] or the parser so
/// the checksum always matches the canonical text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    version: String,
    checksum: String,
}

impl RuleSet {
    pub const DEFAULT_VERSION: &'static str = "0";

    pub fn new(version: impl Into<String>, rules: Vec<Rule>) -> Result<Self, String> {
        let mut seen = std::collections::BTreeSet::new();
        for rule in &rules {
            if !seen.insert(rule.rule_id) {
                return Err(format!("duplicate rule id {}", rule.rule_id));
            }
            if rule.conditions.is_empty() {
                return Err(format!("rule {} has no conditions", rule.rule_id));
            }
        }
        let mut rs = Self { rules, version: version.into(), checksum: String::new() };
        rs.checksum = super::dsl::checksum_of(&super::dsl::serialize(&rs));
        Ok(rs)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// SHA-256 hex digest of the canonical serialization.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn ids(&self) -> Vec<RuleId> {
        self.rules.iter().map(|r| r.rule_id).collect()
    }

    pub fn get(&self, id: RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| r.rule_id == id)
    }
}
