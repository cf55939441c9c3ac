//! Extraction of the labeled reply block from free-form model output.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::rules::{Recommendation, RuleId};

/// A recommendation as read from a model reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelRecommendation {
    Known(Recommendation),
    Unparseable,
}

impl ModelRecommendation {
    pub const UNPARSEABLE: &'static str = "UNPARSEABLE";

    pub fn known(self) -> Option<Recommendation> {
        match self {
            ModelRecommendation::Known(r) => Some(r),
            ModelRecommendation::Unparseable => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            ModelRecommendation::Known(r) => r.code(),
            ModelRecommendation::Unparseable => Self::UNPARSEABLE,
        }
    }
}

impl fmt::Display for ModelRecommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for ModelRecommendation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for ModelRecommendation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == Self::UNPARSEABLE {
            return Ok(ModelRecommendation::Unparseable);
        }
        Recommendation::from_code(&s)
            .map(ModelRecommendation::Known)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown recommendation {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub recommendation: ModelRecommendation,
    pub cited_rules: BTreeSet<RuleId>,
    /// Rule-id-shaped citations that are not among the loaded rules.
    pub unknown_citations: BTreeSet<String>,
    pub explanation: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Label {
    Recommendation,
    Triggered,
    Explanation,
}

struct LabelHit {
    label: Label,
    start: usize,
    value_start: usize,
}

fn label_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?i)(?:^|[^A-Za-z0-9_])([*_#>\s"']*)(RECOMMENDATION|TRIGGERED[ _-]?RULES?(?:[ _-]?TRIGGERED)?|EXPLANATION)[*_\s"']*:[*_]*"#,
        )
        .expect("label regex")
    })
}

fn rule_id_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[Rr](\d+)\b").expect("rule id regex"))
}

fn find_labels(raw: &str) -> Vec<LabelHit> {
    label_regex()
        .captures_iter(raw)
        .map(|cap| {
            let name = cap.get(2).expect("label group");
            let upper = name.as_str().to_ascii_uppercase();
            let label = if upper.starts_with("RECOMMENDATION") {
                Label::Recommendation
            } else if upper.starts_with("TRIGGERED") {
                Label::Triggered
            } else {
                Label::Explanation
            };
            let whole = cap.get(0).expect("match");
            LabelHit { label, start: name.start(), value_start: whole.end() }
        })
        .collect()
}

/// Value runs to the end of its line or to the next label, whichever is first.
fn line_value<'a>(raw: &'a str, hit: &LabelHit, next_start: Option<usize>) -> &'a str {
    let rest_end = raw[hit.value_start..].find('\n').map_or(raw.len(), |i| hit.value_start + i);
    let end = next_start.map_or(rest_end, |n| n.min(rest_end)).max(hit.value_start);
    raw[hit.value_start..end].trim()
}

/// Explanation runs until a blank line, the next block label, or the end.
fn explanation_value<'a>(raw: &'a str, hit: &LabelHit, next_start: Option<usize>) -> &'a str {
    let tail = &raw[hit.value_start..];
    let mut end = raw.len();
    let mut offset = 0;
    for (i, line) in tail.split_inclusive('\n').enumerate() {
        if i > 0 && line.trim().is_empty() {
            end = hit.value_start + offset;
            break;
        }
        offset += line.len();
    }
    if let Some(n) = next_start {
        end = end.min(n);
    }
    raw[hit.value_start..end.max(hit.value_start)].trim()
}

fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_sep = false;
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.push(c.to_ascii_uppercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

fn recommendation_aliases() -> &'static [(String, Recommendation)] {
    static ALIASES: OnceLock<Vec<(String, Recommendation)>> = OnceLock::new();
    ALIASES.get_or_init(|| {
        let mut v: Vec<(String, Recommendation)> = Vec::new();
        for r in Recommendation::ALL {
            v.push((r.code().to_string(), r));
            v.push((normalize(r.phrase()), r));
        }
        for (alias, r) in [
            ("consult a physician", Recommendation::ConsultPhysician),
            ("consult your physician", Recommendation::ConsultPhysician),
            ("consult physician", Recommendation::ConsultPhysician),
            ("annual MRI and annual mammogram", Recommendation::AnnualMriAndMammogram),
            ("yearly MRI and mammogram", Recommendation::AnnualMriAndMammogram),
            ("yearly mammogram", Recommendation::AnnualMammogram),
        ] {
            v.push((normalize(alias), r));
        }
        v.sort();
        v.dedup();
        v
    })
}

/// Earliest alias occurrence at token boundaries; the longest alias wins ties.
pub fn match_recommendation(value: &str) -> Option<Recommendation> {
    let norm = normalize(value);
    let bytes = norm.as_bytes();
    let mut best: Option<(usize, usize, Recommendation)> = None;
    for (alias, rec) in recommendation_aliases() {
        let mut from = 0;
        while let Some(pos) = norm[from..].find(alias.as_str()) {
            let start = from + pos;
            let end = start + alias.len();
            let left_ok = start == 0 || bytes[start - 1] == b'_';
            let right_ok = end == norm.len() || bytes[end] == b'_';
            if left_ok && right_ok {
                let better = match best {
                    None => true,
                    Some((s, len, _)) => start < s || (start == s && alias.len() > len),
                };
                if better {
                    best = Some((start, alias.len(), *rec));
                }
                break;
            }
            from = start + 1;
        }
    }
    best.map(|(_, _, r)| r)
}

/// Split citations into loaded ids and everything else that looks like an id.
pub fn extract_citations(
    value: &str,
    known: &BTreeSet<RuleId>,
) -> (BTreeSet<RuleId>, BTreeSet<String>) {
    let mut cited = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    for cap in rule_id_regex().captures_iter(value) {
        let digits = &cap[1];
        match digits.parse::<u32>().ok().and_then(RuleId::new) {
            Some(id) if known.contains(&id) => {
                cited.insert(id);
            }
            Some(id) => {
                unknown.insert(id.to_string());
            }
            None => {
                unknown.insert(format!("R{digits}"));
            }
        }
    }
    (cited, unknown)
}

/// Total: never fails, degrades to `Unparseable` and empty sets.
pub fn parse_response(raw: &str, known: &BTreeSet<RuleId>) -> ParsedResponse {
    let hits = find_labels(raw);
    let next_after = |i: usize| hits.get(i + 1).map(|h| h.start);

    // Anchor on the last RECOMMENDATION label that is followed by a
    // TRIGGERED_RULES label; otherwise the last RECOMMENDATION label at all.
    let rec_positions: Vec<usize> =
        (0..hits.len()).filter(|&i| hits[i].label == Label::Recommendation).collect();
    let anchor = rec_positions
        .iter()
        .rev()
        .copied()
        .find(|&i| hits[i + 1..].iter().any(|h| h.label == Label::Triggered))
        .or_else(|| rec_positions.last().copied());

    let find_after = |label: Label, from: Option<usize>| -> Option<usize> {
        match from {
            Some(a) => (a + 1..hits.len())
                .find(|&i| hits[i].label == label)
                .or_else(|| (0..hits.len()).rev().find(|&i| hits[i].label == label)),
            None => (0..hits.len()).rev().find(|&i| hits[i].label == label),
        }
    };

    let recommendation = anchor
        .map(|i| line_value(raw, &hits[i], next_after(i)))
        .and_then(match_recommendation)
        .map_or(ModelRecommendation::Unparseable, ModelRecommendation::Known);

    let trig_idx = find_after(Label::Triggered, anchor);
    let (cited_rules, unknown_citations) = trig_idx
        .map(|i| extract_citations(line_value(raw, &hits[i], next_after(i)), known))
        .unwrap_or_default();

    let explanation = find_after(Label::Explanation, trig_idx.or(anchor))
        .map(|i| {
            let next_rec = hits[i + 1..]
                .iter()
                .find(|h| h.label == Label::Recommendation)
                .map(|h| h.start);
            explanation_value(raw, &hits[i], next_rec).to_string()
        })
        .unwrap_or_default();

    ParsedResponse { recommendation, cited_rules, unknown_citations, explanation }
}
