//! Line-oriented rule DSL.
//!
//! ```text
//! file       = { line } ;
//! line       = blank | comment | version | rule ;
//! comment    = "#" { any } ;
//! version    = "VERSION" string ;
//! rule       = "RULE" rule_id string "IF" condition { "AND" condition }
//!              "THEN" recommendation [ "NOTE" string ] ;
//! condition  = "gender_is" "(" ( "female" | "male" ) ")"
//!            | "age_in" "(" int "," int ")"
//!            | "has_risk_factor" "(" risk_code ")"
//!            | "risk_factor_count_at_least" "(" int ")" ;
//! rule_id    = "R" digit { digit } ;
//! string     = '"' { char | '\"' | '\\' } '"' ;
//! ```
//!
//! One rule per line. Keywords are upper case; condition names lower case.

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::model::{
    Condition, Gender, Recommendation, RiskFactor, Rule, RuleId, RuleSet, MAX_RULE_AGE,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleParseError {
    #[error("line {line}, column {column}: expected {expected}, found {found}")]
    Syntax { line: usize, column: usize, expected: String, found: String },
    #[error("line {line}: duplicate rule id {rule_id}")]
    DuplicateRuleId { line: usize, rule_id: String },
    #[error("line {line}: unknown risk factor {code}")]
    UnknownRiskFactor { line: usize, code: String },
    #[error("line {line}, column {column}: {reason}")]
    InvalidCondition { line: usize, column: usize, reason: String },
}

impl RuleParseError {
    pub fn line(&self) -> usize {
        match self {
            RuleParseError::Syntax { line, .. }
            | RuleParseError::DuplicateRuleId { line, .. }
            | RuleParseError::UnknownRiskFactor { line, .. }
            | RuleParseError::InvalidCondition { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "\"(\"".into(),
            Tok::RParen => "\")\"".into(),
            Tok::Comma => "\",\"".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    column: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn tokenize(line_no: usize, line: &str) -> Result<Vec<Spanned>, RuleParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(RuleParseError::Syntax {
                                line: line_no,
                                column: i + 1,
                                expected: "closing '\"'".into(),
                                found: "end of line".into(),
                            })
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => match chars.get(i + 1) {
                            Some(&e @ ('"' | '\\')) => {
                                s.push(e);
                                i += 2;
                            }
                            other => {
                                return Err(RuleParseError::Syntax {
                                    line: line_no,
                                    column: i + 2,
                                    expected: "escape '\\\"' or '\\\\'".into(),
                                    found: other.map_or("end of line".into(), |c| format!("{c:?}")),
                                })
                            }
                        },
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if is_word_char(c) => {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                Tok::Word(chars[start..i].iter().collect())
            }
            other => {
                return Err(RuleParseError::Syntax {
                    line: line_no,
                    column,
                    expected: "a word, string or punctuation".into(),
                    found: format!("{other:?}"),
                })
            }
        };
        out.push(Spanned { tok, column });
    }
    Ok(out)
}

struct LineParser<'a> {
    line: usize,
    toks: &'a [Spanned],
    pos: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn syntax(&self, expected: &str) -> RuleParseError {
        RuleParseError::Syntax {
            line: self.line,
            column: self.column(),
            expected: expected.to_string(),
            found: self.toks.get(self.pos).map_or("end of line".into(), |t| t.tok.describe()),
        }
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), RuleParseError> {
        match self.peek() {
            Some(Tok::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax(&format!("keyword {kw}"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(&'a str, usize), RuleParseError> {
        let column = self.column();
        match self.peek() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok((w.as_str(), column))
            }
            _ => Err(self.syntax(what)),
        }
    }

    fn string(&mut self, what: &str) -> Result<&'a str, RuleParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(s.as_str())
            }
            _ => Err(self.syntax(what)),
        }
    }

    fn punct(&mut self, p: Tok, what: &str) -> Result<(), RuleParseError> {
        if self.peek() == Some(&p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(what))
        }
    }

    fn int(&mut self) -> Result<(u32, usize), RuleParseError> {
        let column = self.column();
        match self.peek() {
            Some(Tok::Word(w)) if w.bytes().all(|b| b.is_ascii_digit()) => {
                let v = w.parse::<u32>().map_err(|_| RuleParseError::InvalidCondition {
                    line: self.line,
                    column,
                    reason: format!("integer {w} out of range"),
                })?;
                self.pos += 1;
                Ok((v, column))
            }
            _ => Err(self.syntax("a non-negative integer")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn condition(&mut self) -> Result<Condition, RuleParseError> {
        let (name, _) = self.word("a condition")?;
        self.punct(Tok::LParen, "\"(\"")?;
        let cond = match name {
            "gender_is" => {
                let (g, column) = self.word("female or male")?;
                let gender = g.parse::<Gender>().map_err(|_| RuleParseError::Syntax {
                    line: self.line,
                    column,
                    expected: "female or male".into(),
                    found: format!("{g:?}"),
                })?;
                Condition::GenderIs(gender)
            }
            "age_in" => {
                let (low, lc) = self.int()?;
                self.punct(Tok::Comma, "\",\"")?;
                let (high, hc) = self.int()?;
                for (v, c) in [(low, lc), (high, hc)] {
                    if v > MAX_RULE_AGE {
                        return Err(RuleParseError::InvalidCondition {
                            line: self.line,
                            column: c,
                            reason: format!("age bound {v} exceeds {MAX_RULE_AGE}"),
                        });
                    }
                }
                // low > high is accepted here and reported as unreachable by validation.
                Condition::AgeInRange { low, high }
            }
            "has_risk_factor" => {
                let (code, _) = self.word("a risk factor code")?;
                let rf = RiskFactor::from_code(code).ok_or_else(|| {
                    RuleParseError::UnknownRiskFactor { line: self.line, code: code.to_string() }
                })?;
                Condition::HasRiskFactor(rf)
            }
            "risk_factor_count_at_least" => Condition::RiskFactorCountAtLeast(self.int()?.0),
            _ => {
                self.pos -= 2;
                return Err(self.syntax(
                    "gender_is, age_in, has_risk_factor or risk_factor_count_at_least",
                ));
            }
        };
        self.punct(Tok::RParen, "\")\"")?;
        Ok(cond)
    }

    fn rule(&mut self) -> Result<Rule, RuleParseError> {
        self.keyword("RULE")?;
        let (id_text, id_col) = self.word("a rule id R<n>")?;
        let rule_id = id_text.parse::<RuleId>().map_err(|_| RuleParseError::Syntax {
            line: self.line,
            column: id_col,
            expected: "a rule id R<n>".into(),
            found: format!("{id_text:?}"),
        })?;
        let name_col = self.column();
        let name = self.string("a quoted rule name")?;
        if name.is_empty()
            || !name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        {
            return Err(RuleParseError::Syntax {
                line: self.line,
                column: name_col,
                expected: "a slug name of [a-z0-9_-]".into(),
                found: format!("{name:?}"),
            });
        }
        self.keyword("IF")?;
        let mut conditions = vec![self.condition()?];
        loop {
            match self.peek() {
                Some(Tok::Word(w)) if w == "AND" => {
                    self.pos += 1;
                    conditions.push(self.condition()?);
                }
                _ => break,
            }
        }
        self.keyword("THEN")?;
        let (rec_text, rec_col) = self.word("a recommendation code")?;
        let recommendation =
            Recommendation::from_code(rec_text).ok_or_else(|| RuleParseError::Syntax {
                line: self.line,
                column: rec_col,
                expected: "a recommendation code".into(),
                found: format!("{rec_text:?}"),
            })?;
        let source_note = if self.peek() == Some(&Tok::Word("NOTE".into())) {
            self.pos += 1;
            self.string("a quoted note")?.to_string()
        } else {
            String::new()
        };
        if !self.at_end() {
            return Err(self.syntax("end of line"));
        }
        Ok(Rule { rule_id, name: name.to_string(), conditions, recommendation, source_note })
    }
}

/// Parse rule DSL text into a [`RuleSet`], preserving source order.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleParseError> {
    let mut rules = Vec::new();
    let mut version: Option<String> = None;
    let mut seen = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks = tokenize(line_no, raw)?;
        let mut p = LineParser { line: line_no, toks: &toks, pos: 0, end_column: raw.chars().count() + 1 };
        match p.peek() {
            Some(Tok::Word(w)) if w == "VERSION" => {
                if version.is_some() {
                    return Err(p.syntax("at most one VERSION line"));
                }
                p.next();
                version = Some(p.string("a quoted version")?.to_string());
                if !p.at_end() {
                    return Err(p.syntax("end of line"));
                }
            }
            Some(Tok::Word(w)) if w == "RULE" => {
                let rule = p.rule()?;
                if !seen.insert(rule.rule_id) {
                    return Err(RuleParseError::DuplicateRuleId {
                        line: line_no,
                        rule_id: rule.rule_id.to_string(),
                    });
                }
                rules.push(rule);
            }
            _ => return Err(p.syntax("RULE or VERSION")),
        }
    }

    let version = version.unwrap_or_else(|| RuleSet::DEFAULT_VERSION.to_string());
    // Duplicates and empty conjunctions were rejected above.
    Ok(RuleSet::new(version, rules).expect("parsed rules satisfy RuleSet invariants"))
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Canonical DSL line for one rule.
pub fn serialize_rule(rule: &Rule) -> String {
    let conds = rule.conditions.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" AND ");
    let mut line = format!(
        "RULE {} {} IF {} THEN {}",
        rule.rule_id,
        quote(&rule.name),
        conds,
        rule.recommendation.code()
    );
    if !rule.source_note.is_empty() {
        line.push_str(" NOTE ");
        line.push_str(&quote(&rule.source_note));
    }
    line
}

/// Canonical text: a VERSION line followed by one rule per line in order.
pub fn serialize(rs: &RuleSet) -> String {
    let mut out = format!("VERSION {}\n", quote(rs.version()));
    for rule in rs.rules() {
        out.push_str(&serialize_rule(rule));
        out.push('\n');
    }
    out
}

pub(crate) fn checksum_of(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rule_line() {
        let rs = parse_rules(
            "RULE R1 \"brca_high_risk\" IF has_risk_factor(BRCA_MUTATION) AND age_in(30,130) THEN ANNUAL_MRI_AND_MAMMOGRAM",
        )
        .unwrap();
        assert_eq!(rs.len(), 1);
        let r = &rs.rules()[0];
        assert_eq!(r.rule_id.to_string(), "R1");
        assert_eq!(r.conditions.len(), 2);
        assert_eq!(r.recommendation, Recommendation::AnnualMriAndMammogram);
        assert_eq!(rs.version(), "0");
    }

    #[test]
    fn missing_then_reports_line_of_rule() {
        let err = parse_rules("# header\n\nRULE R1 \"x\" IF age_in(30,130)").unwrap_err();
        match err {
            RuleParseError::Syntax { line, ref expected, .. } => {
                assert_eq!(line, 3);
                assert!(expected.contains("THEN"), "{expected}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_unknown() {
        let dup = "RULE R1 \"a\" IF age_in(1,2) THEN ANNUAL_MAMMOGRAM\nRULE R1 \"b\" IF age_in(1,2) THEN ANNUAL_MAMMOGRAM";
        assert_eq!(
            parse_rules(dup).unwrap_err(),
            RuleParseError::DuplicateRuleId { line: 2, rule_id: "R1".into() }
        );
        let unk = "RULE R1 \"a\" IF has_risk_factor(SMOKING) THEN ANNUAL_MAMMOGRAM";
        assert_eq!(
            parse_rules(unk).unwrap_err(),
            RuleParseError::UnknownRiskFactor { line: 1, code: "SMOKING".into() }
        );
    }

    #[test]
    fn assorted_syntax_errors_carry_lines() {
        let cases = [
            ("RULE", 1),
            ("RULE R0 \"a\" IF age_in(1,2) THEN ANNUAL_MAMMOGRAM", 1),
            ("\nRULE R1 \"a\" IF age_in(1 2) THEN ANNUAL_MAMMOGRAM", 2),
            ("RULE R1 \"a\" IF age_in(1,2) THEN MAYBE", 1),
            ("RULE R1 \"a\" IF age_in(1,2) THEN ANNUAL_MAMMOGRAM extra", 1),
            ("RULE R1 \"a\" IF age_in(1,200) THEN ANNUAL_MAMMOGRAM", 1),
            ("RULE R1 \"a\" IF gender_is(other) THEN ANNUAL_MAMMOGRAM", 1),
            ("RULE R1 \"a\" IF bogus(1) THEN ANNUAL_MAMMOGRAM", 1),
            ("RULE R1 \"Bad Name\" IF age_in(1,2) THEN ANNUAL_MAMMOGRAM", 1),
            ("RULE R1 \"unterminated IF age_in(1,2)", 1),
            ("RULE R1 \"a\" IF THEN ANNUAL_MAMMOGRAM", 1),
            ("IF age_in(1,2)", 1),
            ("RULE R1 \"a\" IF age_in(1,2) @ THEN ANNUAL_MAMMOGRAM", 1),
            ("VERSION \"1\"\nVERSION \"2\"", 2),
        ];
        for (text, line) in cases {
            let err = parse_rules(text).expect_err(text);
            assert_eq!(err.line(), line, "{text}: {err}");
        }
    }

    #[test]
    fn comments_blank_lines_note_and_escapes() {
        let text = "  # comment\n\nVERSION \"2024.1\"\nRULE R7 \"x\" IF gender_is(female) AND risk_factor_count_at_least(2) THEN CONSULT_PHYSICIAN NOTE \"say \\\"hi\\\" # not a comment\"\n";
        let rs = parse_rules(text).unwrap();
        assert_eq!(rs.version(), "2024.1");
        assert_eq!(rs.rules()[0].source_note, "say \"hi\" # not a comment");
        let again = parse_rules(&serialize(&rs)).unwrap();
        assert_eq!(again, rs);
    }

    #[test]
    fn reversed_age_bounds_parse() {
        let rs = parse_rules("RULE R1 \"x\" IF age_in(50,40) THEN ANNUAL_MAMMOGRAM").unwrap();
        assert_eq!(rs.rules()[0].conditions[0], Condition::AgeInRange { low: 50, high: 40 });
    }
}
