//! The line-oriented score document format.
//!
//! ```text
//! # Moore space M(Z/2, 0)
//! base_degree 0
//! object a level 1 label "top"
//! object b level 0
//! points a b 2
//! ```
//!
//! `eta` lines join objects two levels apart and `epsilon` lines (value `0`,
//! `1` or `unknown`) join level 3 to level 0. Omitted entries are empty.

use std::fmt;
use std::fmt::Write as _;

use flowcat_core::score::{validate, Eps, FlowScore};
use num_bigint::BigInt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Splits a line into whitespace-separated tokens; a double-quoted token may
/// contain spaces and `\"` or `\\` escapes.
fn tokenize(line: &str, n: usize) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            chars.next();
            let mut tok = String::new();
            loop {
                match chars.next() {
                    None => return Err(err(n, "unterminated string")),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some(e @ ('"' | '\\')) => tok.push(e),
                        _ => return Err(err(n, "bad escape in string")),
                    },
                    Some(ch) => tok.push(ch),
                }
            }
            out.push(tok);
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            out.push(tok);
        }
    }
    Ok(out)
}

/// Parses and validates a score document.
///
/// ε entries whose support fails are set to `unknown`, whatever the
/// document says about them.
pub fn parse_score(text: &str) -> Result<FlowScore, ParseError> {
    let mut s = FlowScore::new(0);
    let mut saw_base = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let toks = tokenize(raw, n)?;
        let Some(head) = toks.first() else {
            continue;
        };
        let t: Vec<&str> = toks.iter().map(String::as_str).collect();
        let e = |e: flowcat_core::score::ScoreError| err(n, e.to_string());
        match (head.as_str(), t.len()) {
            ("base_degree", 2) => {
                if saw_base {
                    return Err(err(n, "base_degree given twice"));
                }
                if !s.is_empty() {
                    return Err(err(n, "base_degree must come before any object"));
                }
                let d: i64 = t[1]
                    .parse()
                    .map_err(|_| err(n, format!("bad degree `{}`", t[1])))?;
                s.set_base_degree(d);
                saw_base = true;
            }
            ("object", 4) | ("object", 6) => {
                if t[2] != "level" {
                    return Err(err(n, "expected `object <id> level <0..3>`"));
                }
                let level: i64 = t[3]
                    .parse()
                    .map_err(|_| err(n, format!("bad level `{}`", t[3])))?;
                let level = u8::try_from(level)
                    .ok()
                    .filter(|l| *l <= 3)
                    .ok_or_else(|| err(n, format!("level {level} is outside 0..=3")))?;
                let label = if t.len() == 6 {
                    if t[4] != "label" {
                        return Err(err(n, "expected `label \"<text>\"`"));
                    }
                    t[5]
                } else {
                    ""
                };
                s.add_object(t[1], level, label).map_err(e)?;
            }
            ("points", 4) => {
                let v: BigInt = t[3]
                    .parse()
                    .map_err(|_| err(n, format!("bad point count `{}`", t[3])))?;
                if s.points(t[1], t[2]) != BigInt::default() {
                    return Err(err(n, format!("points {} {} given twice", t[1], t[2])));
                }
                s.set_points(t[1], t[2], v).map_err(e)?;
            }
            ("eta", 3) => {
                s.set_eta(t[1], t[2], true).map_err(e)?;
            }
            ("epsilon", 4) => {
                let v = match t[3] {
                    "0" => Eps::Zero,
                    "1" => Eps::One,
                    "unknown" => Eps::Unknown,
                    other => return Err(err(n, format!("bad epsilon value `{other}`"))),
                };
                s.set_eps(t[1], t[2], v).map_err(e)?;
            }
            ("base_degree" | "object" | "points" | "eta" | "epsilon", _) => {
                return Err(err(n, format!("wrong number of fields for `{head}`")));
            }
            _ => return Err(err(n, format!("unknown directive `{head}`"))),
        }
    }
    s.force_unknown_where_unsupported();
    let report = validate(&s);
    if !report.is_empty() {
        return Err(err(0, format!("invalid score: {report}")));
    }
    Ok(s)
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn plain_id(id: &str) -> bool {
    !id.is_empty() && !id.contains(|c: char| c.is_whitespace() || c == '"' || c == '#')
}

/// Canonical text of a score: objects sorted by id, then entries sorted by
/// endpoints. `unknown` ε entries are written only where the parser would
/// not infer them.
pub fn serialize_score(s: &FlowScore) -> String {
    let mut out = String::new();
    writeln!(out, "base_degree {}", s.base_degree()).unwrap();
    for o in s.objects() {
        let id = if plain_id(&o.id) {
            o.id.clone()
        } else {
            quote(&o.id)
        };
        write!(out, "object {id} level {}", o.level).unwrap();
        if !o.label.is_empty() {
            write!(out, " label {}", quote(&o.label)).unwrap();
        }
        out.push('\n');
    }
    let id = |x: &str| if plain_id(x) { x.to_string() } else { quote(x) };
    for (a, b, n) in s.points_entries() {
        writeln!(out, "points {} {} {n}", id(a), id(b)).unwrap();
    }
    for (a, b) in s.eta_entries() {
        writeln!(out, "eta {} {}", id(a), id(b)).unwrap();
    }
    for (a, b, v) in s.eps_entries() {
        if v == Eps::One || s.eps_support_holds(a, b) {
            writeln!(out, "epsilon {} {} {v}", id(a), id(b)).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOORE: &str = "base_degree 0\nobject a level 1\nobject b level 0\npoints a b 2\n";

    #[test]
    fn minimal_moore() {
        let s = parse_score(MOORE).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points("a", "b"), BigInt::from(2));
        assert_eq!(serialize_score(&s), MOORE);
    }

    #[test]
    fn eta_across_one_level_is_rejected() {
        let doc = "object a level 1\nobject b level 0\neta a b\n";
        let e = parse_score(doc).unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let doc = "# header\nobject a level 1\nobject a level 0\n";
        assert_eq!(parse_score(doc).unwrap_err().line, 3);
        assert_eq!(parse_score("object z level 4\n").unwrap_err().line, 1);
        assert_eq!(parse_score("\n\nfoo bar\n").unwrap_err().line, 3);
        assert_eq!(
            parse_score("object a level 1\npoints a q 1\n")
                .unwrap_err()
                .line,
            2
        );
    }

    #[test]
    fn chain_violation_is_a_validation_error() {
        let doc =
            "object a level 2\nobject b level 1\nobject c level 0\npoints a b 1\npoints b c 1\n";
        let e = parse_score(doc).unwrap_err();
        assert_eq!(e.line, 0);
        assert!(e.message.contains("CHAIN"));
    }

    #[test]
    fn labels_and_odd_ids_round_trip() {
        let doc = "base_degree -2\nobject \"x y\" level 3 label \"say \\\"hi\\\"\"\nobject b level 2\npoints \"x y\" b -3\n";
        let s = parse_score(doc).unwrap();
        assert_eq!(s.object("x y").unwrap().label, "say \"hi\"");
        let text = serialize_score(&s);
        assert_eq!(parse_score(&text).unwrap(), s);
        assert_eq!(serialize_score(&parse_score(&text).unwrap()), text);
    }

    #[test]
    fn unsupported_epsilon_becomes_unknown() {
        let doc = "object a level 3\nobject b level 2\nobject c level 0\npoints a b 2\neta b c\nepsilon a c 0\n";
        let s = parse_score(doc).unwrap();
        assert_eq!(s.eps("a", "c"), Eps::Unknown);
        assert!(!serialize_score(&s).contains("epsilon"));
    }
}
