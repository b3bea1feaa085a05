//! Text and Graphviz renderings of automata.
//!
//! The text format is line oriented:
//!
//! ```text
//! version: 1
//! formula: G cov_ok
//! props: cov_ok
//! [states]
//! 0
//! [initial]
//! 0
//! [accepting]
//! 0
//! [transitions]
//! 0 cov_ok 0
//! ```
//!
//! Each transition line is `src guard dst`, where the guard is `true` or a
//! `&`-joined list of literals such as `cov_ok&!qual_ok`.

use std::fmt::Write;

use super::{BuchiAutomaton, Guard, StateSet, Transition};

pub const AUTOMATON_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonTextError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported automaton format version")]
    Version,
    #[error(transparent)]
    Invalid(#[from] super::AutomatonError),
}

impl BuchiAutomaton {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "version: {AUTOMATON_FORMAT_VERSION}").unwrap();
        writeln!(out, "formula: {}", self.formula_text()).unwrap();
        writeln!(out, "props: {}", self.props().join(" ")).unwrap();
        out.push_str("[states]\n");
        for q in 0..self.num_states() {
            writeln!(out, "{q}").unwrap();
        }
        out.push_str("[initial]\n");
        for q in self.initial() {
            writeln!(out, "{q}").unwrap();
        }
        out.push_str("[accepting]\n");
        for q in self.accepting() {
            writeln!(out, "{q}").unwrap();
        }
        out.push_str("[transitions]\n");
        for t in self.transitions() {
            writeln!(out, "{} {} {}", t.src, self.guard_text(t.guard), t.dst).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AutomatonTextError> {
        let err = |line: usize, message: &str| AutomatonTextError::Malformed {
            line,
            message: message.to_string(),
        };
        let mut version = None;
        let mut formula = String::new();
        let mut props: Vec<String> = Vec::new();
        let mut section = "";
        let mut num_states = 0;
        let mut initial = StateSet::new();
        let mut accepting = StateSet::new();
        let mut transitions = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if l.starts_with('[') && l.ends_with(']') {
                section = match l {
                    "[states]" | "[initial]" | "[accepting]" | "[transitions]" => &l[1..l.len() - 1],
                    _ => return Err(err(line, "unknown section")),
                };
                continue;
            }
            let state = |s: &str| s.parse::<usize>().map_err(|_| err(line, "expected a state id"));
            match section {
                "" => {
                    let (key, value) = l.split_once(':').ok_or_else(|| err(line, "expected `key: value`"))?;
                    let value = value.trim();
                    match key.trim() {
                        "version" => version = value.parse::<u32>().ok(),
                        "formula" => formula = value.to_string(),
                        "props" => props = value.split_whitespace().map(str::to_string).collect(),
                        _ => return Err(err(line, "unknown header key")),
                    }
                }
                "states" => num_states = num_states.max(state(l)? + 1),
                "initial" => {
                    initial.insert(state(l)?);
                }
                "accepting" => {
                    accepting.insert(state(l)?);
                }
                _ => {
                    let parts: Vec<&str> = l.split_whitespace().collect();
                    let [src, guard, dst] = parts[..] else {
                        return Err(err(line, "expected `src guard dst`"));
                    };
                    let guard = parse_guard(guard, &props).ok_or_else(|| err(line, "bad guard"))?;
                    transitions.push(Transition {
                        src: state(src)?,
                        guard,
                        dst: state(dst)?,
                    });
                }
            }
        }
        if version != Some(AUTOMATON_FORMAT_VERSION) {
            return Err(AutomatonTextError::Version);
        }
        Ok(BuchiAutomaton::new(
            props,
            num_states,
            transitions,
            initial,
            accepting,
            formula,
        )?)
    }
}

fn parse_guard(text: &str, props: &[String]) -> Option<Guard> {
    let mut g = Guard::TRUE;
    if text == "true" {
        return Some(g);
    }
    for lit in text.split('&') {
        let (neg, name) = match lit.strip_prefix('!') {
            Some(rest) => (true, rest),
            None => (false, lit),
        };
        let bit = 1u64 << props.iter().position(|p| p == name)?;
        if neg {
            g.must_not |= bit;
        } else {
            g.must |= bit;
        }
    }
    Some(g)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: accepting states are double circles, initial states
/// have an arrow from an invisible point node. Output order is fixed.
pub fn to_dot(a: &BuchiAutomaton) -> String {
    let mut out = String::new();
    out.push_str("digraph buchi {\n");
    out.push_str("  rankdir=LR;\n");
    writeln!(out, "  label=\"{}\";", escape(a.formula_text())).unwrap();
    out.push_str("  node [shape=circle];\n");
    for q in 0..a.num_states() {
        if a.is_accepting(q) {
            writeln!(out, "  q{q} [shape=doublecircle];").unwrap();
        } else {
            writeln!(out, "  q{q};").unwrap();
        }
    }
    for q in a.initial() {
        writeln!(out, "  init{q} [shape=point];").unwrap();
        writeln!(out, "  init{q} -> q{q};").unwrap();
    }
    for t in a.transitions() {
        writeln!(
            out,
            "  q{} -> q{} [label=\"{}\"];",
            t.src,
            t.dst,
            escape(&a.guard_text(t.guard))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
