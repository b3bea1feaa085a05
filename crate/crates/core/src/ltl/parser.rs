//! Recursive-descent parser and canonical printer for LTL intents.

use std::fmt;

use super::{LtlFormula, PropositionCatalog};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of: {}", expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown proposition `{name}` at byte {offset}")]
    UnknownProposition { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownProposition { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Eventually,
    Always,
    Until,
    Release,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(name) => write!(f, "proposition `{name}`"),
            Tok::True => f.write_str("`true`"),
            Tok::False => f.write_str("`false`"),
            Tok::Not => f.write_str("`!`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Implies => f.write_str("`->`"),
            Tok::Next => f.write_str("`X`"),
            Tok::Eventually => f.write_str("`F`"),
            Tok::Always => f.write_str("`G`"),
            Tok::Until => f.write_str("`U`"),
            Tok::Release => f.write_str("`R`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = pos;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = i + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let word = &text[pos..end];
            match word {
                "true" => out.push((Tok::True, pos)),
                "false" => out.push((Tok::False, pos)),
                "U" => out.push((Tok::Until, pos)),
                "R" => out.push((Tok::Release, pos)),
                // Runs of unary operators such as `GF` or `XXG`.
                w if w.chars().all(|c| matches!(c, 'G' | 'F' | 'X')) => {
                    for (k, c) in w.char_indices() {
                        let tok = match c {
                            'G' => Tok::Always,
                            'F' => Tok::Eventually,
                            _ => Tok::Next,
                        };
                        out.push((tok, pos + k));
                    }
                }
                w => out.push((Tok::Ident(w.to_string()), pos)),
            }
            continue;
        }
        chars.next();
        let two = |chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>, next: char| {
            if chars.peek().map(|&(_, c)| c) == Some(next) {
                chars.next();
                true
            } else {
                false
            }
        };
        let tok = match c {
            '!' | '~' | '¬' => Tok::Not,
            '&' => {
                two(&mut chars, '&');
                Tok::And
            }
            '|' => {
                two(&mut chars, '|');
                Tok::Or
            }
            '∧' => Tok::And,
            '∨' => Tok::Or,
            '○' => Tok::Next,
            '◇' => Tok::Eventually,
            '□' => Tok::Always,
            '𝔘' => Tok::Until,
            '⊤' => Tok::True,
            '⊥' => Tok::False,
            '→' => Tok::Implies,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' if two(&mut chars, '>') => Tok::Implies,
            '[' if two(&mut chars, ']') => Tok::Always,
            '<' if two(&mut chars, '>') => Tok::Eventually,
            other => {
                return Err(ParseError::Syntax {
                    offset: pos,
                    found: format!("character `{other}`"),
                    expected: operand_start(),
                })
            }
        };
        out.push((tok, pos));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

fn operand_start() -> Vec<String> {
    ["proposition", "true", "false", "(", "!", "X", "F", "G"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    catalog: Option<&'a PropositionCatalog>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            found: self.peek().to_string(),
            expected,
        }
    }

    fn implication(&mut self) -> Result<LtlFormula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(LtlFormula::or(LtlFormula::not(lhs), rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<LtlFormula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = LtlFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<LtlFormula, ParseError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.binary_temporal()?;
            lhs = LtlFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<LtlFormula, ParseError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                Ok(LtlFormula::until(lhs, self.binary_temporal()?))
            }
            Tok::Release => {
                self.bump();
                Ok(LtlFormula::release(lhs, self.binary_temporal()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<LtlFormula, ParseError> {
        let wrap: fn(LtlFormula) -> LtlFormula = match self.peek() {
            Tok::Not => LtlFormula::not,
            Tok::Next => LtlFormula::next,
            Tok::Eventually => LtlFormula::eventually,
            Tok::Always => LtlFormula::always,
            _ => return self.primary(),
        };
        self.bump();
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<LtlFormula, ParseError> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(LtlFormula::True)
            }
            Tok::False => {
                self.bump();
                Ok(LtlFormula::False)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                if let Some(catalog) = self.catalog {
                    if catalog.get(&name).is_none() {
                        return Err(ParseError::UnknownProposition { name, offset });
                    }
                }
                self.bump();
                Ok(LtlFormula::Atom(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(vec![
                        ")".into(),
                        "&".into(),
                        "|".into(),
                        "U".into(),
                        "R".into(),
                        "->".into(),
                    ]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(operand_start())),
        }
    }
}

fn parse_with(text: &str, catalog: Option<&PropositionCatalog>) -> Result<LtlFormula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, catalog };
    let f = p.implication()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(vec![
            "end of input".into(),
            "&".into(),
            "|".into(),
            "U".into(),
            "R".into(),
            "->".into(),
        ]));
    }
    Ok(f)
}

/// Parses `text` and checks every atom against `catalog`.
pub fn parse_ltl(text: &str, catalog: &PropositionCatalog) -> Result<LtlFormula, ParseError> {
    parse_with(text, Some(catalog))
}

pub(super) fn parse_unchecked(text: &str) -> Result<LtlFormula, ParseError> {
    parse_with(text, None)
}

// Binding strength used by the printer; larger binds tighter.
fn level(f: &LtlFormula) -> u8 {
    use LtlFormula::*;
    match f {
        Or(..) => 1,
        And(..) => 2,
        Until(..) | Release(..) => 3,
        Not(_) | Next(_) | Eventually(_) | Always(_) => 4,
        True | False | Atom(_) => 5,
    }
}

fn write_at(f: &LtlFormula, min_level: u8, out: &mut String) {
    if level(f) < min_level {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

fn write_formula(f: &LtlFormula, out: &mut String) {
    use LtlFormula::*;
    match f {
        True => out.push_str("true"),
        False => out.push_str("false"),
        Atom(p) => out.push_str(p),
        Not(g) => {
            out.push('!');
            write_at(g, 4, out);
        }
        Next(g) | Eventually(g) | Always(g) => {
            out.push_str(match f {
                Next(_) => "X ",
                Eventually(_) => "F ",
                _ => "G ",
            });
            write_at(g, 4, out);
        }
        // Left-associative: a right operand of the same level needs parentheses.
        And(a, b) | Or(a, b) => {
            let lvl = level(f);
            write_at(a, lvl, out);
            out.push_str(if lvl == 2 { " & " } else { " | " });
            write_at(b, lvl + 1, out);
        }
        // Right-associative: the left operand needs parentheses instead.
        Until(a, b) | Release(a, b) => {
            write_at(a, 4, out);
            out.push_str(if matches!(f, Until(..)) { " U " } else { " R " });
            write_at(b, 3, out);
        }
    }
}

/// Canonical ASCII rendering with the minimum parentheses needed to re-parse
/// into the same tree.
pub fn format_ltl(f: &LtlFormula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::AtomicProposition;
    use crate::Feature;
    use LtlFormula as L;

    fn catalog() -> PropositionCatalog {
        PropositionCatalog::new(vec![
            AtomicProposition::new("cov_ok", Feature::Coverage, 1),
            AtomicProposition::new("cap_ok", Feature::Capacity, 1),
            AtomicProposition::new("qual_ok", Feature::Quality, 1),
        ])
        .unwrap()
    }

    fn p(text: &str) -> LtlFormula {
        parse_ltl(text, &catalog()).unwrap()
    }

    #[test]
    fn always_atom() {
        assert_eq!(p("G cov_ok"), L::always(L::atom("cov_ok")));
        assert_eq!(p("□cov_ok"), L::always(L::atom("cov_ok")));
    }

    #[test]
    fn until_with_parenthesized_conjunction() {
        assert_eq!(
            p("cov_ok U (qual_ok & X cap_ok)"),
            L::until(
                L::atom("cov_ok"),
                L::and(L::atom("qual_ok"), L::next(L::atom("cap_ok")))
            )
        );
    }

    #[test]
    fn negation_binds_tighter_than_and() {
        assert_eq!(
            p("!cov_ok & qual_ok"),
            L::and(L::not(L::atom("cov_ok")), L::atom("qual_ok"))
        );
    }

    #[test]
    fn precedence_chain() {
        // & binds tighter than |, U tighter than &.
        assert_eq!(
            p("cov_ok | qual_ok & cov_ok U cap_ok"),
            L::or(
                L::atom("cov_ok"),
                L::and(L::atom("qual_ok"), L::until(L::atom("cov_ok"), L::atom("cap_ok")))
            )
        );
        // U is right-associative.
        assert_eq!(
            p("cov_ok U qual_ok U cap_ok"),
            L::until(L::atom("cov_ok"), L::until(L::atom("qual_ok"), L::atom("cap_ok")))
        );
        assert_eq!(
            p("cov_ok & qual_ok & cap_ok"),
            L::and(L::and(L::atom("cov_ok"), L::atom("qual_ok")), L::atom("cap_ok"))
        );
    }

    #[test]
    fn unicode_and_ascii_agree() {
        assert_eq!(p("¬cov_ok ∧ ○qual_ok ∨ ◇cap_ok"), p("!cov_ok & X qual_ok | F cap_ok"));
        assert_eq!(p("cov_ok 𝔘 ⊤"), p("cov_ok U true"));
        assert_eq!(p("GF cov_ok"), p("G F cov_ok"));
        assert_eq!(p("[] <> cov_ok"), p("G F cov_ok"));
    }

    #[test]
    fn implication_desugars() {
        assert_eq!(
            p("cov_ok -> F qual_ok"),
            L::or(L::not(L::atom("cov_ok")), L::eventually(L::atom("qual_ok")))
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse_ltl("cov_ok & ", &catalog()).unwrap_err();
        match err {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 9);
                assert!(expected.contains(&"proposition".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse_ltl("(cov_ok", &catalog()).unwrap_err().offset(), 7);
        assert_eq!(parse_ltl("cov_ok qual_ok", &catalog()).unwrap_err().offset(), 7);
        assert_eq!(parse_ltl("cov_ok $", &catalog()).unwrap_err().offset(), 7);
        assert!(matches!(
            parse_ltl("", &catalog()),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
    }

    #[test]
    fn unknown_proposition() {
        assert_eq!(
            parse_ltl("G (cov_ok & speed_ok)", &catalog()).unwrap_err(),
            ParseError::UnknownProposition {
                name: "speed_ok".into(),
                offset: 12
            }
        );
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_ltl(&L::always(L::atom("p"))), "G p");
        assert_eq!(
            format_ltl(&L::until(L::until(L::atom("a"), L::atom("b")), L::atom("c"))),
            "(a U b) U c"
        );
        assert_eq!(
            format_ltl(&L::and(L::atom("a"), L::and(L::atom("b"), L::atom("c")))),
            "a & (b & c)"
        );
        assert_eq!(format_ltl(&L::not(L::not(L::atom("a")))), "!!a");
        assert_eq!(format_ltl(&L::always(L::or(L::atom("a"), L::False))), "G (a | false)");
    }
}
