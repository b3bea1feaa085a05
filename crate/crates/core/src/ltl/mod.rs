//! Linear temporal logic intents over a catalog of KPI threshold propositions.
//!
//! The surface syntax accepts both ASCII and Unicode operators:
//!
//! | operator   | ASCII          | Unicode |
//! |------------|----------------|---------|
//! | true/false | `true` `false` | `⊤` `⊥` |
//! | not        | `!` `~`        | `¬`     |
//! | and        | `&` `&&`       | `∧`     |
//! | or         | `\|` `\|\|`    | `∨`     |
//! | next       | `X`            | `○`     |
//! | eventually | `F` `<>`       | `◇`     |
//! | always     | `G` `[]`       | `□`     |
//! | until      | `U`            | `𝔘`     |
//! | release    | `R`            |         |
//! | implies    | `->`           | `→`     |
//!
//! Unary operators bind tightest, then `U`/`R` (right-associative), then `&`,
//! then `|`, then `->`. Implication is sugar for `!a | b` and does not survive
//! a parse/format round trip.

mod catalog;
mod lasso;
mod nnf;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use catalog::{AtomicProposition, CatalogError, PropositionCatalog};
pub use lasso::{eval_on_lasso, LassoError, LassoWord};
pub use nnf::{is_nnf, to_nnf, NnfFormula};
pub use parser::{format_ltl, parse_ltl, ParseError};

/// Set of proposition names holding at one position of a word.
pub type Label = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    Release(Box<LtlFormula>, Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Always(Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        LtlFormula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Release(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    pub fn always(f: LtlFormula) -> Self {
        LtlFormula::Always(Box::new(f))
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&LtlFormula> {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(f) | Next(f) | Eventually(f) | Always(f) => vec![f],
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => vec![a, b],
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// True when no temporal operator occurs in the formula.
    pub fn is_propositional(&self) -> bool {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => true,
            Not(f) => f.is_propositional(),
            And(a, b) | Or(a, b) => a.is_propositional() && b.is_propositional(),
            Next(_) | Until(..) | Release(..) | Eventually(_) | Always(_) => false,
        }
    }

    /// Evaluates a propositional formula against one label.
    ///
    /// Returns `None` if the formula contains a temporal operator.
    pub fn eval_propositional(&self, label: &Label) -> Option<bool> {
        use LtlFormula::*;
        match self {
            True => Some(true),
            False => Some(false),
            Atom(p) => Some(label.contains(p)),
            Not(f) => f.eval_propositional(label).map(|v| !v),
            And(a, b) => Some(a.eval_propositional(label)? && b.eval_propositional(label)?),
            Or(a, b) => Some(a.eval_propositional(label)? || b.eval_propositional(label)?),
            _ => None,
        }
    }

    /// The invariant `p` of an intent shaped `G p` with propositional `p`.
    pub fn safety_invariant(&self) -> Option<&LtlFormula> {
        match self {
            LtlFormula::Always(inner) if inner.is_propositional() => Some(inner),
            _ => None,
        }
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_ltl(self))
    }
}

impl std::str::FromStr for LtlFormula {
    type Err = ParseError;

    /// Parses without checking atoms against a catalog.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parser::parse_unchecked(s)
    }
}

/// The atomic propositions occurring in `f`.
pub fn atoms_of(f: &LtlFormula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_atoms(f, &mut out);
    out
}

fn collect_atoms(f: &LtlFormula, out: &mut BTreeSet<String>) {
    if let LtlFormula::Atom(p) = f {
        out.insert(p.clone());
    }
    for c in f.children() {
        collect_atoms(c, out);
    }
}
