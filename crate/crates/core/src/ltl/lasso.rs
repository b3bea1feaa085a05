//! Direct LTL semantics on ultimately periodic words.
//!
//! A word `prefix · cycle^ω` has only `|prefix| + |cycle|` distinct suffixes.
//! Position `i` stands for the suffix starting there; the successor of the
//! last cycle position is the first cycle position. Every temporal operator
//! then reduces to a fixpoint over this finite lasso-shaped graph: least for
//! `Until`, greatest for `Release`.

use serde::{Deserialize, Serialize};

use super::{Label, LtlFormula};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LassoError {
    #[error("lasso cycle must contain at least one position")]
    EmptyCycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LassoWord {
    prefix: Vec<Label>,
    cycle: Vec<Label>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Label>, cycle: Vec<Label>) -> Result<Self, LassoError> {
        if cycle.is_empty() {
            return Err(LassoError::EmptyCycle);
        }
        Ok(LassoWord { prefix, cycle })
    }

    pub fn prefix(&self) -> &[Label] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Label] {
        &self.cycle
    }

    /// Number of distinct suffix positions.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letter at distinct position `i < len()`.
    pub fn letter(&self, i: usize) -> &Label {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[i - self.prefix.len()]
        }
    }

    /// Successor position in the lasso graph.
    pub fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Whether `w` satisfies `f` at position 0.
pub fn eval_on_lasso(f: &LtlFormula, w: &LassoWord) -> bool {
    truth_table(f, w)[0]
}

fn truth_table(f: &LtlFormula, w: &LassoWord) -> Vec<bool> {
    use LtlFormula::*;
    let n = w.len();
    match f {
        True => vec![true; n],
        False => vec![false; n],
        Atom(p) => (0..n).map(|i| w.letter(i).contains(p)).collect(),
        Not(g) => truth_table(g, w).into_iter().map(|v| !v).collect(),
        And(a, b) => zip(truth_table(a, w), truth_table(b, w), |x, y| x && y),
        Or(a, b) => zip(truth_table(a, w), truth_table(b, w), |x, y| x || y),
        Next(g) => {
            let inner = truth_table(g, w);
            (0..n).map(|i| inner[w.succ(i)]).collect()
        }
        Until(a, b) => until(&truth_table(a, w), &truth_table(b, w), w),
        Release(a, b) => release(&truth_table(a, w), &truth_table(b, w), w),
        Eventually(g) => until(&vec![true; n], &truth_table(g, w), w),
        Always(g) => release(&vec![false; n], &truth_table(g, w), w),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

// Least fixpoint of X = b ∨ (a ∧ ○X).
fn until(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    let mut val = vec![false; w.len()];
    loop {
        let mut changed = false;
        for i in (0..w.len()).rev() {
            let v = b[i] || (a[i] && val[w.succ(i)]);
            if v != val[i] {
                val[i] = v;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

// Greatest fixpoint of X = b ∧ (a ∨ ○X).
fn release(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    let mut val = vec![true; w.len()];
    loop {
        let mut changed = false;
        for i in (0..w.len()).rev() {
            let v = b[i] && (a[i] || val[w.succ(i)]);
            if v != val[i] {
                val[i] = v;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}
