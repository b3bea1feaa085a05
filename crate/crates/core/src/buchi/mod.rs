//! Büchi automata over label alphabets `2^Σ`.
//!
//! Transitions carry conjunctive guards and are read on leaving a state: a
//! run `q0 q1 q2 …` over the word `w0 w1 w2 …` takes `(q_i, g, q_{i+1})` with
//! `w_i ⊨ g`. A run is accepting when it visits an accepting state infinitely
//! often.

mod accept;
mod export;
mod tableau;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ltl::Label;

pub use accept::accepts_lasso;
pub use export::{to_dot, AutomatonTextError, AUTOMATON_FORMAT_VERSION};
pub use tableau::translate_to_buchi;

/// Set of automaton states, used for on-the-fly monitoring of runs.
pub type StateSet = BTreeSet<usize>;

/// Conjunction of literals, as bitmasks over the automaton's proposition list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Guard {
    pub must: u64,
    pub must_not: u64,
}

impl Guard {
    pub const TRUE: Guard = Guard { must: 0, must_not: 0 };

    pub fn satisfied_by(self, letter: u64) -> bool {
        letter & self.must == self.must && letter & self.must_not == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: usize,
    pub guard: Guard,
    pub dst: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("transition endpoint {0} is not a state")]
    BadState(usize),
    #[error("at most 64 propositions are supported, got {0}")]
    TooManyPropositions(usize),
    #[error("guard references proposition bit {0} beyond the proposition list")]
    BadGuard(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    props: Vec<String>,
    num_states: usize,
    transitions: Vec<Transition>,
    initial: StateSet,
    accepting: StateSet,
    formula_text: String,
    // indices into `transitions`, grouped by source
    outgoing: Vec<Vec<usize>>,
}

impl BuchiAutomaton {
    pub fn new(
        props: Vec<String>,
        num_states: usize,
        mut transitions: Vec<Transition>,
        initial: StateSet,
        accepting: StateSet,
        formula_text: impl Into<String>,
    ) -> Result<Self, AutomatonError> {
        if props.len() > 64 {
            return Err(AutomatonError::TooManyPropositions(props.len()));
        }
        let valid_bits = if props.len() == 64 {
            u64::MAX
        } else {
            (1u64 << props.len()) - 1
        };
        for t in &transitions {
            for s in [t.src, t.dst] {
                if s >= num_states {
                    return Err(AutomatonError::BadState(s));
                }
            }
            let stray = (t.guard.must | t.guard.must_not) & !valid_bits;
            if stray != 0 {
                return Err(AutomatonError::BadGuard(stray.trailing_zeros()));
            }
        }
        if let Some(&s) = initial.iter().chain(&accepting).find(|&&s| s >= num_states) {
            return Err(AutomatonError::BadState(s));
        }
        transitions.sort();
        transitions.dedup();
        let mut outgoing = vec![Vec::new(); num_states];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.src].push(i);
        }
        Ok(BuchiAutomaton {
            props,
            num_states,
            transitions,
            initial,
            accepting,
            formula_text: formula_text.into(),
            outgoing,
        })
    }

    /// Propositions in bit order of the guards.
    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Transition> {
        self.outgoing[state].iter().map(|&i| &self.transitions[i])
    }

    pub fn initial(&self) -> &StateSet {
        &self.initial
    }

    pub fn accepting(&self) -> &StateSet {
        &self.accepting
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting.contains(&state)
    }

    pub fn formula_text(&self) -> &str {
        &self.formula_text
    }

    /// Encodes a label as a bitmask; names outside `props` are ignored.
    pub fn letter(&self, label: &Label) -> u64 {
        self.props
            .iter()
            .enumerate()
            .filter(|(_, p)| label.contains(*p))
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// Renders a guard as `a&!b`, or `true` for the empty conjunction.
    pub fn guard_text(&self, guard: Guard) -> String {
        let mut lits = Vec::new();
        for (i, p) in self.props.iter().enumerate() {
            if guard.must & (1 << i) != 0 {
                lits.push(p.clone());
            }
            if guard.must_not & (1 << i) != 0 {
                lits.push(format!("!{p}"));
            }
        }
        if lits.is_empty() {
            "true".to_string()
        } else {
            lits.join("&")
        }
    }

    /// Successor monitor set: every state reachable from `states` by one
    /// transition enabled under `label`.
    pub fn advance(&self, states: &StateSet, label: &Label) -> StateSet {
        self.advance_letter(states, self.letter(label))
    }

    pub fn advance_letter(&self, states: &StateSet, letter: u64) -> StateSet {
        states
            .iter()
            .flat_map(|&q| self.outgoing(q))
            .filter(|t| t.guard.satisfied_by(letter))
            .map(|t| t.dst)
            .collect()
    }

    /// Drops states not reachable from an initial state and renumbers the
    /// rest in discovery order.
    pub fn prune_unreachable(&self) -> BuchiAutomaton {
        let mut id = vec![usize::MAX; self.num_states];
        let mut order = Vec::new();
        let mut queue: std::collections::VecDeque<usize> = self.initial.iter().copied().collect();
        for &q in &self.initial {
            id[q] = order.len();
            order.push(q);
        }
        while let Some(q) = queue.pop_front() {
            for t in self.outgoing(q) {
                if id[t.dst] == usize::MAX {
                    id[t.dst] = order.len();
                    order.push(t.dst);
                    queue.push_back(t.dst);
                }
            }
        }
        let transitions = self
            .transitions
            .iter()
            .filter(|t| id[t.src] != usize::MAX)
            .map(|t| Transition {
                src: id[t.src],
                guard: t.guard,
                dst: id[t.dst],
            })
            .collect();
        let remap =
            |set: &StateSet| -> StateSet { set.iter().filter(|&&q| id[q] != usize::MAX).map(|&q| id[q]).collect() };
        BuchiAutomaton::new(
            self.props.clone(),
            order.len(),
            transitions,
            remap(&self.initial),
            remap(&self.accepting),
            self.formula_text.clone(),
        )
        .expect("pruning preserves well-formedness")
    }

    /// JSON-friendly graph form used by the service API.
    pub fn to_graph(&self) -> AutomatonGraph {
        AutomatonGraph {
            version: AUTOMATON_FORMAT_VERSION,
            formula: self.formula_text.clone(),
            props: self.props.clone(),
            states: (0..self.num_states)
                .map(|id| GraphState {
                    id,
                    initial: self.initial.contains(&id),
                    accepting: self.accepting.contains(&id),
                })
                .collect(),
            transitions: self
                .transitions
                .iter()
                .map(|t| GraphTransition {
                    src: t.src,
                    dst: t.dst,
                    guard: self.guard_text(t.guard),
                })
                .collect(),
        }
    }
}

/// Monitor step on an automaton: `Q′ = { q′ : q ∈ Q, (q, g, q′), label ⊨ g }`.
pub fn advance_monitor(states: &StateSet, label: &Label, automaton: &BuchiAutomaton) -> StateSet {
    automaton.advance(states, label)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonGraph {
    pub version: u32,
    pub formula: String,
    pub props: Vec<String>,
    pub states: Vec<GraphState>,
    pub transitions: Vec<GraphTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphState {
    pub id: usize,
    pub initial: bool,
    pub accepting: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphTransition {
    pub src: usize,
    pub dst: usize,
    pub guard: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(props: &[&str]) -> Label {
        props.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn guard_semantics() {
        let g = Guard {
            must: 0b01,
            must_not: 0b10,
        };
        assert!(g.satisfied_by(0b01));
        assert!(!g.satisfied_by(0b11));
        assert!(!g.satisfied_by(0b00));
        assert!(Guard::TRUE.satisfied_by(0b11));
    }

    #[test]
    fn construction_validates_indices() {
        let t = Transition {
            src: 0,
            guard: Guard::TRUE,
            dst: 3,
        };
        assert_eq!(
            BuchiAutomaton::new(vec![], 1, vec![t], StateSet::new(), StateSet::new(), ""),
            Err(AutomatonError::BadState(3))
        );
        let t = Transition {
            src: 0,
            guard: Guard {
                must: 0b10,
                must_not: 0,
            },
            dst: 0,
        };
        assert_eq!(
            BuchiAutomaton::new(vec!["p".into()], 1, vec![t], StateSet::new(), StateSet::new(), ""),
            Err(AutomatonError::BadGuard(1))
        );
    }

    #[test]
    fn monitor_on_always_p() {
        let f = crate::ltl::to_nnf(&"G p".parse().unwrap());
        let a = translate_to_buchi(&f);
        let q0: StateSet = a.initial().clone();
        assert_eq!(advance_monitor(&q0, &label(&["p"]), &a), q0);
        assert!(advance_monitor(&q0, &label(&[]), &a).is_empty());
    }

    #[test]
    fn monitor_on_eventually_p_reaches_acceptance() {
        let f = crate::ltl::to_nnf(&"F p".parse().unwrap());
        let a = translate_to_buchi(&f);
        let next = a.advance(a.initial(), &label(&["p"]));
        assert!(next.iter().any(|q| a.is_accepting(*q)));
        // without p the obligation is still open, so the run survives
        assert!(!a.advance(a.initial(), &label(&[])).is_empty());
    }

    #[test]
    fn graph_form_lists_everything() {
        let f = crate::ltl::to_nnf(&"p U q".parse().unwrap());
        let a = translate_to_buchi(&f);
        let g = a.to_graph();
        assert_eq!(g.states.len(), a.num_states());
        assert_eq!(g.transitions.len(), a.transitions().len());
        assert_eq!(g.props, vec!["p".to_string(), "q".to_string()]);
    }
}
