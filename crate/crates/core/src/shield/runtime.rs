use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ProductGraph, SafetyClassification};
use crate::buchi::{BuchiAutomaton, StateSet};
use crate::ltl::{Label, PropositionCatalog};
use crate::mdp::{label_state, DiscreteState, Mdp};
use crate::{Action, ActionSet};

/// How `(s, a)` pairs absent from the experience are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShieldMode {
    /// Unseen pairs are blocked; unseen states are an error.
    Strict,
    /// Unseen pairs are allowed; unseen states pass everything.
    #[default]
    Permissive,
}

impl std::str::FromStr for ShieldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ShieldMode::Strict),
            "permissive" => Ok(ShieldMode::Permissive),
            other => Err(format!("unknown shield mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "substitute", rename_all = "snake_case")]
pub enum ShieldDecision {
    Pass,
    Blocked(Action),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Filtered {
    pub decision: ShieldDecision,
    pub allowed: ActionSet,
    /// No action was allowed and the least risky one was substituted.
    pub exhausted: bool,
}

impl Filtered {
    pub fn executed(&self, proposed: Action) -> Action {
        match self.decision {
            ShieldDecision::Pass => proposed,
            ShieldDecision::Blocked(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShieldError {
    #[error("state {0} was never observed")]
    UnknownState(DiscreteState),
}

/// Runtime filter over `(state, monitor set)` pairs.
///
/// The monitor set `Q` holds the automaton states consistent with the labels
/// seen so far. Action `a` is allowed at `(s, Q)` iff every successor `s'`
/// with `P(s'|s,a) > 0` keeps some `q' ∈ advance(Q, label(s'))` with
/// `(s', q')` hopeful. An empty `Q` is treated as the automaton's initial
/// set, i.e. monitoring restarts.
#[derive(Debug, Clone)]
pub struct Shield {
    mdp: Arc<Mdp>,
    automaton: BuchiAutomaton,
    catalog: PropositionCatalog,
    mode: ShieldMode,
    hopeful: Vec<StateSet>,
    letters: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShieldEntry {
    pub s: usize,
    pub bins: DiscreteState,
    pub q: Vec<usize>,
    pub allowed: ActionSet,
    pub risk: [f64; 3],
}

pub fn synthesize_shield(
    m: Arc<Mdp>,
    a: &BuchiAutomaton,
    g: &ProductGraph,
    c: &SafetyClassification,
    catalog: &PropositionCatalog,
    mode: ShieldMode,
) -> Shield {
    let letters = (0..m.num_states()).map(|s| a.letter(g.label(s))).collect();
    let hopeful = (0..m.num_states()).map(|s| c.hopeful_states(s).clone()).collect();
    let catalog = PropositionCatalog::new(
        catalog
            .iter()
            .filter(|p| a.props().contains(&p.name))
            .cloned()
            .collect(),
    )
    .expect("subset of a valid catalog");
    Shield {
        mdp: m,
        automaton: a.clone(),
        catalog,
        mode,
        hopeful,
        letters,
    }
}

impl Shield {
    pub fn mode(&self) -> ShieldMode {
        self.mode
    }

    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    pub fn automaton(&self) -> &BuchiAutomaton {
        &self.automaton
    }

    pub fn label(&self, s: &DiscreteState) -> Label {
        label_state(s, &self.catalog)
    }

    /// Monitor set after observing the first state of an episode.
    pub fn start(&self, s: &DiscreteState) -> StateSet {
        self.automaton.advance(self.automaton.initial(), &self.label(s))
    }

    /// Monitor set after moving to `s`. An empty `q` restarts from the
    /// initial set.
    pub fn advance(&self, q: &StateSet, s: &DiscreteState) -> StateSet {
        self.automaton.advance(self.effective(q), &self.label(s))
    }

    fn effective<'a>(&'a self, q: &'a StateSet) -> &'a StateSet {
        if q.is_empty() {
            self.automaton.initial()
        } else {
            q
        }
    }

    /// Whether `(s, Q)` has no hopeful pair. `None` for states outside the
    /// model.
    pub fn is_doomed(&self, s: &DiscreteState, q: &StateSet) -> Option<bool> {
        let i = self.mdp.index_of(s)?;
        Some(q.is_disjoint(&self.hopeful[i]))
    }

    fn successor_hopeful(&self, q: &StateSet, t: usize) -> bool {
        let next = self.automaton.advance_letter(q, self.letters[t]);
        !next.is_disjoint(&self.hopeful[t])
    }

    /// Allowed actions at MDP state index `s` with monitor set `q`.
    pub fn allowed(&self, s: usize, q: &StateSet) -> ActionSet {
        let q = self.effective(q);
        Action::ALL
            .into_iter()
            .filter(|&a| {
                if !self.mdp.is_observed(s, a) {
                    return self.mode == ShieldMode::Permissive;
                }
                self.mdp.successors(s, a).all(|(t, _)| self.successor_hopeful(q, t))
            })
            .collect()
    }

    /// Probability that `a` leads to a successor with no hopeful pair;
    /// 1 for unobserved pairs.
    pub fn risk(&self, s: usize, q: &StateSet, a: Action) -> f64 {
        if !self.mdp.is_observed(s, a) {
            return 1.0;
        }
        let q = self.effective(q);
        self.mdp
            .successors(s, a)
            .filter(|&(t, _)| !self.successor_hopeful(q, t))
            .map(|(_, p)| p)
            .fold(0.0, |acc, p| acc + p)
    }

    /// Passes `proposed` if allowed; otherwise substitutes the allowed
    /// action with the highest `q_values` entry, or the least risky action
    /// when nothing is allowed. Ties go to the earlier action.
    pub fn filter(
        &self,
        s: &DiscreteState,
        q: &StateSet,
        proposed: Action,
        q_values: &[f64; 3],
    ) -> Result<Filtered, ShieldError> {
        let Some(i) = self.mdp.index_of(s) else {
            return match self.mode {
                ShieldMode::Strict => Err(ShieldError::UnknownState(*s)),
                ShieldMode::Permissive => Ok(Filtered {
                    decision: ShieldDecision::Pass,
                    allowed: ActionSet::all(),
                    exhausted: false,
                }),
            };
        };
        let allowed = self.allowed(i, q);
        if allowed.contains(proposed) {
            return Ok(Filtered {
                decision: ShieldDecision::Pass,
                allowed,
                exhausted: false,
            });
        }
        let exhausted = allowed.is_empty();
        let (candidates, scores) = if exhausted {
            (ActionSet::all(), Action::ALL.map(|a| -self.risk(i, q, a)))
        } else {
            (allowed, *q_values)
        };
        let mut best: Option<Action> = None;
        for a in candidates.iter() {
            if best.is_none_or(|b| scores[a.index()] > scores[b.index()]) {
                best = Some(a);
            }
        }
        Ok(Filtered {
            decision: ShieldDecision::Blocked(best.expect("candidates are non-empty")),
            allowed,
            exhausted,
        })
    }

    /// Allowed actions for every `(s, Q)` the monitor can reach, including
    /// restarts, in a stable order.
    pub fn table(&self) -> Vec<ShieldEntry> {
        let init = self.automaton.initial().clone();
        let mut seen: BTreeSet<(usize, StateSet)> = BTreeSet::new();
        let mut queue = VecDeque::new();
        for s in 0..self.mdp.num_states() {
            for q in [self.automaton.advance_letter(&init, self.letters[s]), init.clone()] {
                if !q.is_empty() && seen.insert((s, q.clone())) {
                    queue.push_back((s, q));
                }
            }
        }
        while let Some((s, q)) = queue.pop_front() {
            for a in Action::ALL {
                for (t, _) in self.mdp.successors(s, a) {
                    let mut next = self.automaton.advance_letter(&q, self.letters[t]);
                    if next.is_empty() {
                        next = init.clone();
                    }
                    if !next.is_empty() && seen.insert((t, next.clone())) {
                        queue.push_back((t, next));
                    }
                }
            }
        }
        seen.into_iter()
            .map(|(s, q)| ShieldEntry {
                s,
                bins: self.mdp.state(s),
                allowed: self.allowed(s, &q),
                risk: Action::ALL.map(|a| self.risk(s, &q, a)),
                q: q.into_iter().collect(),
            })
            .collect()
    }
}
