use serde::{Deserialize, Serialize};

use super::{build_product, ProductError, ProductGraph};
use crate::buchi::{BuchiAutomaton, StateSet};
use crate::graph::{backward_reachable, on_cycle, shortest_path, tarjan_scc};
use crate::ltl::{Label, LassoWord, PropositionCatalog};
use crate::mdp::{DiscreteState, Mdp};
use crate::Action;

/// Hopeful/doomed split of a product's nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyClassification {
    hopeful: Vec<bool>,
    initial: Vec<usize>,
    // hopeful automaton states per MDP state
    monitor: Vec<StateSet>,
}

impl SafetyClassification {
    pub fn is_hopeful(&self, node: usize) -> bool {
        self.hopeful[node]
    }

    pub fn hopeful(&self) -> &[bool] {
        &self.hopeful
    }

    pub fn hopeful_count(&self) -> usize {
        self.hopeful.iter().filter(|&&h| h).count()
    }

    pub fn doomed_count(&self) -> usize {
        self.hopeful.len() - self.hopeful_count()
    }

    /// Automaton states `q` with `(s, q)` hopeful.
    pub fn hopeful_states(&self, s: usize) -> &StateSet {
        static EMPTY: StateSet = StateSet::new();
        self.monitor.get(s).unwrap_or(&EMPTY)
    }
}

/// A node is hopeful iff it reaches a non-trivial SCC containing an
/// accepting node, i.e. some accepting lasso starts there.
pub fn classify(g: &ProductGraph) -> SafetyClassification {
    let adj = g.adjacency();
    let comp = tarjan_scc(adj);
    let cyclic = on_cycle(adj, &comp);
    let targets: Vec<bool> = (0..g.num_nodes()).map(|v| cyclic[v] && g.is_accepting(v)).collect();
    let hopeful = backward_reachable(adj, &targets);
    let mdp_states = g.nodes().iter().map(|n| n.0 + 1).max().unwrap_or(0);
    let mut monitor = vec![StateSet::new(); mdp_states];
    for (v, &(s, q)) in g.nodes().iter().enumerate() {
        if hopeful[v] {
            monitor[s].insert(q);
        }
    }
    SafetyClassification {
        hopeful,
        initial: g.initial().to_vec(),
        monitor,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Satisfiable,
    UnsatisfiableOnModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    pub hopeful_nodes: usize,
    pub doomed_nodes: usize,
    pub initial_nodes: usize,
    pub hopeful_initial_nodes: usize,
}

impl Verdict {
    pub fn is_satisfiable(&self) -> bool {
        self.verdict == VerdictKind::Satisfiable
    }
}

/// Satisfiable iff at least one initial node is hopeful.
pub fn check_satisfiable(c: &SafetyClassification) -> Verdict {
    let hopeful_initial = c.initial.iter().filter(|&&v| c.hopeful[v]).count();
    Verdict {
        verdict: if hopeful_initial > 0 {
            VerdictKind::Satisfiable
        } else {
            VerdictKind::UnsatisfiableOnModel
        },
        hopeful_nodes: c.hopeful_count(),
        doomed_nodes: c.doomed_count(),
        initial_nodes: c.initial.len(),
        hopeful_initial_nodes: hopeful_initial,
    }
}

/// One step of a system trace: the state, its labels, and the action taken
/// from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub s: usize,
    pub bins: DiscreteState,
    pub a: Action,
    pub labels: Vec<String>,
}

/// Ultimately periodic system trace: after the last step, execution
/// continues at `steps[cycle_start]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoTrace {
    pub steps: Vec<TraceStep>,
    pub cycle_start: usize,
}

impl LassoTrace {
    /// The label sequence as a lasso word.
    pub fn word(&self) -> LassoWord {
        let labels: Vec<Label> = self
            .steps
            .iter()
            .map(|st| st.labels.iter().cloned().collect())
            .collect();
        let (prefix, cycle) = labels.split_at(self.cycle_start);
        LassoWord::new(prefix.to_vec(), cycle.to_vec()).expect("trace cycle is non-empty")
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for st in &self.steps {
            let mut v = serde_json::to_value(st).expect("trace step serializes");
            v["cycle"] = serde_json::Value::Bool(st.step >= self.cycle_start);
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// An accepting lasso of `g` from some hopeful initial node, as a system
/// trace over `m`.
pub fn accepting_lasso(m: &Mdp, g: &ProductGraph, c: &SafetyClassification) -> Option<LassoTrace> {
    let adj = g.adjacency();
    let start = g.initial().iter().copied().find(|&v| c.is_hopeful(v))?;
    let comp = tarjan_scc(adj);
    let cyclic = on_cycle(adj, &comp);
    let stem = shortest_path(adj, start, 0, |v| cyclic[v] && g.is_accepting(v))?;
    let acc = *stem.last().expect("path has endpoints");
    let lap = shortest_path(adj, acc, 1, |v| v == acc)?;

    // stem = n0..nk (nk = acc), lap = acc..acc
    let mut nodes: Vec<usize> = stem[..stem.len() - 1].to_vec();
    let cycle_start = nodes.len();
    nodes.extend_from_slice(&lap);
    let steps = nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (s, _) = g.node(w[0]);
            TraceStep {
                step: i,
                s,
                bins: m.state(s),
                a: g.action_between(w[0], w[1])
                    .expect("consecutive path nodes share an edge"),
                labels: g.label(s).iter().cloned().collect(),
            }
        })
        .collect();
    Some(LassoTrace { steps, cycle_start })
}

/// A system trace of `m` violating the intent, found as an accepting lasso
/// of `m ⊗ a_neg` where `a_neg` accepts the negated intent.
pub fn find_violating_trace(
    m: &Mdp,
    a_neg: &BuchiAutomaton,
    catalog: &PropositionCatalog,
) -> Result<Option<LassoTrace>, ProductError> {
    let g = build_product(m, a_neg, catalog)?;
    let c = classify(&g);
    Ok(accepting_lasso(m, &g, &c))
}
