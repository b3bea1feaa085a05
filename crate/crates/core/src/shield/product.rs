use std::collections::{BTreeMap, BTreeSet};

use crate::buchi::BuchiAutomaton;
use crate::ltl::{Label, PropositionCatalog};
use crate::mdp::Mdp;
use crate::{Action, Feature};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProductError {
    #[error("proposition `{0}` is not in the catalog")]
    UnknownProposition(String),
    #[error("proposition `{prop}` is over {feature}, which the MDP does not model")]
    FeatureMismatch { prop: String, feature: Feature },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductEdge {
    pub src: usize,
    pub action: Action,
    pub dst: usize,
}

/// Synchronous product of an MDP with a Büchi automaton.
///
/// Node `(s, q)` means the system is in MDP state `s` and the automaton is
/// in `q` after reading `label(s)`. Every MDP state is a possible start, so
/// the initial nodes are `(s, q)` for each `s` and each `q` the automaton
/// reaches from its initial states on `label(s)`. An edge `(s, q) -a-> (s', q')`
/// exists iff `P(s'|s,a) > 0` and a transition `(q, g, q')` has
/// `label(s') ⊨ g`. Nodes are numbered in `(s, q)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGraph {
    nodes: Vec<(usize, usize)>,
    index: BTreeMap<(usize, usize), usize>,
    edges: Vec<ProductEdge>,
    // deduplicated successor lists for graph algorithms
    adj: Vec<Vec<usize>>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
    labels: Vec<Label>,
    aut_states: usize,
}

/// Checks that every automaton proposition is catalogued and modelled by `m`.
pub fn check_features(m: &Mdp, a: &BuchiAutomaton, catalog: &PropositionCatalog) -> Result<(), ProductError> {
    for p in a.props() {
        let ap = catalog
            .get(p)
            .ok_or_else(|| ProductError::UnknownProposition(p.clone()))?;
        if !m.features().contains(ap.feature) {
            return Err(ProductError::FeatureMismatch {
                prop: p.clone(),
                feature: ap.feature,
            });
        }
    }
    Ok(())
}

pub fn build_product(m: &Mdp, a: &BuchiAutomaton, catalog: &PropositionCatalog) -> Result<ProductGraph, ProductError> {
    check_features(m, a, catalog)?;
    let labels: Vec<Label> = (0..m.num_states()).map(|s| m.labels(s, catalog)).collect();
    let letters: Vec<u64> = labels.iter().map(|l| a.letter(l)).collect();

    let mut reached: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut work = Vec::new();
    let mut initial_pairs = BTreeSet::new();
    for (s, &letter) in letters.iter().enumerate() {
        for q in a.advance_letter(a.initial(), letter) {
            initial_pairs.insert((s, q));
            if reached.insert((s, q)) {
                work.push((s, q));
            }
        }
    }
    let mut raw_edges = Vec::new();
    while let Some((s, q)) = work.pop() {
        for act in Action::ALL {
            for (t, _) in m.successors(s, act) {
                for qt in a.advance_letter(&[q].into_iter().collect(), letters[t]) {
                    raw_edges.push(((s, q), act, (t, qt)));
                    if reached.insert((t, qt)) {
                        work.push((t, qt));
                    }
                }
            }
        }
    }

    let nodes: Vec<(usize, usize)> = reached.into_iter().collect();
    let index: BTreeMap<(usize, usize), usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut edges: Vec<ProductEdge> = raw_edges
        .into_iter()
        .map(|(u, act, v)| ProductEdge {
            src: index[&u],
            action: act,
            dst: index[&v],
        })
        .collect();
    edges.sort();
    edges.dedup();
    let adj = adjacency(nodes.len(), &edges);
    Ok(ProductGraph {
        initial: initial_pairs.iter().map(|n| index[n]).collect(),
        accepting: nodes.iter().map(|&(_, q)| a.is_accepting(q)).collect(),
        nodes,
        index,
        edges,
        adj,
        labels,
        aut_states: a.num_states(),
    })
}

fn adjacency(n: usize, edges: &[ProductEdge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.src].push(e.dst);
    }
    for succ in &mut adj {
        succ.sort_unstable();
        succ.dedup();
    }
    adj
}

impl ProductGraph {
    /// Product of an explicit graph, for tests and tools that do not start
    /// from an MDP. `edges` are `(src, action, dst)` over node indices.
    pub fn from_parts(
        nodes: Vec<(usize, usize)>,
        edges: Vec<ProductEdge>,
        initial: Vec<usize>,
        accepting: Vec<bool>,
    ) -> ProductGraph {
        let mut edges = edges;
        edges.sort();
        edges.dedup();
        let adj = adjacency(nodes.len(), &edges);
        let mdp_states = nodes.iter().map(|n| n.0 + 1).max().unwrap_or(0);
        ProductGraph {
            index: nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect(),
            aut_states: nodes.iter().map(|n| n.1 + 1).max().unwrap_or(0),
            nodes,
            edges,
            adj,
            initial,
            accepting,
            labels: vec![Label::new(); mdp_states],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `(mdp_state, automaton_state)` of a node.
    pub fn node(&self, id: usize) -> (usize, usize) {
        self.nodes[id]
    }

    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    pub fn node_id(&self, s: usize, q: usize) -> Option<usize> {
        self.index.get(&(s, q)).copied()
    }

    pub fn edges(&self) -> &[ProductEdge] {
        &self.edges
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_initial(&self, id: usize) -> bool {
        self.initial.binary_search(&id).is_ok()
    }

    pub fn is_accepting(&self, id: usize) -> bool {
        self.accepting[id]
    }

    /// Label of an MDP state, as used when the product was built.
    pub fn label(&self, s: usize) -> &Label {
        &self.labels[s]
    }

    pub fn automaton_states(&self) -> usize {
        self.aut_states
    }

    /// An action labelling some edge `u -> v`, earliest in action order.
    pub fn action_between(&self, u: usize, v: usize) -> Option<Action> {
        let start = self.edges.partition_point(|e| e.src < u);
        self.edges[start..]
            .iter()
            .take_while(|e| e.src == u)
            .filter(|e| e.dst == v)
            .map(|e| e.action)
            .min()
    }
}
