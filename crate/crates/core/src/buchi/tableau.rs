//! Tableau (node-cover) translation from NNF LTL to Büchi automata.
//!
//! Each tableau node records the formulas that must hold now (`old`) and at
//! the next position (`next`). Expansion splits disjunctive obligations into
//! sibling nodes and merges nodes with identical `old`/`next` sets. The
//! result is a generalized Büchi automaton with one acceptance set per
//! `Until` subformula, which is then degeneralized with a round-robin counter.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{BuchiAutomaton, Guard, StateSet, Transition};
use crate::ltl::{atoms_of, format_ltl, LtlFormula, NnfFormula};

const INIT: usize = usize::MAX;

type FormulaSet = BTreeSet<LtlFormula>;

struct Pending {
    incoming: BTreeSet<usize>,
    new: FormulaSet,
    old: FormulaSet,
    next: FormulaSet,
}

struct Node {
    incoming: BTreeSet<usize>,
    old: FormulaSet,
}

fn add_obligation(p: &mut Pending, f: &LtlFormula) {
    if !p.old.contains(f) {
        p.new.insert(f.clone());
    }
}

fn expand(formula: &LtlFormula) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut index: BTreeMap<(FormulaSet, FormulaSet), usize> = BTreeMap::new();
    let mut work = vec![Pending {
        incoming: [INIT].into_iter().collect(),
        new: [formula.clone()].into_iter().collect(),
        old: FormulaSet::new(),
        next: FormulaSet::new(),
    }];

    while let Some(mut p) = work.pop() {
        let Some(eta) = p.new.pop_first() else {
            let key = (p.old, p.next);
            if let Some(&id) = index.get(&key) {
                nodes[id].incoming.extend(p.incoming);
            } else {
                let id = nodes.len();
                work.push(Pending {
                    incoming: [id].into_iter().collect(),
                    new: key.1.clone(),
                    old: FormulaSet::new(),
                    next: FormulaSet::new(),
                });
                nodes.push(Node {
                    incoming: p.incoming,
                    old: key.0.clone(),
                });
                index.insert(key, id);
            }
            continue;
        };

        use LtlFormula::*;
        match &eta {
            // `true` imposes nothing and is not recorded.
            True => work.push(p),
            False => {}
            Atom(_) | Not(_) => {
                let contradiction = match &eta {
                    Atom(_) => LtlFormula::not(eta.clone()),
                    Not(inner) => (**inner).clone(),
                    _ => unreachable!(),
                };
                if !p.old.contains(&contradiction) {
                    p.old.insert(eta);
                    work.push(p);
                }
            }
            And(a, b) => {
                add_obligation(&mut p, a);
                add_obligation(&mut p, b);
                p.old.insert(eta);
                work.push(p);
            }
            Next(a) => {
                p.next.insert((**a).clone());
                p.old.insert(eta);
                work.push(p);
            }
            Or(a, b) | Until(a, b) | Release(a, b) => {
                let mut first = Pending {
                    incoming: p.incoming.clone(),
                    new: p.new.clone(),
                    old: p.old.clone(),
                    next: p.next.clone(),
                };
                let mut second = p;
                match &eta {
                    Or(..) => {
                        add_obligation(&mut first, a);
                        add_obligation(&mut second, b);
                    }
                    Until(..) => {
                        add_obligation(&mut first, a);
                        first.next.insert(eta.clone());
                        add_obligation(&mut second, b);
                    }
                    _ => {
                        add_obligation(&mut first, b);
                        first.next.insert(eta.clone());
                        add_obligation(&mut second, a);
                        add_obligation(&mut second, b);
                    }
                }
                first.old.insert(eta.clone());
                second.old.insert(eta);
                work.push(second);
                work.push(first);
            }
            Eventually(_) | Always(_) => {
                unreachable!("formula is in negation normal form")
            }
        }
    }
    nodes
}

fn collect_untils(f: &LtlFormula, out: &mut BTreeSet<LtlFormula>) {
    if let LtlFormula::Until(..) = f {
        out.insert(f.clone());
    }
    for c in f.children() {
        collect_untils(c, out);
    }
}

fn guard_of(old: &FormulaSet, props: &[String]) -> Guard {
    let bit = |name: &str| 1u64 << props.iter().position(|p| p == name).expect("atom in props");
    let mut g = Guard::TRUE;
    for f in old {
        match f {
            LtlFormula::Atom(p) => g.must |= bit(p),
            LtlFormula::Not(inner) => {
                if let LtlFormula::Atom(p) = &**inner {
                    g.must_not |= bit(p);
                }
            }
            _ => {}
        }
    }
    g
}

/// Translates an NNF formula into a Büchi automaton accepting exactly the
/// words that satisfy it. Only states reachable from the initial states are
/// kept.
pub fn translate_to_buchi(f: &NnfFormula) -> BuchiAutomaton {
    let formula: &LtlFormula = f;
    let props: Vec<String> = atoms_of(formula).into_iter().collect();
    let nodes = expand(formula);

    let mut untils = BTreeSet::new();
    collect_untils(formula, &mut untils);
    let untils: Vec<LtlFormula> = untils.into_iter().collect();

    // in_set[k][q]: node q belongs to the acceptance set of untils[k]
    let in_set: Vec<Vec<bool>> = untils
        .iter()
        .map(|u| {
            let LtlFormula::Until(_, rhs) = u else { unreachable!() };
            nodes
                .iter()
                .map(|n| !n.old.contains(u) || **rhs == LtlFormula::True || n.old.contains(rhs))
                .collect()
        })
        .collect();

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (dst, n) in nodes.iter().enumerate() {
        for &src in &n.incoming {
            if src != INIT {
                succ[src].push(dst);
            }
        }
    }
    let guards: Vec<Guard> = nodes.iter().map(|n| guard_of(&n.old, &props)).collect();

    // Degeneralize: state (node, k) waits for acceptance set k. With no
    // Until subformula every state is accepting and the counter is unused.
    let sets = untils.len().max(1);
    let in_set_k = |k: usize, q: usize| untils.is_empty() || in_set[k][q];

    let mut id_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut initial = StateSet::new();
    for (q, n) in nodes.iter().enumerate() {
        if n.incoming.contains(&INIT) {
            let id = id_of.len();
            id_of.insert((q, 0), id);
            queue.push_back((q, 0));
            initial.insert(id);
        }
    }
    let mut transitions = Vec::new();
    let mut accepting = StateSet::new();
    while let Some((q, k)) = queue.pop_front() {
        let src = id_of[&(q, k)];
        if k == 0 && in_set_k(0, q) {
            accepting.insert(src);
        }
        let k_next = if in_set_k(k, q) { (k + 1) % sets } else { k };
        for &dst_node in &succ[q] {
            let key = (dst_node, k_next);
            let dst = match id_of.get(&key) {
                Some(&id) => id,
                None => {
                    let id = id_of.len();
                    id_of.insert(key, id);
                    queue.push_back(key);
                    id
                }
            };
            transitions.push(Transition {
                src,
                guard: guards[q],
                dst,
            });
        }
    }

    BuchiAutomaton::new(props, id_of.len(), transitions, initial, accepting, format_ltl(formula))
        .expect("tableau construction yields a well-formed automaton")
}
