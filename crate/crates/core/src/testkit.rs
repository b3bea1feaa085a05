//! Oracles and generators shared by the test suites.
//!
//! Everything here is deliberately independent of the production code paths
//! it is used to check: lasso words are enumerated exhaustively, hopefulness
//! is decided by bounded walk search rather than SCC decomposition, and RL
//! policies are checked against value iteration on a known model.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::buchi::{BuchiAutomaton, Guard, StateSet, Transition};
use crate::ltl::{AtomicProposition, Label, LassoWord, LtlFormula, PropositionCatalog};
use crate::mdp::{Discretizer, ExperienceBuffer, ExperienceRecord, FeatureRanges, Mdp, RawState};
use crate::{Action, Feature, FeatureSet};

/// Formulas over `p`, `q`, `r` exercising every operator, including the
/// usual liveness/persistence shapes and nested negations.
pub const FORMULA_CORPUS: &[&str] = &[
    "true",
    "false",
    "p",
    "!p",
    "G p",
    "F p",
    "X p",
    "p U q",
    "p R q",
    "G F p",
    "F G p",
    "!(p U q)",
    "!G F p",
    "!(F p & G !q)",
    "G (p -> F q)",
    "G (p -> X q)",
    "(p U q) U r",
    "p U (q U r)",
    "F (p & X (q & X r))",
    "G F p & G F q",
    "F G p | G F !q",
    "!(p R (q | X !r))",
    "X X !p & F r",
    "G (p | q) & F !r",
    "p & X !p & G (p -> X !p)",
    "!!(q U !r)",
];

/// All `2^n` labels over `props`, in bitmask order.
pub fn all_labels(props: &[&str]) -> Vec<Label> {
    (0..1usize << props.len())
        .map(|mask| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| p.to_string())
                .collect()
        })
        .collect()
}

/// Calls `visit` on every lasso word over `letters` with
/// `|prefix| <= max_prefix` and `1 <= |cycle| <= max_cycle`.
pub fn for_each_lasso(letters: &[Label], max_prefix: usize, max_cycle: usize, mut visit: impl FnMut(&LassoWord)) {
    let k = letters.len();
    for plen in 0..=max_prefix {
        for clen in 1..=max_cycle {
            let total = plen + clen;
            let count = k.pow(total as u32);
            for code in 0..count {
                let mut c = code;
                let mut seq = Vec::with_capacity(total);
                for _ in 0..total {
                    seq.push(letters[c % k].clone());
                    c /= k;
                }
                let cycle = seq.split_off(plen);
                let w = LassoWord::new(seq, cycle).expect("cycle is non-empty");
                visit(&w);
            }
        }
    }
}

/// Number of words `for_each_lasso` visits.
pub fn lasso_count(letters: usize, max_prefix: usize, max_cycle: usize) -> usize {
    let prefixes: usize = (0..=max_prefix).map(|p| letters.pow(p as u32)).sum();
    let cycles: usize = (1..=max_cycle).map(|c| letters.pow(c as u32)).sum();
    prefixes * cycles
}

/// Random formula over `props` with at most `depth` nested operators.
pub fn random_formula(rng: &mut impl Rng, props: &[&str], depth: usize) -> LtlFormula {
    use LtlFormula as L;
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => L::True,
            1 => L::False,
            _ => L::atom(*props.choose(rng).expect("non-empty props")),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 => L::not(random_formula(rng, props, d)),
        1 => L::and(random_formula(rng, props, d), random_formula(rng, props, d)),
        2 => L::or(random_formula(rng, props, d), random_formula(rng, props, d)),
        3 => L::next(random_formula(rng, props, d)),
        4 => L::until(random_formula(rng, props, d), random_formula(rng, props, d)),
        5 => L::release(random_formula(rng, props, d), random_formula(rng, props, d)),
        6 => L::eventually(random_formula(rng, props, d)),
        7 => L::always(random_formula(rng, props, d)),
        8 => L::not(L::until(random_formula(rng, props, d), random_formula(rng, props, d))),
        _ => L::always(L::eventually(random_formula(rng, props, d))),
    }
}

/// Random lasso word with `|prefix| <= max_prefix` and
/// `1 <= |cycle| <= max_cycle`.
pub fn random_lasso(rng: &mut impl Rng, letters: &[Label], max_prefix: usize, max_cycle: usize) -> LassoWord {
    let plen = rng.gen_range(0..=max_prefix);
    let clen = rng.gen_range(1..=max_cycle);
    let mut pick = || letters.choose(rng).expect("non-empty alphabet").clone();
    let prefix = (0..plen).map(|_| pick()).collect();
    let cycle = (0..clen).map(|_| pick()).collect();
    LassoWord::new(prefix, cycle).expect("cycle is non-empty")
}

/// Brute-force Büchi non-emptiness per vertex: `v` is hopeful iff some
/// accepting `u` is reachable from `v` by a walk of length `0..=n` and `u`
/// returns to itself by a walk of length `1..=n`, where `n` is the vertex
/// count. Walks are explored layer by layer, without any SCC reasoning.
pub fn brute_force_hopeful(adj: &[Vec<usize>], accepting: &[bool]) -> Vec<bool> {
    let n = adj.len();
    // layers[v][k] = set of vertices reached from v by walks of exactly k edges
    let walk_sets = |v: usize| -> Vec<BTreeSet<usize>> {
        let mut layers = vec![[v].into_iter().collect::<BTreeSet<usize>>()];
        for _ in 0..n {
            let next: BTreeSet<usize> = layers
                .last()
                .unwrap()
                .iter()
                .flat_map(|&x| adj[x].iter().copied())
                .collect();
            layers.push(next);
        }
        layers
    };
    let returns: Vec<bool> = (0..n)
        .map(|u| accepting[u] && walk_sets(u)[1..].iter().any(|layer| layer.contains(&u)))
        .collect();
    (0..n)
        .map(|v| walk_sets(v).iter().any(|layer| layer.iter().any(|&u| returns[u])))
        .collect()
}

/// `[s][a] -> [(s', p, r)]`.
pub type TransitionTable = [Vec<Vec<(usize, f64, f64)>>];

/// Optimal deterministic policy of a finite MDP by value iteration.
///
/// `transitions[s][a]` lists `(next_state, probability, reward)`. Returns the
/// greedy action index per state and the value function. Ties resolve to the
/// lowest action index.
pub fn value_iteration(transitions: &TransitionTable, gamma: f64, tol: f64) -> (Vec<usize>, Vec<f64>) {
    let n = transitions.len();
    let mut v = vec![0.0; n];
    let q_of = |v: &[f64], s: usize, a: usize| -> f64 {
        transitions[s][a].iter().map(|&(t, p, r)| p * (r + gamma * v[t])).sum()
    };
    loop {
        let mut delta: f64 = 0.0;
        let next: Vec<f64> = (0..n)
            .map(|s| {
                (0..transitions[s].len())
                    .map(|a| q_of(&v, s, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for s in 0..n {
            delta = delta.max((next[s] - v[s]).abs());
        }
        v = next;
        if delta < tol {
            break;
        }
    }
    let policy = (0..n)
        .map(|s| {
            let mut best = 0;
            for a in 1..transitions[s].len() {
                if q_of(&v, s, a) > q_of(&v, s, best) + 1e-12 {
                    best = a;
                }
            }
            best
        })
        .collect();
    (policy, v)
}

/// Raw observation whose coverage lies in the middle of bin `i` of 4.
fn chain_state(i: usize) -> RawState {
    RawState {
        tilt_deg: 7.0,
        coverage: (i as f64 + 0.5) / 4.0,
        capacity: 0.5,
        quality: 0.5,
    }
}

/// A `samples`-step trajectory of the 4-state Markov chain `p` under the
/// `none` action, starting in state 0. State `i` is encoded as coverage bin
/// `i` of the returned 4-bin discretizer.
pub fn synthetic_chain(p: &[[f64; 4]; 4], samples: usize, seed: u64) -> (ExperienceBuffer, Discretizer) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = 0;
    let mut buf = ExperienceBuffer::new();
    for _ in 0..samples {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut t = 3;
        for (j, &pj) in p[s].iter().enumerate() {
            acc += pj;
            if u < acc {
                t = j;
                break;
            }
        }
        buf.push(ExperienceRecord {
            s: chain_state(s),
            a: Action::Hold,
            r: if t == 3 { 1.0 } else { 0.0 },
            s_next: chain_state(t),
        });
        s = t;
    }
    (buf, Discretizer::new(4, FeatureRanges::default()))
}

/// Uniformly random records (KPIs in `[0,1]`, tilt in `[0,15]`).
pub fn random_experience(rng: &mut impl Rng, n: usize) -> ExperienceBuffer {
    let mut raw = || RawState {
        tilt_deg: rng.gen_range(0..=15) as f64,
        coverage: rng.gen(),
        capacity: rng.gen(),
        quality: rng.gen(),
    };
    let mut states: Vec<RawState> = (0..n).map(|_| raw()).collect();
    states.push(raw());
    states
        .windows(2)
        .enumerate()
        .map(|(i, w)| ExperienceRecord {
            s: w[0],
            a: Action::ALL[i % 3],
            r: w[1].coverage,
            s_next: w[1],
        })
        .collect()
}

/// Bins per feature used by [`coverage_mdp`].
pub const COVERAGE_BINS: usize = 8;

/// Raw observation in the middle of coverage bin `i` of [`COVERAGE_BINS`].
pub fn coverage_state(i: usize) -> RawState {
    RawState {
        tilt_deg: 7.0,
        coverage: (i as f64 + 0.5) / COVERAGE_BINS as f64,
        capacity: 0.5,
        quality: 0.5,
    }
}

/// MDP over coverage bins whose support is exactly `transitions`
/// (`(s, a, s')` with states given as bin indices). Each listed transition
/// is observed once, so successors of a pair are equally likely.
pub fn coverage_mdp(transitions: &[(usize, Action, usize)]) -> Mdp {
    let buf: ExperienceBuffer = transitions
        .iter()
        .map(|&(s, a, t)| ExperienceRecord {
            s: coverage_state(s),
            a,
            r: 0.0,
            s_next: coverage_state(t),
        })
        .collect();
    Mdp::estimate(
        &buf,
        &Discretizer::new(COVERAGE_BINS, FeatureRanges::default()),
        FeatureSet::empty().with(Feature::Coverage),
        0.9,
    )
    .expect("non-empty coverage feature set")
}

/// Catalog of coverage threshold propositions.
pub fn coverage_catalog(props: &[(&str, usize)]) -> PropositionCatalog {
    PropositionCatalog::new(
        props
            .iter()
            .map(|&(name, bin)| AtomicProposition::new(name, Feature::Coverage, bin))
            .collect(),
    )
    .expect("valid catalog")
}

/// Random support over `1..=max_states` coverage bins: every state gets at
/// least one action with one to three successors.
pub fn random_support(rng: &mut impl Rng, max_states: usize) -> Vec<(usize, Action, usize)> {
    let n = rng.gen_range(1..=max_states);
    let mut out = Vec::new();
    for s in 0..n {
        for (k, a) in Action::ALL.into_iter().enumerate() {
            if k == 0 || rng.gen_bool(0.6) {
                for _ in 0..rng.gen_range(1..=3) {
                    out.push((s, a, rng.gen_range(0..n)));
                }
            }
        }
    }
    out
}

/// Random automaton over `props` with `1..=max_states` states and random
/// conjunctive guards.
pub fn random_automaton(rng: &mut impl Rng, props: &[&str], max_states: usize) -> BuchiAutomaton {
    let n = rng.gen_range(1..=max_states);
    let bits = props.len();
    let mut transitions = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            if rng.gen_bool(0.4) {
                let mut g = Guard::TRUE;
                for i in 0..bits {
                    match rng.gen_range(0..3) {
                        0 => g.must |= 1 << i,
                        1 => g.must_not |= 1 << i,
                        _ => {}
                    }
                }
                transitions.push(Transition { src, guard: g, dst });
            }
        }
    }
    let mut initial: StateSet = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
    if initial.is_empty() {
        initial.insert(0);
    }
    let accepting: StateSet = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    BuchiAutomaton::new(
        props.iter().map(|p| p.to_string()).collect(),
        n,
        transitions,
        initial,
        accepting,
        "random",
    )
    .expect("well-formed random automaton")
}
