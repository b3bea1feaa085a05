use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retshield::buchi::{translate_to_buchi, BuchiAutomaton, StateSet};
use retshield::ltl::{eval_on_lasso, to_nnf, LassoWord, LtlFormula, PropositionCatalog};
use retshield::mdp::{DiscreteState, Mdp};
use retshield::shield::{
    build_product, check_satisfiable, classify, export_product, find_violating_trace, product_to_dot,
    synthesize_shield, Shield, ShieldDecision, ShieldMode, VerdictKind,
};
use retshield::testkit::{
    all_labels, brute_force_hopeful, coverage_catalog, coverage_mdp, random_automaton, random_lasso, random_support,
    FORMULA_CORPUS,
};
use retshield::{Action, ActionSet, Feature};

fn automaton(f: &str) -> BuchiAutomaton {
    translate_to_buchi(&to_nnf(&f.parse().unwrap()))
}

fn negated(f: &str) -> BuchiAutomaton {
    translate_to_buchi(&to_nnf(&LtlFormula::not(f.parse().unwrap())))
}

fn bin(i: usize) -> DiscreteState {
    DiscreteState::from_bins([(Feature::Coverage, i)])
}

fn shield_for(m: Mdp, f: &str, catalog: &PropositionCatalog, mode: ShieldMode) -> Shield {
    let a = automaton(f);
    let g = build_product(&m, &a, catalog).unwrap();
    let c = classify(&g);
    synthesize_shield(Arc::new(m), &a, &g, &c, catalog, mode)
}

#[test]
fn random_products_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let catalog = coverage_catalog(&[("p", 2), ("q", 5)]);
    let mut nontrivial = 0;
    for _ in 0..200 {
        let m = coverage_mdp(&random_support(&mut rng, 8));
        let a = random_automaton(&mut rng, &["p", "q"], 5);
        let g = build_product(&m, &a, &catalog).unwrap();
        let c = classify(&g);
        let accepting: Vec<bool> = (0..g.num_nodes()).map(|v| g.is_accepting(v)).collect();
        assert_eq!(c.hopeful(), brute_force_hopeful(g.adjacency(), &accepting).as_slice());
        if c.hopeful_count() > 0 && c.doomed_count() > 0 {
            nontrivial += 1;
        }
    }
    assert!(nontrivial > 20, "generator too degenerate: {nontrivial}");
}

#[test]
fn violating_trace_for_always_p() {
    // p holds in bins >= 1. 2 -hold-> 2, 2 -downtilt-> 1, 1 -hold-> 0, 0 -hold-> 0
    let catalog = coverage_catalog(&[("p", 1)]);
    let m = coverage_mdp(&[
        (2, Action::Hold, 2),
        (2, Action::Downtilt, 1),
        (1, Action::Hold, 0),
        (0, Action::Hold, 0),
    ]);
    let trace = find_violating_trace(&m, &negated("G p"), &catalog)
        .unwrap()
        .expect("a violating trace exists");
    assert!(trace.steps.iter().any(|st| !st.labels.contains(&"p".to_string())));
    assert!(!eval_on_lasso(&"G p".parse().unwrap(), &trace.word()));
    assert!(trace.to_jsonl().lines().count() == trace.steps.len());

    assert!(find_violating_trace(&m, &negated("true"), &catalog).unwrap().is_none());
    // Bin 2 can hold p forever, so the intent is still satisfiable.
    let a = automaton("G p");
    let c = classify(&build_product(&m, &a, &catalog).unwrap());
    assert_eq!(check_satisfiable(&c).verdict, VerdictKind::Satisfiable);
}

#[test]
fn traces_violate_their_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let catalog = coverage_catalog(&[("p", 2), ("q", 4), ("r", 6)]);
    let mut found = 0;
    for round in 0..60 {
        let m = coverage_mdp(&random_support(&mut rng, 8));
        let text = FORMULA_CORPUS[round % FORMULA_CORPUS.len()];
        let phi: LtlFormula = text.parse().unwrap();
        if let Some(trace) = find_violating_trace(&m, &negated(text), &catalog).unwrap() {
            found += 1;
            assert!(!eval_on_lasso(&phi, &trace.word()), "{text}: {trace:?}");
            for w in trace.steps.windows(2) {
                assert!(m.prob(w[0].s, w[0].a, w[1].s).unwrap() > 0.0);
            }
            let last = trace.steps.last().unwrap();
            let back = &trace.steps[trace.cycle_start];
            assert!(m.prob(last.s, last.a, back.s).unwrap() > 0.0);
        }
    }
    assert!(found > 10);
}

#[test]
fn blocked_when_only_successor_is_doomed() {
    let catalog = coverage_catalog(&[("p", 1)]);
    let m = coverage_mdp(&[
        (2, Action::Hold, 2),
        (2, Action::Downtilt, 0),
        (2, Action::Uptilt, 3),
        (3, Action::Hold, 3),
        (0, Action::Hold, 0),
    ]);
    let sh = shield_for(m, "G p", &catalog, ShieldMode::Permissive);
    let s = sh.mdp().index_of(&bin(2)).unwrap();
    let q = sh.start(&bin(2));
    let allowed = sh.allowed(s, &q);
    assert!(!allowed.contains(Action::Downtilt));
    assert!(allowed.contains(Action::Hold) && allowed.contains(Action::Uptilt));

    let f = sh.filter(&bin(2), &q, Action::Hold, &[0.0; 3]).unwrap();
    assert_eq!(f.decision, ShieldDecision::Pass);
    let f = sh.filter(&bin(2), &q, Action::Downtilt, &[5.0, 0.0, 1.0]).unwrap();
    assert_eq!(f.decision, ShieldDecision::Blocked(Action::Uptilt));
    assert!(!f.exhausted);
    // tie between hold and uptilt goes to the earlier action
    let f = sh.filter(&bin(2), &q, Action::Downtilt, &[0.0; 3]).unwrap();
    assert_eq!(f.decision, ShieldDecision::Blocked(Action::Hold));
}

#[test]
fn one_allowed_alternative_is_substituted() {
    let catalog = coverage_catalog(&[("p", 1)]);
    let m = coverage_mdp(&[
        (2, Action::Hold, 0),
        (2, Action::Downtilt, 0),
        (2, Action::Uptilt, 2),
        (0, Action::Hold, 0),
    ]);
    let sh = shield_for(m, "G p", &catalog, ShieldMode::Strict);
    let q = sh.start(&bin(2));
    let f = sh.filter(&bin(2), &q, Action::Hold, &[9.0, 9.0, -1.0]).unwrap();
    assert_eq!(f.allowed, ActionSet::single(Action::Uptilt));
    assert_eq!(f.decision, ShieldDecision::Blocked(Action::Uptilt));
}

#[test]
fn successor_keeping_a_hopeful_sibling_is_allowed() {
    // p holds in bins >= 2; intent F G p.
    // 0 -hold-> {2, 3}; 2 -hold-> 2; 3 -hold-> 1; 1 -hold-> 2.
    // In state 3 the run that has committed to "p forever" is doomed (next
    // state 1 lacks p) but the run still waiting is hopeful via 1 -> 2.
    let catalog = coverage_catalog(&[("p", 2)]);
    let m = coverage_mdp(&[
        (0, Action::Hold, 2),
        (0, Action::Hold, 3),
        (2, Action::Hold, 2),
        (3, Action::Hold, 1),
        (1, Action::Hold, 2),
    ]);
    let a = automaton("F G p");
    let g = build_product(&m, &a, &catalog).unwrap();
    let c = classify(&g);
    let s3 = m.index_of(&bin(3)).unwrap();
    let at3: Vec<bool> = (0..g.num_nodes())
        .filter(|&v| g.node(v).0 == s3)
        .map(|v| c.is_hopeful(v))
        .collect();
    assert!(at3.contains(&true) && at3.contains(&false), "{at3:?}");

    let sh = synthesize_shield(Arc::new(m), &a, &g, &c, &catalog, ShieldMode::Strict);
    let s0 = sh.mdp().index_of(&bin(0)).unwrap();
    let q = sh.start(&bin(0));
    assert_eq!(sh.allowed(s0, &q), ActionSet::single(Action::Hold));
}

#[test]
fn exhausted_falls_back_to_least_risk() {
    // p holds in bins >= 2. Every action from 2 may reach bin 0.
    let catalog = coverage_catalog(&[("p", 2)]);
    let m = coverage_mdp(&[
        (2, Action::Downtilt, 0),
        (2, Action::Hold, 0),
        (2, Action::Hold, 3),
        (2, Action::Uptilt, 0),
        (2, Action::Uptilt, 0),
        (2, Action::Uptilt, 0),
        (2, Action::Uptilt, 3),
        (3, Action::Hold, 3),
        (0, Action::Hold, 0),
    ]);
    let sh = shield_for(m, "G p", &catalog, ShieldMode::Permissive);
    let q = sh.start(&bin(2));
    let f = sh.filter(&bin(2), &q, Action::Downtilt, &[1.0, 0.0, 0.0]).unwrap();
    assert!(f.allowed.is_empty());
    assert!(f.exhausted);
    assert_eq!(f.decision, ShieldDecision::Blocked(Action::Hold));
    let s = sh.mdp().index_of(&bin(2)).unwrap();
    assert_eq!(sh.risk(s, &q, Action::Uptilt), 0.75);
}

#[test]
fn unseen_pairs_and_states_by_mode() {
    let catalog = coverage_catalog(&[("p", 1)]);
    let support = [(2, Action::Hold, 2)];
    let permissive = shield_for(coverage_mdp(&support), "G p", &catalog, ShieldMode::Permissive);
    let strict = shield_for(coverage_mdp(&support), "G p", &catalog, ShieldMode::Strict);
    let q = permissive.start(&bin(2));
    assert_eq!(permissive.allowed(0, &q), ActionSet::all());
    assert_eq!(strict.allowed(0, &q), ActionSet::single(Action::Hold));
    assert_eq!(
        permissive
            .filter(&bin(5), &q, Action::Uptilt, &[0.0; 3])
            .unwrap()
            .decision,
        ShieldDecision::Pass
    );
    assert!(strict.filter(&bin(5), &q, Action::Uptilt, &[0.0; 3]).is_err());
}

/// Deterministic support: every (s, a) has exactly one successor.
fn deterministic_support(rng: &mut impl Rng, n: usize) -> Vec<(usize, Action, usize)> {
    let mut out = Vec::new();
    for s in 0..n {
        for a in Action::ALL {
            out.push((s, a, rng.gen_range(0..n)));
        }
    }
    out
}

#[test]
fn shielded_runs_stay_hopeful_on_deterministic_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let catalog = coverage_catalog(&[("p", 2), ("q", 4), ("r", 6)]);
    let mut checked = 0;
    for round in 0..80 {
        let n = rng.gen_range(2..=8);
        let support = deterministic_support(&mut rng, n);
        let text = FORMULA_CORPUS[round % FORMULA_CORPUS.len()];
        let sh = shield_for(coverage_mdp(&support), text, &catalog, ShieldMode::Strict);
        let n = sh.mdp().num_states();
        for start in 0..n {
            let mut s = sh.mdp().state(start);
            let mut q = sh.start(&s);
            if sh.is_doomed(&s, &q) != Some(false) {
                continue;
            }
            checked += 1;
            for _ in 0..100 {
                let proposed = Action::ALL[rng.gen_range(0..3)];
                let f = sh.filter(&s, &q, proposed, &[0.0; 3]).unwrap();
                assert!(!f.exhausted, "{text}");
                let a = f.executed(proposed);
                let i = sh.mdp().index_of(&s).unwrap();
                let (t, _) = sh.mdp().successors(i, a).next().unwrap();
                s = sh.mdp().state(t);
                q = sh.advance(&q, &s);
                assert_eq!(sh.is_doomed(&s, &q), Some(false), "{text}");
            }
        }
    }
    assert!(checked > 50);
}

#[test]
fn empty_monitor_means_every_extension_violates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let letters = all_labels(&["p", "q", "r"]);
    for text in FORMULA_CORPUS {
        let phi: LtlFormula = text.parse().unwrap();
        let a = automaton(text);
        for _ in 0..40 {
            let mut prefix = Vec::new();
            let mut q: StateSet = a.initial().clone();
            for _ in 0..6 {
                let l = letters[rng.gen_range(0..letters.len())].clone();
                q = a.advance(&q, &l);
                prefix.push(l);
                if q.is_empty() {
                    break;
                }
            }
            if !q.is_empty() {
                continue;
            }
            for _ in 0..10 {
                let tail = random_lasso(&mut rng, &letters, 2, 3);
                let mut full = prefix.clone();
                full.extend_from_slice(tail.prefix());
                let w = LassoWord::new(full, tail.cycle().to_vec()).unwrap();
                assert!(!eval_on_lasso(&phi, &w), "{text}: {w:?}");
            }
        }
    }
}

#[test]
fn product_exports() {
    let catalog = coverage_catalog(&[("p", 1)]);
    let m = coverage_mdp(&[(2, Action::Hold, 2), (2, Action::Downtilt, 0), (0, Action::Hold, 0)]);
    let a = automaton("G p");
    let g = build_product(&m, &a, &catalog).unwrap();
    let c = classify(&g);
    let e = export_product(&m, &g, &c, check_satisfiable(&c), "G p");
    assert_eq!(e.nodes.len(), 1);
    assert!(e.nodes[0].hopeful);
    let dot = product_to_dot(&e);
    assert!(!dot.contains("fillcolor=red"));

    let m = coverage_mdp(&[(2, Action::Hold, 1), (1, Action::Hold, 1)]);
    let catalog = coverage_catalog(&[("p", 1)]);
    let g = build_product(&m, &automaton("F G !p | G p"), &catalog).unwrap();
    let c = classify(&g);
    let e = export_product(&m, &g, &c, check_satisfiable(&c), "F G !p | G p");
    let json = serde_json::to_string(&e).unwrap();
    assert!(json.contains("\"hopeful\":"));
    let doomed = e.nodes.iter().filter(|n| !n.hopeful).count();
    assert_eq!(product_to_dot(&e).matches("fillcolor=red").count(), doomed);
}
