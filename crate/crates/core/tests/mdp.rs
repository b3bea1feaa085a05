use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use retshield::mdp::{project_cmdp, DiscreteState, Discretizer, Mdp};
use retshield::testkit::{random_experience, synthetic_chain};
use retshield::{Action, Feature, FeatureSet};

const CHAIN: [[f64; 4]; 4] = [
    [0.1, 0.6, 0.3, 0.0],
    [0.0, 0.2, 0.5, 0.3],
    [0.25, 0.0, 0.25, 0.5],
    [0.7, 0.1, 0.0, 0.2],
];

fn cov_state(i: usize) -> DiscreteState {
    DiscreteState::from_bins([(Feature::Coverage, i)])
}

#[test]
fn chain_probabilities_are_recovered() {
    let cov = FeatureSet::empty().with(Feature::Coverage);
    for seed in 0..5 {
        let (buf, d) = synthetic_chain(&CHAIN, 10_000, seed);
        let m = project_cmdp(&buf, cov, &d, 0.9).unwrap();
        assert_eq!(m.num_states(), 4);
        for (i, row) in CHAIN.iter().enumerate() {
            let s = m.index_of(&cov_state(i)).unwrap();
            for (j, &p) in row.iter().enumerate() {
                let t = m.index_of(&cov_state(j)).unwrap();
                let est = m.prob(s, Action::Hold, t).unwrap();
                assert!((est - p).abs() <= 0.05, "seed {seed}: P({j}|{i}) = {est}, expected {p}");
            }
        }
    }
}

fn subset_strategy() -> impl Strategy<Value = FeatureSet> {
    (1u8..16).prop_map(|mask| {
        Feature::ALL
            .into_iter()
            .filter(|f| mask & (1 << f.index()) != 0)
            .collect()
    })
}

proptest! {
    #[test]
    fn rows_are_stochastic(seed in any::<u64>(), n in 1usize..300, nb in 2usize..6, fs in subset_strategy()) {
        let buf = random_experience(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let d = Discretizer::new(nb, Default::default());
        let m = Mdp::estimate(&buf, &d, fs, 0.9).unwrap();
        prop_assert!(m.num_states() <= nb.pow(fs.len() as u32));
        for s in 0..m.num_states() {
            for a in Action::ALL {
                if m.is_observed(s, a) {
                    let sum: f64 = m.successors(s, a).map(|(_, p)| p).sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-9);
                    prop_assert!(m.successors(s, a).all(|(_, p)| p > 0.0 && p <= 1.0));
                } else {
                    prop_assert_eq!(m.successors(s, a).count(), 0);
                }
            }
        }
    }

    #[test]
    fn projection_pools_full_counts(seed in any::<u64>(), n in 1usize..300, fs in subset_strategy()) {
        let buf = random_experience(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let d = Discretizer::default();
        let full = Mdp::estimate(&buf, &d, FeatureSet::all(), 0.9).unwrap();
        let cmdp = Mdp::estimate(&buf, &d, fs, 0.9).unwrap();
        prop_assert!(cmdp.num_states() <= full.num_states());
        for cs in 0..cmdp.num_states() {
            for a in Action::ALL {
                let members: Vec<usize> = (0..full.num_states())
                    .filter(|&s| full.state(s).project(fs) == cmdp.state(cs))
                    .collect();
                let pooled: u64 = members.iter().map(|&s| full.count(s, a)).sum();
                prop_assert_eq!(cmdp.count(cs, a), pooled);
                for ct in 0..cmdp.num_states() {
                    let mut expected = 0;
                    for &s in &members {
                        for t in 0..full.num_states() {
                            if full.state(t).project(fs) == cmdp.state(ct) {
                                expected += full.transition_count(s, a, t);
                            }
                        }
                    }
                    prop_assert_eq!(cmdp.transition_count(cs, a, ct), expected);
                }
            }
        }
    }
}
