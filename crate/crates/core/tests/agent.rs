use retshield::agent::*;
use retshield::env::Environment;
use retshield::mdp::DiscreteState;
use retshield::sim::{NetworkConfig, RetEnvironment};
use retshield::testkit::value_iteration;
use retshield::{Action, ActionSet, Feature, FeatureSet};

fn chain_config(algorithm: Algorithm) -> AgentConfig {
    AgentConfig {
        algorithm,
        episodes: 100,
        episode_len: 50,
        features: FeatureSet::empty().with(Feature::Tilt),
        ..AgentConfig::default()
    }
}

fn greedy_policy(q: &QTable) -> Vec<Action> {
    (0..CHAIN_LEN)
        .map(|i| {
            let s = DiscreteState::from_bins([(Feature::Tilt, i)]);
            q.greedy(&s, ActionSet::all()).unwrap()
        })
        .collect()
}

#[test]
fn chain_policy_matches_value_iteration() {
    let (oracle, _) = value_iteration(&ChainEnvironment::transitions(), 0.9, 1e-12);
    let oracle: Vec<Action> = oracle.into_iter().map(|a| Action::from_index(a).unwrap()).collect();
    assert_eq!(oracle[0], Action::Downtilt);
    assert_eq!(oracle[CHAIN_LEN - 1], Action::Hold);
    for algorithm in [Algorithm::QLearning, Algorithm::Sarsa] {
        let cfg = chain_config(algorithm);
        for seed in 0..5 {
            let mut env = ChainEnvironment::new();
            let out = train(
                &mut env,
                &cfg,
                &ChainEnvironment::discretizer(),
                None,
                seed,
                &mut NullSink,
            )
            .unwrap();
            assert_eq!(out.report.steps, 5000);
            assert_eq!(greedy_policy(&out.tables[&0]), oracle, "{algorithm:?} seed {seed}");
        }
    }
}

#[test]
fn same_seed_same_report_and_events() {
    let cfg = AgentConfig {
        episodes: 6,
        episode_len: 20,
        ..AgentConfig::default()
    };
    let run = || {
        let mut env = RetEnvironment::single(NetworkConfig::default(), 0).unwrap();
        let mut events = Vec::new();
        let out = train(&mut env, &cfg, &Default::default(), None, 42, &mut events).unwrap();
        (serde_json::to_string(&out.report).unwrap(), events)
    };
    let (a, ea) = run();
    let (b, eb) = run();
    assert_eq!(a, b);
    assert_eq!(ea, eb);
    let other = {
        let mut env = RetEnvironment::single(NetworkConfig::default(), 0).unwrap();
        train(&mut env, &cfg, &Default::default(), None, 43, &mut NullSink)
            .unwrap()
            .report
    };
    assert_ne!(serde_json::to_string(&other).unwrap(), a);
}

#[test]
fn unshielded_runs_never_block_and_events_are_ordered() {
    let cfg = AgentConfig {
        episodes: 3,
        episode_len: 10,
        ..AgentConfig::default()
    };
    let mut env = RetEnvironment::all_cells(NetworkConfig {
        n_cells: 3,
        ..Default::default()
    })
    .unwrap();
    let mut events = Vec::new();
    let out = train(&mut env, &cfg, &Default::default(), None, 1, &mut events).unwrap();
    let r = &out.report;
    assert_eq!(r.blocked_action_count, 0);
    assert!(!r.shield_enabled);
    assert_eq!(r.steps, 3 * 10 * 3);
    assert_eq!(r.episode_rewards.len(), 3);
    assert!((r.episode_rewards.iter().sum::<f64>() - r.cumulative_reward).abs() < 1e-9);
    assert_eq!(out.tables.len(), 3);
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e.id(), i as u64);
    }
    let steps: Vec<&StepEvent> = events
        .iter()
        .filter_map(|e| match e {
            AgentEvent::Step(s) => Some(s),
            _ => None,
        })
        .collect();
    assert_eq!(steps.len(), 90);
    // round-robin over the controlled cells
    assert_eq!(steps[..3].iter().map(|s| s.cell).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(steps.iter().all(|s| s.proposed_action == s.executed_action));
    let line = serde_json::to_value(&events[0]).unwrap();
    assert_eq!(line["type"], "step");
    assert_eq!(line["shield_decision"]["kind"], "pass");
}

#[test]
fn sink_failure_aborts_the_run() {
    let mut env = ChainEnvironment::new();
    let mut n = 0;
    let mut sink = FnSink(|_: &AgentEvent| {
        n += 1;
        if n > 5 {
            Err(SinkError("closed".into()))
        } else {
            Ok(())
        }
    });
    let err = train(
        &mut env,
        &chain_config(Algorithm::QLearning),
        &ChainEnvironment::discretizer(),
        None,
        0,
        &mut sink,
    )
    .unwrap_err();
    assert!(matches!(err, TrainError::Sink(_)));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut env = ChainEnvironment::new();
    for cfg in [
        AgentConfig {
            alpha: 0.0,
            ..AgentConfig::default()
        },
        AgentConfig {
            gamma: 1.5,
            ..AgentConfig::default()
        },
        AgentConfig {
            episodes: 0,
            ..AgentConfig::default()
        },
    ] {
        assert!(matches!(
            train(&mut env, &cfg, &ChainEnvironment::discretizer(), None, 0, &mut NullSink),
            Err(TrainError::Config(_))
        ));
    }
    assert_eq!(env.cells(), vec![0]);
}
