use std::fs;
use std::path::Path;

use retshield::agent::{AgentConfig, AgentEvent, NullSink};
use retshield::mdp::{ingest_experience, FeatureRanges};
use retshield::pipeline::*;
use retshield::shield::VerdictKind;

fn small(intent: &str, seed: u64) -> PipelineConfig {
    PipelineConfig {
        intent: intent.into(),
        seed,
        agent: AgentConfig {
            episodes: 8,
            episode_len: 20,
            ..AgentConfig::default()
        },
        simulation: Some(Simulation {
            exploration_episodes: 10,
            ..Simulation::default()
        }),
        ..PipelineConfig::default()
    }
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulated_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let mut events = Vec::new();
    let out = run_pipeline(&small("G cov_ok", 0), dir.path(), &mut events).unwrap();
    assert_eq!(out.exit_code(), 0);
    assert!(out.summary.trained);
    for name in [
        "experience.jsonl",
        "mdp.json",
        "cmdp.json",
        "automaton_phi.txt",
        "automaton_phi.dot",
        "automaton_phi.graph.json",
        "automaton_negphi.txt",
        "automaton_negphi.dot",
        "automaton_negphi.graph.json",
        "product.json",
        "product.dot",
        "shield.json",
        "violating_trace.jsonl",
        "events.jsonl",
        "trajectory.jsonl",
        "q_tables.json",
        "report.json",
        "summary.json",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
        assert!(out.summary.artifacts.iter().any(|a| a == name), "{name}");
    }
    let report = out.report.unwrap();
    assert_eq!(report.steps, 8 * 20);
    // the caller's sink sees the same stream that is written to disk
    let on_disk = fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    let sent: Vec<String> = events.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
    assert_eq!(on_disk.lines().collect::<Vec<_>>(), sent);
    let first: AgentEvent = serde_json::from_str(on_disk.lines().next().unwrap()).unwrap();
    assert_eq!(first.id(), 0);
    let cmdp: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("cmdp.json")).unwrap()).unwrap();
    assert_eq!(cmdp["features"], serde_json::json!(["coverage"]));
}

#[test]
fn identical_inputs_give_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&small("G cov_ok", 3), a.path(), &mut NullSink).unwrap();
    run_pipeline(&small("G cov_ok", 3), b.path(), &mut NullSink).unwrap();
    assert_eq!(read_dir(a.path()), read_dir(b.path()));
}

#[test]
fn contradiction_stops_before_the_shield() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&small("G (cov_ok & !cov_ok)", 0), dir.path(), &mut NullSink).unwrap();
    assert_eq!(out.summary.verdict.verdict, VerdictKind::UnsatisfiableOnModel);
    assert_eq!(out.exit_code(), 3);
    let msg = out.summary.message.unwrap();
    assert!(msg.contains("Modify or relax"));
    assert!(out.report.is_none());
    assert!(!dir.path().join("shield.json").exists());
    assert!(!dir.path().join("report.json").exists());
    // every trace violates a contradiction
    assert!(out.summary.violating_trace_found);
    assert!(!fs::read_to_string(dir.path().join("violating_trace.jsonl"))
        .unwrap()
        .is_empty());
}

#[test]
fn experience_file_without_simulation_skips_training() {
    let sim_dir = tempfile::tempdir().unwrap();
    run_pipeline(&small("G cov_ok", 1), sim_dir.path(), &mut NullSink).unwrap();
    let text = fs::read_to_string(sim_dir.path().join("experience.jsonl")).unwrap();
    let buf = ingest_experience(text.as_bytes(), FeatureRanges::default().tilt).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        experience: Some(buf),
        simulation: None,
        ..small("F G cap_ok | G cov_ok", 1)
    };
    let out = run_pipeline(&cfg, dir.path(), &mut NullSink).unwrap();
    assert!(!out.summary.trained);
    assert!(dir.path().join("shield.json").is_file());
    assert!(!dir.path().join("experience.jsonl").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(&small("G (cov_ok", 0), dir.path(), &mut NullSink).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = run_pipeline(&small("G nope", 0), dir.path(), &mut NullSink).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let no_source = PipelineConfig {
        simulation: None,
        ..small("G cov_ok", 0)
    };
    assert_eq!(
        run_pipeline(&no_source, dir.path(), &mut NullSink)
            .unwrap_err()
            .exit_code(),
        4
    );
    let bad_bins = PipelineConfig {
        catalog: retshield::ltl::PropositionCatalog::kpi_defaults(5),
        ..small("G cov_ok", 0)
    };
    assert_eq!(
        run_pipeline(&bad_bins, dir.path(), &mut NullSink)
            .unwrap_err()
            .exit_code(),
        4
    );
}
