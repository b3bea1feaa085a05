//! The end-to-end run: experience, MDP, automata, model check, shield,
//! shielded training, with every intermediate result written to a run
//! directory.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{self, AgentConfig, AgentEvent, EventSink, JsonlSink, Supervision, TrainError, TrainingReport};
use crate::buchi::{to_dot, translate_to_buchi, BuchiAutomaton};
use crate::env::{EnvError, Environment};
use crate::ltl::{format_ltl, parse_ltl, to_nnf, CatalogError, LtlFormula, ParseError, PropositionCatalog};
use crate::mdp::{
    CmdpRegistry, Discretizer, ExperienceBuffer, ExperienceError, ExperienceRecord, FeatureRanges, Mdp, MdpError,
};
use crate::shield::{
    build_product, check_satisfiable, classify, export_product, export_shield, find_violating_trace, product_to_dot,
    synthesize_shield, ProductError, ShieldMode, Verdict, VerdictKind,
};
use crate::sim::{write_trajectory, ConfigError, NetworkConfig, RetEnvironment};
use crate::{Action, FeatureSet};

pub const SUMMARY_VERSION: u32 = 1;

/// Default catalog threshold: with three bins, `cov_ok` means coverage of at
/// least one third.
pub const DEFAULT_THRESHOLD_BIN: usize = 1;

/// A parsed intent and the automata for it and for its negation.
#[derive(Debug, Clone)]
pub struct CompiledIntent {
    pub formula: LtlFormula,
    pub phi: BuchiAutomaton,
    pub neg_phi: BuchiAutomaton,
}

pub fn compile_intent(text: &str, catalog: &PropositionCatalog) -> Result<CompiledIntent, ParseError> {
    let formula = parse_ltl(text, catalog)?;
    let phi = translate_to_buchi(&to_nnf(&formula));
    let neg_phi = translate_to_buchi(&to_nnf(&LtlFormula::not(formula.clone())));
    Ok(CompiledIntent { formula, phi, neg_phi })
}

/// The bundled simulator as the experience source and training environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub network: NetworkConfig,
    pub cells: Vec<usize>,
    /// Episodes of uniformly random actions collected before the MDP is
    /// estimated.
    pub exploration_episodes: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation {
            network: NetworkConfig::default(),
            cells: vec![0],
            exploration_episodes: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub intent: String,
    pub catalog: PropositionCatalog,
    pub nb: usize,
    pub ranges: FeatureRanges,
    pub gamma: f64,
    pub include_action_feature: bool,
    pub shield: bool,
    pub shield_mode: ShieldMode,
    pub agent: AgentConfig,
    pub seed: u64,
    /// Used as the experience source when `experience` is absent, and as
    /// the training environment.
    pub simulation: Option<Simulation>,
    pub experience: Option<ExperienceBuffer>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            intent: "G cov_ok".into(),
            catalog: PropositionCatalog::kpi_defaults(DEFAULT_THRESHOLD_BIN),
            nb: 3,
            ranges: FeatureRanges::default(),
            gamma: 0.9,
            include_action_feature: false,
            shield: true,
            shield_mode: ShieldMode::Permissive,
            agent: AgentConfig::default(),
            seed: 0,
            simulation: Some(Simulation::default()),
            experience: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("intent: {0}")]
    Parse(#[from] ParseError),
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error("experience: {0}")]
    Experience(#[from] ExperienceError),
    #[error("simulator config: {0}")]
    Config(#[from] ConfigError),
    #[error("model: {0}")]
    Mdp(#[from] MdpError),
    #[error("product: {0}")]
    Product(#[from] ProductError),
    #[error("{0}")]
    Input(String),
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("training: {0}")]
    Train(#[from] TrainError),
    #[error("writing artifacts: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Parse(_) => 2,
            PipelineError::Catalog(_)
            | PipelineError::Experience(_)
            | PipelineError::Config(_)
            | PipelineError::Mdp(_)
            | PipelineError::Product(_)
            | PipelineError::Input(_) => 4,
            PipelineError::Env(_) | PipelineError::Train(_) | PipelineError::Io(_) => 1,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub version: u32,
    pub intent: String,
    pub nnf: String,
    pub features: FeatureSet,
    pub mdp_states: usize,
    pub cmdp_states: usize,
    pub verdict: Verdict,
    pub violating_trace_found: bool,
    pub message: Option<String>,
    pub shield_enabled: bool,
    pub trained: bool,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub summary: PipelineSummary,
    pub report: Option<TrainingReport>,
}

impl PipelineOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.summary.verdict.verdict {
            VerdictKind::Satisfiable => 0,
            VerdictKind::UnsatisfiableOnModel => 3,
        }
    }
}

pub fn modify_relax_message(intent: &str) -> String {
    format!(
        "The intent `{intent}` cannot be satisfied on the learned model: no trace of the MDP \
         satisfies it. Modify or relax the intent, for example by lowering a threshold or \
         dropping a conjunct, and run the check again."
    )
}

/// Uniformly random actions on every controlled cell, round-robin.
pub fn collect_random_experience(
    env: &mut dyn Environment,
    episodes: usize,
    episode_len: usize,
    seed: u64,
) -> Result<ExperienceBuffer, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = ExperienceBuffer::new();
    let cells = env.cells();
    for _ in 0..episodes {
        env.reset(rng.gen())?;
        for _ in 0..episode_len {
            for &c in &cells {
                let s = env.observe(c)?;
                let a = Action::ALL[rng.gen_range(0..3)];
                let (s_next, r) = env.step(c, a)?;
                buf.push(ExperienceRecord { s, a, r, s_next });
            }
        }
    }
    Ok(buf)
}

struct Artifacts<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> std::io::Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
        text.push('\n');
        self.write(name, text)
    }
}

/// Forwards to two sinks.
struct Tee<'a, 'b>(&'a mut dyn EventSink, &'b mut dyn EventSink);

impl EventSink for Tee<'_, '_> {
    fn emit(&mut self, e: &AgentEvent) -> Result<(), agent::SinkError> {
        self.0.emit(e)?;
        self.1.emit(e)
    }
}

/// The exploration experience a simulated run with `seed` starts from.
pub fn simulated_experience(
    sim: &Simulation,
    episode_len: usize,
    seed: u64,
) -> Result<ExperienceBuffer, PipelineError> {
    let mut env = RetEnvironment::new(sim.network.clone(), sim.cells.clone())?;
    Ok(collect_random_experience(
        &mut env,
        sim.exploration_episodes,
        episode_len,
        seed ^ 0x6a09_e667_f3bc_c908,
    )?)
}

/// Runs the whole pipeline and writes its artifacts into `out`, which is
/// created if needed. Training events also go to `sink`.
///
/// An intent that is unsatisfiable on the model is not an error: the
/// outcome carries the verdict and the modify/relax message, and no shield
/// or training artifacts are written.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    out: &Path,
    sink: &mut dyn EventSink,
) -> Result<PipelineOutcome, PipelineError> {
    let intent = compile_intent(&cfg.intent, &cfg.catalog)?;
    cfg.catalog.validate_bins(cfg.nb)?;
    if cfg.nb < 2 {
        return Err(PipelineError::Input("the bin count must be at least 2".into()));
    }
    if let Some(sim) = &cfg.simulation {
        sim.network.validate()?;
    }
    fs::create_dir_all(out)?;
    let mut art = Artifacts {
        dir: out,
        names: Vec::new(),
    };

    // experience
    let buffer = match (&cfg.experience, &cfg.simulation) {
        (Some(buf), _) => buf.clone(),
        (None, Some(sim)) => {
            let buf = simulated_experience(sim, cfg.agent.episode_len, cfg.seed)?;
            art.write("experience.jsonl", buf.to_jsonl())?;
            buf
        }
        (None, None) => {
            return Err(PipelineError::Input(
                "no experience source: give an experience file or enable simulation".into(),
            ))
        }
    };
    if buffer.is_empty() {
        return Err(ExperienceError::EmptySource.into());
    }

    // models
    let disc = Discretizer::new(cfg.nb, cfg.ranges);
    let registry =
        CmdpRegistry::new(Arc::new(buffer), disc.clone(), cfg.gamma)?.with_action_feature(cfg.include_action_feature);
    let full = registry.full();
    art.json("mdp.json", &full.export(&cfg.catalog))?;
    let cmdp: Arc<Mdp> = registry.match_cmdp(&intent.formula, &cfg.catalog);
    art.json("cmdp.json", &cmdp.export(&cfg.catalog))?;

    // automata
    for (stem, a) in [("automaton_phi", &intent.phi), ("automaton_negphi", &intent.neg_phi)] {
        art.write(&format!("{stem}.txt"), a.to_text())?;
        art.write(&format!("{stem}.dot"), to_dot(a))?;
        art.json(&format!("{stem}.graph.json"), &a.to_graph())?;
    }

    // model check
    let product = build_product(&cmdp, &intent.phi, &cfg.catalog)?;
    let classification = classify(&product);
    let verdict = check_satisfiable(&classification);
    let text = format_ltl(&intent.formula);
    let export = export_product(&cmdp, &product, &classification, verdict, &text);
    art.json("product.json", &export)?;
    art.write("product.dot", product_to_dot(&export))?;

    let trace = find_violating_trace(&cmdp, &intent.neg_phi, &cfg.catalog)?;
    art.write(
        "violating_trace.jsonl",
        trace.as_ref().map(|t| t.to_jsonl()).unwrap_or_default(),
    )?;

    let mut summary = PipelineSummary {
        version: SUMMARY_VERSION,
        intent: text.clone(),
        nnf: format_ltl(&to_nnf(&intent.formula)),
        features: cmdp.features(),
        mdp_states: full.num_states(),
        cmdp_states: cmdp.num_states(),
        verdict,
        violating_trace_found: trace.is_some(),
        message: None,
        shield_enabled: cfg.shield,
        trained: false,
        artifacts: Vec::new(),
    };

    if !verdict.is_satisfiable() {
        summary.message = Some(modify_relax_message(&text));
        return finish(art, summary, None);
    }

    let shield = synthesize_shield(
        Arc::clone(&cmdp),
        &intent.phi,
        &product,
        &classification,
        &cfg.catalog,
        cfg.shield_mode,
    );
    art.json("shield.json", &export_shield(&shield))?;

    let Some(sim) = &cfg.simulation else {
        return finish(art, summary, None);
    };
    let mut env = RetEnvironment::new(sim.network.clone(), sim.cells.clone())?.with_trajectory();
    let supervision = Supervision {
        shield: &shield,
        enforce: cfg.shield,
        invariant: intent.formula.safety_invariant(),
    };
    let mut events = Vec::new();
    let trained = {
        let mut jsonl = JsonlSink(&mut events);
        let mut tee = Tee(&mut jsonl, sink);
        agent::train(&mut env, &cfg.agent, &disc, Some(supervision), cfg.seed, &mut tee)?
    };
    art.write("events.jsonl", events)?;
    let mut trajectory = Vec::new();
    write_trajectory(env.trajectory(), &mut trajectory)?;
    art.write("trajectory.jsonl", trajectory)?;
    let tables: Vec<_> = trained
        .tables
        .iter()
        .map(|(c, q)| serde_json::json!({"cell": c, "q": q}))
        .collect();
    art.json("q_tables.json", &tables)?;
    art.json("report.json", &trained.report)?;
    summary.trained = true;
    finish(art, summary, Some(trained.report))
}

fn finish(
    mut art: Artifacts<'_>,
    mut summary: PipelineSummary,
    report: Option<TrainingReport>,
) -> Result<PipelineOutcome, PipelineError> {
    summary.artifacts = art.names.clone();
    summary.artifacts.push("summary.json".into());
    art.json("summary.json", &summary)?;
    Ok(PipelineOutcome { summary, report })
}
