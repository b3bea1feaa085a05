//! Command-line entry points.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use retshield::agent::NullSink;
use retshield::pipeline::{run_pipeline, PipelineError, PipelineOutcome};
use retshield::shield::VerdictKind;

use crate::api::{self, ServiceConfig};
use crate::options::{load_experience, parse_switch, ModelArgs};

#[derive(Debug, Parser)]
#[command(
    name = "retshield",
    version,
    about = "Shielded reinforcement learning for antenna tilt"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline once and write its artifacts.
    Run(RunArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Use the bundled simulator for experience (unless --experience is
    /// given) and for training.
    #[arg(long)]
    pub simulate: bool,
    /// Experience log in JSON lines.
    #[arg(long)]
    pub experience: Option<PathBuf>,
    /// LTL intent, e.g. "G cov_ok".
    #[arg(long)]
    pub intent: String,
    /// `on` or `off`.
    #[arg(long, default_value = "on", value_parser = parse_switch, action = clap::ArgAction::Set)]
    pub shield: bool,
    /// Training episodes.
    #[arg(long, default_value_t = 200)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Controlled cell.
    #[arg(long, default_value_t = 0)]
    pub cell: usize,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub max_concurrent: usize,
    /// Directory of static UI assets served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Serve(args) => serve(args),
    }
}

fn build(args: &RunArgs) -> Result<retshield::pipeline::PipelineConfig, PipelineError> {
    let mut cfg = args.model.template()?;
    cfg.intent = args.intent.clone();
    cfg.shield = args.shield;
    cfg.seed = args.seed;
    cfg.agent.episodes = args.episodes;
    if let Some(path) = &args.experience {
        cfg.experience = Some(load_experience(path, cfg.ranges.tilt)?);
    }
    match cfg.simulation.as_mut() {
        Some(sim) if args.simulate => sim.cells = vec![args.cell],
        _ => cfg.simulation = None,
    }
    Ok(cfg)
}

pub fn run(args: &RunArgs) -> i32 {
    let result = build(args).and_then(|cfg| run_pipeline(&cfg, &args.out, &mut NullSink));
    match result {
        Ok(outcome) => {
            print_outcome(&outcome, args);
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn print_outcome(o: &PipelineOutcome, args: &RunArgs) {
    let s = &o.summary;
    let v = &s.verdict;
    let kind = match v.verdict {
        VerdictKind::Satisfiable => "satisfiable",
        VerdictKind::UnsatisfiableOnModel => "unsatisfiable on model",
    };
    println!("intent: {}", s.intent);
    println!("features: {}", s.features);
    println!(
        "verdict: {kind} ({} of {} initial product nodes hopeful, {} doomed nodes)",
        v.hopeful_initial_nodes, v.initial_nodes, v.doomed_nodes
    );
    if let Some(msg) = &s.message {
        println!("{msg}");
    }
    if let Some(r) = &o.report {
        println!("shield: {}", if r.shield_enabled { "on" } else { "off" });
        let inv = r
            .unsafe_state_visits
            .invariant
            .map_or("n/a".to_string(), |n| n.to_string());
        println!(
            "unsafe visits: monitor {}, invariant {inv}",
            r.unsafe_state_visits.monitor
        );
        println!(
            "blocked actions: {}, exhausted: {}",
            r.blocked_action_count, r.shield_exhausted_count
        );
        println!("mean episode reward: {:.4}", r.mean_episode_reward);
    }
    println!("artifacts: {}", args.out.display());
}

fn serve(args: ServeArgs) -> i32 {
    let template = match args.model.template() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cfg = ServiceConfig {
        template,
        runs_dir: args.runs_dir,
        max_concurrent: args.max_concurrent.max(1),
        static_dir: args.static_dir,
    };
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    runtime.block_on(async move {
        let app = match api::router(cfg) {
            Ok(app) => app,
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        };
        let listener = match tokio::net::TcpListener::bind(args.addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {}: {e}", args.addr);
                return 1;
            }
        };
        eprintln!("listening on http://{}", args.addr);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        }
    })
}
