//! Model and training settings shared by `run` and `serve`.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use retshield::agent::{AgentConfig, Algorithm};
use retshield::ltl::PropositionCatalog;
use retshield::mdp::{ingest_experience, ExperienceBuffer, FeatureRanges};
use retshield::pipeline::{PipelineConfig, PipelineError, Simulation, DEFAULT_THRESHOLD_BIN};
use retshield::shield::ShieldMode;
use retshield::sim::NetworkConfig;

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Bins per feature.
    #[arg(long, default_value_t = 3)]
    pub nb: usize,
    /// Discount factor for the MDP and the agent.
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Proposition catalog file; defaults to cov_ok/cap_ok/qual_ok.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Threshold bin of the default catalog.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_BIN)]
    pub threshold_bin: usize,
    /// Simulator config file.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Always include tilt in the matched CMDP.
    #[arg(long)]
    pub include_tilt: bool,
    /// `permissive` allows actions never tried in the experience, `strict` blocks them.
    #[arg(long, default_value = "permissive")]
    pub shield_mode: ShieldMode,
    /// `q_learning` or `sarsa`.
    #[arg(long, default_value = "q_learning")]
    pub algorithm: Algorithm,
    /// Steps per episode, for exploration and training.
    #[arg(long, default_value_t = 50)]
    pub episode_len: usize,
    /// Random-policy episodes collected before the MDP is estimated.
    #[arg(long, default_value_t = 100)]
    pub exploration_episodes: usize,
}

impl Default for ModelArgs {
    fn default() -> Self {
        ModelArgs {
            nb: 3,
            gamma: 0.9,
            catalog: None,
            threshold_bin: DEFAULT_THRESHOLD_BIN,
            network: None,
            include_tilt: false,
            shield_mode: ShieldMode::Permissive,
            algorithm: Algorithm::QLearning,
            episode_len: 50,
            exploration_episodes: 100,
        }
    }
}

fn read(path: &PathBuf) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("cannot read {}: {e}", path.display())))
}

impl ModelArgs {
    /// Pipeline settings without intent, seed or episode count.
    pub fn template(&self) -> Result<PipelineConfig, PipelineError> {
        let catalog = match &self.catalog {
            Some(p) => PropositionCatalog::parse(&read(p)?)?,
            None => PropositionCatalog::kpi_defaults(self.threshold_bin),
        };
        let network = match &self.network {
            Some(p) => NetworkConfig::from_json(&read(p)?)?,
            None => NetworkConfig::default(),
        };
        let (lo, hi) = network.tilt_range_deg;
        Ok(PipelineConfig {
            catalog,
            nb: self.nb,
            ranges: FeatureRanges {
                tilt: (lo as f64, hi as f64),
                ..FeatureRanges::default()
            },
            gamma: self.gamma,
            include_action_feature: self.include_tilt,
            shield_mode: self.shield_mode,
            agent: AgentConfig {
                algorithm: self.algorithm,
                gamma: self.gamma,
                episode_len: self.episode_len,
                ..AgentConfig::default()
            },
            simulation: Some(Simulation {
                network,
                cells: vec![0],
                exploration_episodes: self.exploration_episodes,
            }),
            ..PipelineConfig::default()
        })
    }
}

pub fn load_experience(path: &PathBuf, tilt_range: (f64, f64)) -> Result<ExperienceBuffer, PipelineError> {
    let file =
        fs::File::open(path).map_err(|e| PipelineError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(ingest_experience(std::io::BufReader::new(file), tilt_range)?)
}

/// `on`/`off` switch values.
pub fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(format!("expected on or off, got `{other}`")),
    }
}
