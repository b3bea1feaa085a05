use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{select_action, EpsilonSchedule, QTable};
use crate::buchi::StateSet;
use crate::env::{EnvError, Environment};
use crate::ltl::LtlFormula;
use crate::mdp::{DiscreteState, Discretizer, RawState};
use crate::shield::{Shield, ShieldDecision, ShieldError, ShieldMode};
use crate::{Action, ActionSet, FeatureSet};

pub const TRAINING_REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    QLearning,
    Sarsa,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "q_learning" | "q-learning" | "q" => Ok(Algorithm::QLearning),
            "sarsa" => Ok(Algorithm::Sarsa),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub episode_len: usize,
    pub episodes: usize,
    /// Features the agent's state is built from.
    pub features: FeatureSet,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            algorithm: Algorithm::QLearning,
            alpha: 0.1,
            gamma: 0.9,
            epsilon: EpsilonSchedule::default(),
            episode_len: 50,
            episodes: 200,
            features: FeatureSet::all(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if self.episode_len == 0 || self.episodes == 0 {
            return bad("episodes and episode_len must be positive");
        }
        if self.features.is_empty() {
            return bad("the agent needs at least one state feature");
        }
        Ok(())
    }
}

/// The monitor and, when `enforce` is set, the shield of a training run.
///
/// Unsafe visits are counted against the shield's automaton whether or not
/// it is enforced, so shielded and unshielded runs are comparable.
#[derive(Debug, Clone, Copy)]
pub struct Supervision<'a> {
    pub shield: &'a Shield,
    pub enforce: bool,
    /// State predicate of a `G p`-style intent, counted separately.
    pub invariant: Option<&'a LtlFormula>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnsafeVisits {
    /// Steps after which the intent's monitor set became empty.
    pub monitor: u64,
    /// Steps landing in a state that falsifies the invariant, if the intent
    /// has one.
    pub invariant: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub shield_enabled: bool,
    pub shield_mode: Option<ShieldMode>,
    pub cells: Vec<usize>,
    pub episodes: usize,
    pub steps: u64,
    pub cumulative_reward: f64,
    pub mean_episode_reward: f64,
    pub episode_rewards: Vec<f64>,
    pub unsafe_state_visits: UnsafeVisits,
    pub blocked_action_count: u64,
    pub shield_exhausted_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub id: u64,
    pub episode: usize,
    pub step: usize,
    pub cell: usize,
    pub state: DiscreteState,
    pub next_state: DiscreteState,
    pub proposed_action: Action,
    pub shield_decision: ShieldDecision,
    pub executed_action: Action,
    pub reward: f64,
    pub unsafe_flag: bool,
    pub q_hash: String,
}

/// Telemetry emitted by [`train`], in emission order. `id` increases by one
/// per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentEvent {
    Step(StepEvent),
    ShieldExhausted {
        id: u64,
        episode: usize,
        step: usize,
        cell: usize,
        state: DiscreteState,
        executed_action: Action,
    },
    EpisodeEnd {
        id: u64,
        episode: usize,
        reward: f64,
    },
}

impl AgentEvent {
    pub fn id(&self) -> u64 {
        match self {
            AgentEvent::Step(e) => e.id,
            AgentEvent::ShieldExhausted { id, .. } | AgentEvent::EpisodeEnd { id, .. } => *id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AgentEvent::Step(_) => "step",
            AgentEvent::ShieldExhausted { .. } => "shield_exhausted",
            AgentEvent::EpisodeEnd { .. } => "episode_end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event sink failed: {0}")]
pub struct SinkError(pub String);

pub trait EventSink {
    fn emit(&mut self, e: &AgentEvent) -> Result<(), SinkError>;
}

impl EventSink for Vec<AgentEvent> {
    fn emit(&mut self, e: &AgentEvent) -> Result<(), SinkError> {
        self.push(e.clone());
        Ok(())
    }
}

/// Discards every event.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _: &AgentEvent) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Forwards events to a closure.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&AgentEvent) -> Result<(), SinkError>> EventSink for FnSink<F> {
    fn emit(&mut self, e: &AgentEvent) -> Result<(), SinkError> {
        (self.0)(e)
    }
}

/// One JSON object per line.
pub struct JsonlSink<W: Write>(pub W);

impl<W: Write> EventSink for JsonlSink<W> {
    fn emit(&mut self, e: &AgentEvent) -> Result<(), SinkError> {
        let fail = |err: &dyn std::fmt::Display| SinkError(err.to_string());
        serde_json::to_writer(&mut self.0, e).map_err(|err| fail(&err))?;
        self.0.write_all(b"\n").map_err(|err| fail(&err))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Shield(#[from] ShieldError),
    #[error(transparent)]
    Sink(#[from] SinkError),
}

/// Final Q-tables per controlled cell alongside the report.
#[derive(Debug, Clone)]
pub struct Trained {
    pub report: TrainingReport,
    pub tables: BTreeMap<usize, QTable>,
}

struct CellLoop {
    cell: usize,
    q: QTable,
    state: DiscreteState,
    monitor_state: Option<DiscreteState>,
    monitor: StateSet,
    steps: u64,
    pending: Option<(DiscreteState, Action, f64, DiscreteState)>,
}

/// Runs `cfg.episodes` episodes of `cfg.episode_len` steps per controlled
/// cell, stepping the cells round-robin. Exploration and episode seeds are
/// drawn from separate generators derived from `seed`.
pub fn train(
    env: &mut dyn Environment,
    cfg: &AgentConfig,
    disc: &Discretizer,
    supervision: Option<Supervision<'_>>,
    seed: u64,
    sink: &mut dyn EventSink,
) -> Result<Trained, TrainError> {
    cfg.validate()?;
    let mut agent_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let cells = env.cells();
    let total = (cfg.episodes * cfg.episode_len) as u64;
    let enforce = supervision.is_some_and(|s| s.enforce);

    let shield_state = |raw: &RawState| {
        supervision.map(|sv| {
            let m = sv.shield.mdp();
            m.discretizer().discretize(raw, m.features())
        })
    };

    let mut loops: Vec<CellLoop> = cells
        .iter()
        .map(|&cell| CellLoop {
            cell,
            q: QTable::new(),
            state: DiscreteState::default(),
            monitor_state: None,
            monitor: StateSet::new(),
            steps: 0,
            pending: None,
        })
        .collect();

    let mut report = TrainingReport {
        version: TRAINING_REPORT_VERSION,
        algorithm: cfg.algorithm,
        seed,
        shield_enabled: enforce,
        shield_mode: supervision.filter(|s| s.enforce).map(|s| s.shield.mode()),
        cells: cells.clone(),
        episodes: cfg.episodes,
        steps: 0,
        cumulative_reward: 0.0,
        mean_episode_reward: 0.0,
        episode_rewards: Vec::with_capacity(cfg.episodes),
        unsafe_state_visits: UnsafeVisits {
            monitor: 0,
            invariant: supervision.and_then(|s| s.invariant).map(|_| 0),
        },
        blocked_action_count: 0,
        shield_exhausted_count: 0,
    };
    let mut next_id = 0u64;
    let mut id = || {
        next_id += 1;
        next_id - 1
    };

    for episode in 0..cfg.episodes {
        env.reset(episode_rng.gen())?;
        for l in &mut loops {
            let raw = env.observe(l.cell)?;
            l.state = disc.discretize(&raw, cfg.features);
            l.monitor_state = shield_state(&raw);
            l.monitor = match (supervision, &l.monitor_state) {
                (Some(sv), Some(s)) => sv.shield.start(s),
                _ => StateSet::new(),
            };
            l.pending = None;
        }
        let mut episode_reward = 0.0;
        for step in 0..cfg.episode_len {
            for l in &mut loops {
                let eps = cfg.epsilon.value(l.steps, total);
                let proposed = select_action(&l.q, &l.state, eps, ActionSet::all(), &mut agent_rng);
                let filtered = match (supervision, &l.monitor_state) {
                    (Some(sv), Some(ms)) if enforce => {
                        Some(sv.shield.filter(ms, &l.monitor, proposed, &l.q.row(&l.state))?)
                    }
                    _ => None,
                };
                let decision = filtered.map_or(ShieldDecision::Pass, |f| f.decision);
                let exhausted = filtered.is_some_and(|f| f.exhausted);
                let executed = filtered.map_or(proposed, |f| f.executed(proposed));

                let (raw, r) = env.step(l.cell, executed)?;
                let next = disc.discretize(&raw, cfg.features);
                let next_ms = shield_state(&raw);
                let mut unsafe_flag = false;
                if let (Some(sv), Some(ms)) = (supervision, &next_ms) {
                    l.monitor = sv.shield.advance(&l.monitor, ms);
                    if l.monitor.is_empty() {
                        report.unsafe_state_visits.monitor += 1;
                        unsafe_flag = true;
                    }
                    if let Some(inv) = sv.invariant {
                        if inv.eval_propositional(&sv.shield.label(ms)) == Some(false) {
                            *report.unsafe_state_visits.invariant.get_or_insert(0) += 1;
                            unsafe_flag = true;
                        }
                    }
                }

                match cfg.algorithm {
                    Algorithm::QLearning => l.q.q_update(l.state, executed, r, &next, cfg.alpha, cfg.gamma),
                    Algorithm::Sarsa => {
                        if let Some((s, a, pr, sn)) = l.pending.take() {
                            l.q.sarsa_update(s, a, pr, &sn, executed, cfg.alpha, cfg.gamma);
                        }
                        l.pending = Some((l.state, executed, r, next));
                    }
                }

                if matches!(decision, ShieldDecision::Blocked(_)) {
                    report.blocked_action_count += 1;
                }
                sink.emit(&AgentEvent::Step(StepEvent {
                    id: id(),
                    episode,
                    step,
                    cell: l.cell,
                    state: l.state,
                    next_state: next,
                    proposed_action: proposed,
                    shield_decision: decision,
                    executed_action: executed,
                    reward: r,
                    unsafe_flag,
                    q_hash: format!("{:016x}", l.q.digest()),
                }))?;
                if exhausted {
                    report.shield_exhausted_count += 1;
                    sink.emit(&AgentEvent::ShieldExhausted {
                        id: id(),
                        episode,
                        step,
                        cell: l.cell,
                        state: l.state,
                        executed_action: executed,
                    })?;
                }

                episode_reward += r;
                l.state = next;
                l.monitor_state = next_ms;
                l.steps += 1;
                report.steps += 1;
            }
        }
        // The episode is truncated, not terminated: the last SARSA backup
        // bootstraps from the greedy value.
        for l in &mut loops {
            if let Some((s, a, r, sn)) = l.pending.take() {
                l.q.q_update(s, a, r, &sn, cfg.alpha, cfg.gamma);
            }
        }
        report.cumulative_reward += episode_reward;
        report.episode_rewards.push(episode_reward);
        sink.emit(&AgentEvent::EpisodeEnd {
            id: id(),
            episode,
            reward: episode_reward,
        })?;
    }
    report.mean_episode_reward = report.cumulative_reward / cfg.episodes as f64;
    let tables = loops.into_iter().map(|l| (l.cell, l.q)).collect();
    Ok(Trained { report, tables })
}
