//! Tabular Q-learning and SARSA with an optional shield between the policy
//! and the environment.

mod chain;
mod train;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use chain::{ChainEnvironment, CHAIN_LEN};
pub use train::{
    train, AgentConfig, AgentEvent, Algorithm, EventSink, FnSink, JsonlSink, NullSink, SinkError, StepEvent,
    Supervision, TrainError, Trained, TrainingReport, UnsafeVisits, TRAINING_REPORT_VERSION,
};

use crate::mdp::DiscreteState;
use crate::{Action, ActionSet};

/// Action values per discrete state; unseen entries are 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    values: BTreeMap<DiscreteState, [f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct QRow {
    state: DiscreteState,
    values: [f64; 3],
}

impl Serialize for QTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.values.iter().map(|(s, v)| QRow { state: *s, values: *v }))
    }
}

impl<'de> Deserialize<'de> for QTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<QRow>::deserialize(deserializer)?;
        Ok(QTable {
            values: rows.into_iter().map(|r| (r.state, r.values)).collect(),
        })
    }
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, s: &DiscreteState, a: Action) -> f64 {
        self.row(s)[a.index()]
    }

    pub fn row(&self, s: &DiscreteState) -> [f64; 3] {
        self.values.get(s).copied().unwrap_or([0.0; 3])
    }

    pub fn set(&mut self, s: DiscreteState, a: Action, v: f64) {
        self.values.entry(s).or_insert([0.0; 3])[a.index()] = v;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &DiscreteState> {
        self.values.keys()
    }

    pub fn max(&self, s: &DiscreteState) -> f64 {
        self.row(s).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action in `allowed`; ties go to the earlier action.
    pub fn greedy(&self, s: &DiscreteState, allowed: ActionSet) -> Option<Action> {
        let row = self.row(s);
        let mut best: Option<Action> = None;
        for a in allowed.iter() {
            if best.is_none_or(|b| row[a.index()] > row[b.index()]) {
                best = Some(a);
            }
        }
        best
    }

    /// Q-learning backup.
    pub fn q_update(&mut self, s: DiscreteState, a: Action, r: f64, s_next: &DiscreteState, alpha: f64, gamma: f64) {
        let target = r + gamma * self.max(s_next);
        self.backup(s, a, target, alpha);
    }

    /// SARSA backup with the action actually taken in `s_next`.
    #[allow(clippy::too_many_arguments)]
    pub fn sarsa_update(
        &mut self,
        s: DiscreteState,
        a: Action,
        r: f64,
        s_next: &DiscreteState,
        a_next: Action,
        alpha: f64,
        gamma: f64,
    ) {
        let target = r + gamma * self.get(s_next, a_next);
        self.backup(s, a, target, alpha);
    }

    fn backup(&mut self, s: DiscreteState, a: Action, target: f64, alpha: f64) {
        let old = self.get(&s, a);
        let new = old + alpha * (target - old);
        debug_assert!(new.is_finite());
        self.set(s, a, new);
    }

    /// FNV-1a digest of the table contents, stable across platforms.
    pub fn digest(&self) -> u64 {
        const PRIME: u64 = 0x100_0000_01b3;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for (s, row) in &self.values {
            for f in crate::Feature::ALL {
                let bin = s.bin(f).map_or(u64::MAX, |b| b as u64);
                feed(&bin.to_le_bytes());
            }
            for v in row {
                feed(&v.to_bits().to_le_bytes());
            }
        }
        h
    }
}

/// ε-greedy choice restricted to `allowed`, which must be non-empty.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: &DiscreteState,
    epsilon: f64,
    allowed: ActionSet,
    rng: &mut R,
) -> Action {
    assert!(!allowed.is_empty(), "no action to choose from");
    if rng.gen::<f64>() < epsilon {
        let options: Vec<Action> = allowed.iter().collect();
        options[rng.gen_range(0..options.len())]
    } else {
        q.greedy(s, allowed).expect("allowed is non-empty")
    }
}

/// Linear annealing from `start` to `end` over the first `fraction` of the
/// run, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            fraction: 0.5,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64, total: u64) -> f64 {
        let span = self.fraction * total as f64;
        if span <= 0.0 || step as f64 >= span {
            return self.end;
        }
        self.start + (self.end - self.start) * (step as f64 / span)
    }
}
