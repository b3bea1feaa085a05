use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DiscreteState, Discretizer, ExperienceBuffer, FeatureRanges};
use crate::ltl::{Label, PropositionCatalog};
use crate::{Action, FeatureSet};

pub const MDP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
struct ActionStats {
    count: u64,
    mean_reward: f64,
    successors: BTreeMap<usize, u64>,
}

/// Maximum-likelihood MDP over the bins of `features`.
///
/// States are ordered by their bin vectors, so indices are stable for a given
/// experience buffer. `(s, a)` pairs never observed have no transition
/// distribution and no reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    features: FeatureSet,
    discretizer: Discretizer,
    gamma: f64,
    states: Vec<DiscreteState>,
    index: BTreeMap<DiscreteState, usize>,
    stats: Vec<[ActionStats; 3]>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MdpError {
    #[error("feature set must be non-empty")]
    NoFeatures,
    #[error("discount {0} outside (0, 1]")]
    BadGamma(f64),
    #[error("malformed MDP export: {0}")]
    Malformed(String),
}

impl Mdp {
    /// Estimates `P(s'|s,a) = count(s,a,s') / count(s,a)` and the mean
    /// reward of each observed `(s, a)`, keying states by `features` only.
    pub fn estimate(
        buf: &ExperienceBuffer,
        discretizer: &Discretizer,
        features: FeatureSet,
        gamma: f64,
    ) -> Result<Mdp, MdpError> {
        if features.is_empty() {
            return Err(MdpError::NoFeatures);
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(MdpError::BadGamma(gamma));
        }
        let pairs: Vec<(DiscreteState, DiscreteState)> = buf
            .records()
            .iter()
            .map(|r| {
                (
                    discretizer.discretize(&r.s, features),
                    discretizer.discretize(&r.s_next, features),
                )
            })
            .collect();
        let states: Vec<DiscreteState> = pairs
            .iter()
            .flat_map(|(s, t)| [*s, *t])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<DiscreteState, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut stats: Vec<[ActionStats; 3]> = vec![Default::default(); states.len()];
        let mut reward_sums = vec![[0.0f64; 3]; states.len()];
        for (r, (s, t)) in buf.records().iter().zip(&pairs) {
            let (si, ti) = (index[s], index[t]);
            let st = &mut stats[si][r.a.index()];
            st.count += 1;
            *st.successors.entry(ti).or_insert(0) += 1;
            reward_sums[si][r.a.index()] += r.r;
        }
        for (row, sums) in stats.iter_mut().zip(&reward_sums) {
            for (st, sum) in row.iter_mut().zip(sums) {
                if st.count > 0 {
                    st.mean_reward = sum / st.count as f64;
                }
            }
        }
        Ok(Mdp {
            features,
            discretizer: discretizer.clone(),
            gamma,
            states,
            index,
            stats,
        })
    }

    pub fn features(&self) -> FeatureSet {
        self.features
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn discretizer(&self) -> &Discretizer {
        &self.discretizer
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[DiscreteState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> DiscreteState {
        self.states[i]
    }

    /// Index of `s` after projecting it onto this model's features.
    pub fn index_of(&self, s: &DiscreteState) -> Option<usize> {
        self.index.get(&s.project(self.features)).copied()
    }

    pub fn count(&self, s: usize, a: Action) -> u64 {
        self.stats[s][a.index()].count
    }

    pub fn is_observed(&self, s: usize, a: Action) -> bool {
        self.count(s, a) > 0
    }

    pub fn transition_count(&self, s: usize, a: Action, next: usize) -> u64 {
        self.stats[s][a.index()].successors.get(&next).copied().unwrap_or(0)
    }

    /// Successors with positive probability, in state order.
    pub fn successors(&self, s: usize, a: Action) -> impl Iterator<Item = (usize, f64)> + '_ {
        let st = &self.stats[s][a.index()];
        st.successors
            .iter()
            .map(move |(&t, &c)| (t, c as f64 / st.count as f64))
    }

    /// `P(next|s,a)`, or `None` when `(s, a)` was never observed.
    pub fn prob(&self, s: usize, a: Action, next: usize) -> Option<f64> {
        let st = &self.stats[s][a.index()];
        (st.count > 0).then(|| st.successors.get(&next).copied().unwrap_or(0) as f64 / st.count as f64)
    }

    pub fn reward(&self, s: usize, a: Action) -> Option<f64> {
        let st = &self.stats[s][a.index()];
        (st.count > 0).then_some(st.mean_reward)
    }

    pub fn labels(&self, s: usize, catalog: &PropositionCatalog) -> Label {
        label_state(&self.states[s], catalog)
    }

    pub fn export(&self, catalog: &PropositionCatalog) -> MdpExport {
        let mut transitions = Vec::new();
        let mut rewards = Vec::new();
        for s in 0..self.num_states() {
            for a in Action::ALL {
                let st = &self.stats[s][a.index()];
                if st.count == 0 {
                    continue;
                }
                for (&t, &c) in &st.successors {
                    transitions.push(ExportTransition {
                        s,
                        a,
                        s_next: t,
                        prob: c as f64 / st.count as f64,
                        count: c,
                    });
                }
                rewards.push(ExportReward {
                    s,
                    a,
                    mean: st.mean_reward,
                    count: st.count,
                });
            }
        }
        MdpExport {
            version: MDP_FORMAT_VERSION,
            features: self.features,
            nb: self.discretizer.nb,
            ranges: self.discretizer.ranges,
            gamma: self.gamma,
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(id, s)| ExportState {
                    id,
                    bins: *s,
                    labels: label_state(s, catalog).into_iter().collect(),
                })
                .collect(),
            transitions,
            rewards,
        }
    }

    /// Rebuilds a model from its export. Probabilities are recomputed from
    /// the counts.
    pub fn from_export(e: &MdpExport) -> Result<Mdp, MdpError> {
        let bad = |m: &str| MdpError::Malformed(m.to_string());
        if e.version != MDP_FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        if e.features.is_empty() {
            return Err(MdpError::NoFeatures);
        }
        if e.nb < 2 {
            return Err(bad("nb must be at least 2"));
        }
        if !(e.gamma > 0.0 && e.gamma <= 1.0) {
            return Err(MdpError::BadGamma(e.gamma));
        }
        let states: Vec<DiscreteState> = e.states.iter().map(|s| s.bins).collect();
        if e.states.iter().enumerate().any(|(i, s)| s.id != i) {
            return Err(bad("state ids must be 0..n in order"));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("states must be sorted and distinct"));
        }
        if states.iter().any(|s| s.features() != e.features) {
            return Err(bad("state bins do not match the feature set"));
        }
        let n = states.len();
        let mut stats: Vec<[ActionStats; 3]> = vec![Default::default(); n];
        for t in &e.transitions {
            if t.s >= n || t.s_next >= n || t.count == 0 {
                return Err(bad("transition references an unknown state or has zero count"));
            }
            let st = &mut stats[t.s][t.a.index()];
            st.count += t.count;
            st.successors.insert(t.s_next, t.count);
        }
        for r in &e.rewards {
            if r.s >= n || stats[r.s][r.a.index()].count != r.count {
                return Err(bad("reward entry does not match transition counts"));
            }
            stats[r.s][r.a.index()].mean_reward = r.mean;
        }
        Ok(Mdp {
            features: e.features,
            discretizer: Discretizer::new(e.nb, e.ranges),
            gamma: e.gamma,
            index: states.iter().enumerate().map(|(i, s)| (*s, i)).collect(),
            states,
            stats,
        })
    }
}

/// Estimates the MDP over all four features.
pub fn estimate_mdp(buf: &ExperienceBuffer, discretizer: &Discretizer, gamma: f64) -> Result<Mdp, MdpError> {
    Mdp::estimate(buf, discretizer, FeatureSet::all(), gamma)
}

/// Estimates the companion MDP over `features`.
pub fn project_cmdp(
    buf: &ExperienceBuffer,
    features: FeatureSet,
    discretizer: &Discretizer,
    gamma: f64,
) -> Result<Mdp, MdpError> {
    Mdp::estimate(buf, discretizer, features, gamma)
}

/// Propositions whose threshold the state's bin reaches. Propositions over
/// features the state has no bin for never hold.
pub fn label_state(s: &DiscreteState, catalog: &PropositionCatalog) -> Label {
    catalog
        .iter()
        .filter(|p| s.bin(p.feature).is_some_and(|b| b >= p.threshold_bin))
        .map(|p| p.name.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpExport {
    pub version: u32,
    pub features: FeatureSet,
    pub nb: usize,
    pub ranges: FeatureRanges,
    pub gamma: f64,
    pub states: Vec<ExportState>,
    pub transitions: Vec<ExportTransition>,
    pub rewards: Vec<ExportReward>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportState {
    pub id: usize,
    pub bins: DiscreteState,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportTransition {
    pub s: usize,
    pub a: Action,
    pub s_next: usize,
    pub prob: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportReward {
    pub s: usize,
    pub a: Action,
    pub mean: f64,
    pub count: u64,
}
