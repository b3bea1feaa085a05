//! Shielded reinforcement learning for remote electrical tilt.
//!
//! Operator intents are LTL formulas over KPI threshold propositions. They
//! are translated to Büchi automata, composed with an MDP estimated from
//! agent experience, model-checked, and compiled into a runtime shield that
//! filters the tilt actions a tabular agent proposes.

pub mod agent;
pub mod buchi;
pub mod env;
pub mod feature;
pub mod graph;
pub mod ltl;
pub mod mdp;
pub mod pipeline;
pub mod shield;
pub mod sim;

pub use feature::{Action, ActionSet, Feature, FeatureSet};

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
