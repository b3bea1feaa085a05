//! The interface between training loops and the systems they control.

use crate::mdp::RawState;
use crate::Action;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("cell {0} is not controlled by this environment")]
    UnknownCell(usize),
    #[error("environment failure: {0}")]
    Failed(String),
}

/// A system with one or more independently controlled cells.
///
/// Each controlled cell is driven by its own agent. Episodes start with
/// [`Environment::reset`], whose seed fixes any per-episode randomness.
pub trait Environment {
    /// Ids of the controlled cells, in stepping order.
    fn cells(&self) -> Vec<usize>;

    fn reset(&mut self, episode_seed: u64) -> Result<(), EnvError>;

    fn observe(&self, cell: usize) -> Result<RawState, EnvError>;

    /// Applies `a` to `cell` and returns the cell's new observation and reward.
    fn step(&mut self, cell: usize, a: Action) -> Result<(RawState, f64), EnvError>;
}
