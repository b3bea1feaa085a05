use crate::env::{EnvError, Environment};
use crate::mdp::{Discretizer, FeatureRanges, RawState};
use crate::Action;

pub const CHAIN_LEN: usize = 5;

/// Deterministic five-position corridor with a known optimal policy.
///
/// The position is reported as the tilt. Downtilt moves right, uptilt moves
/// left, both clamped at the ends. Holding at the right end pays 1, holding
/// at the left end pays 0.1, everything else pays 0. Episodes start at the
/// left end.
#[derive(Debug, Clone, Default)]
pub struct ChainEnvironment {
    pos: usize,
}

impl ChainEnvironment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next(pos: usize, a: Action) -> usize {
        match a {
            Action::Downtilt => (pos + 1).min(CHAIN_LEN - 1),
            Action::Hold => pos,
            Action::Uptilt => pos.saturating_sub(1),
        }
    }

    pub fn reward(pos: usize, a: Action) -> f64 {
        match (pos, a) {
            (p, Action::Hold) if p == CHAIN_LEN - 1 => 1.0,
            (0, Action::Hold) => 0.1,
            _ => 0.0,
        }
    }

    /// One bin per position.
    pub fn discretizer() -> Discretizer {
        Discretizer::new(
            CHAIN_LEN,
            FeatureRanges {
                tilt: (0.0, CHAIN_LEN as f64),
                ..FeatureRanges::default()
            },
        )
    }

    /// `[s][a] -> [(s', p, r)]`.
    pub fn transitions() -> Vec<Vec<Vec<(usize, f64, f64)>>> {
        (0..CHAIN_LEN)
            .map(|s| {
                Action::ALL
                    .iter()
                    .map(|&a| vec![(Self::next(s, a), 1.0, Self::reward(s, a))])
                    .collect()
            })
            .collect()
    }

    fn raw(&self) -> RawState {
        RawState {
            tilt_deg: self.pos as f64,
            coverage: 0.0,
            capacity: 0.0,
            quality: 0.0,
        }
    }
}

impl Environment for ChainEnvironment {
    fn cells(&self) -> Vec<usize> {
        vec![0]
    }

    fn reset(&mut self, _episode_seed: u64) -> Result<(), EnvError> {
        self.pos = 0;
        Ok(())
    }

    fn observe(&self, cell: usize) -> Result<RawState, EnvError> {
        if cell != 0 {
            return Err(EnvError::UnknownCell(cell));
        }
        Ok(self.raw())
    }

    fn step(&mut self, cell: usize, a: Action) -> Result<(RawState, f64), EnvError> {
        if cell != 0 {
            return Err(EnvError::UnknownCell(cell));
        }
        let r = Self::reward(self.pos, a);
        self.pos = Self::next(self.pos, a);
        Ok((self.raw(), r))
    }
}
