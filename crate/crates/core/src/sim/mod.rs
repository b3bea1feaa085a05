//! Desk-scale RET simulator.
//!
//! Cells sit on a hexagonal grid and serve UEs dropped uniformly at random.
//! Each cell's vertical tilt shapes its antenna gain towards every UE, which
//! moves the serving-cell boundaries and the interference everyone sees.
//! Propagation and antenna constants are generic macro-cell stand-ins and
//! do not model any real deployment.

mod config;
mod network;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use config::{ConfigError, NetworkConfig, RewardWeights, NETWORK_CONFIG_VERSION};
pub use network::{
    compute_kpis, drop_radius, drop_ues, hex_positions, init_network, kpis_from, path_loss_db, received_power_dbm,
    rx_matrix, serving_cells, sinr_linear, step, vertical_gain_db, Cell, KpiVector, NetworkState,
};

use crate::env::{EnvError, Environment};
use crate::mdp::RawState;
use crate::Action;

/// One line of a KPI trajectory export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub step: u64,
    pub cell: usize,
    pub tilt: i32,
    pub coverage: f64,
    pub capacity: f64,
    pub quality: f64,
    pub reward: f64,
}

pub fn write_trajectory<W: Write>(records: &[KpiRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// The simulator behind the [`Environment`] interface.
///
/// Every reset re-drops the UEs from the episode seed and returns all tilts
/// to mid-range. Cells outside `controlled` keep their tilt for the whole
/// episode.
#[derive(Debug, Clone)]
pub struct RetEnvironment {
    cfg: NetworkConfig,
    controlled: Vec<usize>,
    state: NetworkState,
    kpis: Vec<KpiVector>,
    steps: u64,
    record: bool,
    trajectory: Vec<KpiRecord>,
}

impl RetEnvironment {
    /// Controls `cells`, which must be distinct valid cell ids.
    pub fn new(cfg: NetworkConfig, cells: Vec<usize>) -> Result<Self, ConfigError> {
        let state = init_network(&cfg)?;
        for (i, &c) in cells.iter().enumerate() {
            if c >= cfg.n_cells || cells[..i].contains(&c) {
                return Err(ConfigError::Invalid {
                    field: "cells",
                    message: format!("cell {c} is out of range or repeated"),
                });
            }
        }
        if cells.is_empty() {
            return Err(ConfigError::Invalid {
                field: "cells",
                message: "no controlled cell".into(),
            });
        }
        let mut env = RetEnvironment {
            cfg,
            controlled: cells,
            state,
            kpis: Vec::new(),
            steps: 0,
            record: false,
            trajectory: Vec::new(),
        };
        env.refresh();
        Ok(env)
    }

    pub fn single(cfg: NetworkConfig, cell: usize) -> Result<Self, ConfigError> {
        Self::new(cfg, vec![cell])
    }

    /// Every cell is controlled.
    pub fn all_cells(cfg: NetworkConfig) -> Result<Self, ConfigError> {
        let n = cfg.n_cells;
        Self::new(cfg, (0..n).collect())
    }

    /// Keep a KPI record for every step from now on.
    pub fn with_trajectory(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn network(&self) -> &NetworkState {
        &self.state
    }

    pub fn kpis(&self, cell: usize) -> Option<KpiVector> {
        self.kpis.get(cell).copied()
    }

    pub fn trajectory(&self) -> &[KpiRecord] {
        &self.trajectory
    }

    fn refresh(&mut self) {
        let rx = rx_matrix(&self.state, &self.cfg);
        self.state.serving = serving_cells(&rx);
        self.kpis = (0..self.cfg.n_cells)
            .map(|c| kpis_from(&rx, &self.state.serving, c, &self.cfg))
            .collect();
    }

    fn raw(&self, cell: usize) -> RawState {
        let k = self.kpis[cell];
        RawState {
            tilt_deg: self.state.cells[cell].tilt_deg as f64,
            coverage: k.coverage,
            capacity: k.capacity,
            quality: k.quality,
        }
    }

    fn check(&self, cell: usize) -> Result<(), EnvError> {
        if self.controlled.contains(&cell) {
            Ok(())
        } else {
            Err(EnvError::UnknownCell(cell))
        }
    }
}

impl Environment for RetEnvironment {
    fn cells(&self) -> Vec<usize> {
        self.controlled.clone()
    }

    fn reset(&mut self, episode_seed: u64) -> Result<(), EnvError> {
        self.state.ues = drop_ues(&self.cfg, episode_seed);
        let tilt = self.cfg.mid_tilt();
        for c in &mut self.state.cells {
            c.tilt_deg = tilt;
        }
        self.refresh();
        Ok(())
    }

    fn observe(&self, cell: usize) -> Result<RawState, EnvError> {
        self.check(cell)?;
        Ok(self.raw(cell))
    }

    fn step(&mut self, cell: usize, a: Action) -> Result<(RawState, f64), EnvError> {
        self.check(cell)?;
        let (lo, hi) = self.cfg.tilt_range_deg;
        let c = &mut self.state.cells[cell];
        c.tilt_deg = (c.tilt_deg + a.tilt_delta()).clamp(lo, hi);
        self.refresh();
        let reward = self.kpis[cell].reward(&self.cfg);
        let raw = self.raw(cell);
        if self.record {
            self.trajectory.push(KpiRecord {
                step: self.steps,
                cell,
                tilt: self.state.cells[cell].tilt_deg,
                coverage: raw.coverage,
                capacity: raw.capacity,
                quality: raw.quality,
                reward,
            });
        }
        self.steps += 1;
        Ok((raw, reward))
    }
}
