use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConfigError, NetworkConfig};
use crate::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub tilt_deg: i32,
}

/// Ground truth of the simulated network: cells, UEs and serving cells.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub cells: Vec<Cell>,
    pub ues: Vec<(f64, f64)>,
    pub serving: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiVector {
    pub coverage: f64,
    pub capacity: f64,
    pub quality: f64,
    /// The cell serves no UE; all KPIs are 0.
    pub no_served_ues: bool,
}

impl KpiVector {
    pub fn reward(&self, cfg: &NetworkConfig) -> f64 {
        let w = cfg.reward_weights;
        w.coverage * self.coverage + w.capacity * self.capacity + w.quality * self.quality
    }
}

/// Site positions on a hexagonal grid, filled ring by ring from the origin.
pub fn hex_positions(n: usize, isd: f64) -> Vec<(f64, f64)> {
    const DIRS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let mut axial = vec![(0i32, 0i32)];
    let mut ring = 1;
    while axial.len() < n {
        // start at ring·(1,-1) rotated so the walk covers the ring once
        let (mut q, mut r) = (ring * DIRS[4].0, ring * DIRS[4].1);
        for d in DIRS {
            for _ in 0..ring {
                axial.push((q, r));
                q += d.0;
                r += d.1;
            }
        }
        ring += 1;
    }
    axial.truncate(n);
    let s3 = 3f64.sqrt();
    axial
        .into_iter()
        .map(|(q, r)| (isd * (q as f64 + r as f64 / 2.0), isd * (r as f64 * s3 / 2.0)))
        .collect()
}

/// Radius of the disc UEs are dropped in: the farthest site plus a hexagon's
/// circumradius.
pub fn drop_radius(cfg: &NetworkConfig) -> f64 {
    let far = hex_positions(cfg.n_cells, cfg.inter_site_distance_m)
        .iter()
        .map(|(x, y)| x.hypot(*y))
        .fold(0.0, f64::max);
    far + cfg.inter_site_distance_m / 3f64.sqrt()
}

/// UEs uniform in the drop disc, from `seed`.
pub fn drop_ues(cfg: &NetworkConfig, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = drop_radius(cfg);
    (0..cfg.n_cells * cfg.ues_per_cell)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            (r * phi.cos(), r * phi.sin())
        })
        .collect()
}

pub fn init_network(cfg: &NetworkConfig) -> Result<NetworkState, ConfigError> {
    cfg.validate()?;
    let tilt = cfg.mid_tilt();
    let cells = hex_positions(cfg.n_cells, cfg.inter_site_distance_m)
        .into_iter()
        .enumerate()
        .map(|(id, (x_m, y_m))| Cell {
            id,
            x_m,
            y_m,
            tilt_deg: tilt,
        })
        .collect();
    let mut ns = NetworkState {
        cells,
        ues: drop_ues(cfg, cfg.seed),
        serving: Vec::new(),
    };
    ns.serving = serving_cells(&rx_matrix(&ns, cfg));
    Ok(ns)
}

pub fn path_loss_db(d_km: f64) -> f64 {
    128.1 + 37.6 * d_km.log10()
}

/// Vertical antenna gain for a UE seen at `elevation_deg` below the horizon.
pub fn vertical_gain_db(elevation_deg: f64, tilt_deg: f64, cfg: &NetworkConfig) -> f64 {
    let x = (elevation_deg - tilt_deg) / cfg.vertical_beamwidth_deg;
    -(12.0 * x * x).min(cfg.max_attenuation_db)
}

/// Received power (dBm, total band) of `cell` at a UE position.
pub fn received_power_dbm(cell: &Cell, ue: (f64, f64), cfg: &NetworkConfig) -> f64 {
    let horizontal = (ue.0 - cell.x_m).hypot(ue.1 - cell.y_m);
    let h = cfg.antenna_height_m;
    let elevation = h.atan2(horizontal).to_degrees();
    let d_km = horizontal.hypot(h) / 1000.0;
    cfg.tx_power_dbm + vertical_gain_db(elevation, cell.tilt_deg as f64, cfg) - path_loss_db(d_km)
}

/// `rx[ue][cell]` in dBm.
pub fn rx_matrix(ns: &NetworkState, cfg: &NetworkConfig) -> Vec<Vec<f64>> {
    ns.ues
        .iter()
        .map(|&ue| ns.cells.iter().map(|c| received_power_dbm(c, ue, cfg)).collect())
        .collect()
}

/// Strongest cell per UE; ties go to the lower cell id.
pub fn serving_cells(rx: &[Vec<f64>]) -> Vec<usize> {
    rx.iter()
        .map(|row| {
            let mut best = 0;
            for (c, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Linear SINR of a UE served by `cell`, every other cell interfering.
pub fn sinr_linear(rx_row: &[f64], cell: usize, cfg: &NetworkConfig) -> f64 {
    let signal = dbm_to_mw(rx_row[cell]);
    let interference: f64 = rx_row
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != cell)
        .map(|(_, &p)| dbm_to_mw(p))
        .sum();
    signal / (interference + dbm_to_mw(cfg.noise_dbm))
}

/// KPIs of `cell` for a given received-power matrix and serving assignment.
pub fn kpis_from(rx: &[Vec<f64>], serving: &[usize], cell: usize, cfg: &NetworkConfig) -> KpiVector {
    let served: Vec<usize> = (0..rx.len()).filter(|&u| serving[u] == cell).collect();
    if served.is_empty() {
        return KpiVector {
            coverage: 0.0,
            capacity: 0.0,
            quality: 0.0,
            no_served_ues: true,
        };
    }
    let n = served.len() as f64;
    let qual_lin = 10f64.powf(cfg.sinr_qual_threshold_db / 10.0);
    let cap_max = (1.0 + 10f64.powf(cfg.sinr_max_db / 10.0)).log2();
    let (mut covered, mut good, mut rate) = (0usize, 0usize, 0.0);
    for &u in &served {
        if rx[u][cell] + cfg.rsrp_offset_db >= cfg.rsrp_cov_threshold_dbm {
            covered += 1;
        }
        let sinr = sinr_linear(&rx[u], cell, cfg);
        if sinr >= qual_lin {
            good += 1;
        }
        rate += (1.0 + sinr).log2();
    }
    KpiVector {
        coverage: covered as f64 / n,
        capacity: (rate / n / cap_max).clamp(0.0, 1.0),
        quality: good as f64 / n,
        no_served_ues: false,
    }
}

pub fn compute_kpis(ns: &NetworkState, cell: usize, cfg: &NetworkConfig) -> KpiVector {
    kpis_from(&rx_matrix(ns, cfg), &ns.serving, cell, cfg)
}

/// Applies a tilt action to `cell` (clamped to the tilt range), reassigns
/// serving cells and returns the cell's KPIs and reward.
pub fn step(ns: &NetworkState, cell: usize, action: Action, cfg: &NetworkConfig) -> (NetworkState, KpiVector, f64) {
    let mut next = ns.clone();
    let (lo, hi) = cfg.tilt_range_deg;
    let c = &mut next.cells[cell];
    c.tilt_deg = (c.tilt_deg + action.tilt_delta()).clamp(lo, hi);
    let rx = rx_matrix(&next, cfg);
    next.serving = serving_cells(&rx);
    let kpis = kpis_from(&rx, &next.serving, cell, cfg);
    let reward = kpis.reward(cfg);
    (next, kpis, reward)
}
