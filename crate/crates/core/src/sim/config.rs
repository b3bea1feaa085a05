use serde::{Deserialize, Serialize};

pub const NETWORK_CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub coverage: f64,
    pub capacity: f64,
    pub quality: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            coverage: 0.4,
            capacity: 0.3,
            quality: 0.3,
        }
    }
}

/// Simulator parameters. Every propagation constant is a textbook macro-cell
/// stand-in; none of it models a particular deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub version: u32,
    pub n_cells: usize,
    pub inter_site_distance_m: f64,
    pub ues_per_cell: usize,
    pub antenna_height_m: f64,
    pub tx_power_dbm: f64,
    /// Converts total received power to the RSRP compared against the
    /// coverage threshold: `-10·log10(1200)` for 100 resource blocks plus a
    /// 19.2 dB indoor penetration margin. Used for coverage only, since the
    /// margin cancels in SINR.
    pub rsrp_offset_db: f64,
    pub noise_dbm: f64,
    pub vertical_beamwidth_deg: f64,
    pub max_attenuation_db: f64,
    pub tilt_range_deg: (i32, i32),
    pub rsrp_cov_threshold_dbm: f64,
    pub sinr_qual_threshold_db: f64,
    /// SINR at which capacity saturates at 1.
    pub sinr_max_db: f64,
    pub reward_weights: RewardWeights,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            version: NETWORK_CONFIG_VERSION,
            n_cells: 7,
            inter_site_distance_m: 500.0,
            ues_per_cell: 30,
            antenna_height_m: 32.0,
            tx_power_dbm: 46.0,
            rsrp_offset_db: -50.0,
            noise_dbm: -104.0,
            vertical_beamwidth_deg: 10.0,
            max_attenuation_db: 20.0,
            tilt_range_deg: (0, 15),
            rsrp_cov_threshold_dbm: -110.0,
            sinr_qual_threshold_db: 0.0,
            sinr_max_db: 30.0,
            reward_weights: RewardWeights::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("unsupported config version {0}")]
    Version(u32),
    #[error("malformed config: {0}")]
    Malformed(String),
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &'static str, message: &str| {
            Err(ConfigError::Invalid {
                field,
                message: message.to_string(),
            })
        };
        if self.version != NETWORK_CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if self.n_cells == 0 {
            return bad("n_cells", "must be at least 1");
        }
        if self.ues_per_cell == 0 {
            return bad("ues_per_cell", "must be at least 1");
        }
        for (field, v) in [
            ("inter_site_distance_m", self.inter_site_distance_m),
            ("antenna_height_m", self.antenna_height_m),
            ("vertical_beamwidth_deg", self.vertical_beamwidth_deg),
            ("sinr_max_db", self.sinr_max_db),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, "must be positive");
            }
        }
        if !(self.max_attenuation_db.is_finite() && self.max_attenuation_db >= 0.0) {
            return bad("max_attenuation_db", "must be non-negative");
        }
        for (field, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("rsrp_offset_db", self.rsrp_offset_db),
            ("noise_dbm", self.noise_dbm),
            ("rsrp_cov_threshold_dbm", self.rsrp_cov_threshold_dbm),
            ("sinr_qual_threshold_db", self.sinr_qual_threshold_db),
        ] {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        let (lo, hi) = self.tilt_range_deg;
        if lo >= hi {
            return bad("tilt_range_deg", "lower bound must be below upper bound");
        }
        let w = self.reward_weights;
        if [w.coverage, w.capacity, w.quality]
            .iter()
            .any(|x| x.is_nan() || *x < 0.0)
        {
            return bad("reward_weights", "weights must be non-negative");
        }
        if (w.coverage + w.capacity + w.quality - 1.0).abs() > 1e-9 {
            return bad("reward_weights", "weights must sum to 1");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: NetworkConfig = serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn mid_tilt(&self) -> i32 {
        let (lo, hi) = self.tilt_range_deg;
        lo + (hi - lo) / 2
    }
}
