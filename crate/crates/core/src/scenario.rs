//! JSON scenario files.
//!
//! A scenario bundles the geometry, the channel parameters in engineering
//! units and the optimizer defaults. Power-like quantities are given in dB
//! and converted to linear values once, when the scenario is built.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::geometry::{Blockage, CandidateGrid, Geometry, GridSpec, Region};
use crate::units::{db_to_linear, dbm_to_watts};

pub const SCENARIO_VERSION: u32 = 1;

const TABLE1_JSON: &str = include_str!("../scenarios/table1.json");

/// Either `M` uniformly spaced taps per waveguide or explicit positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_coords: Option<Vec<Vec<f64>>>,
}

fn default_n_eff() -> f64 {
    1.4
}
fn default_n_clusters() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub fc_hz: f64,
    #[serde(default = "default_n_eff")]
    pub n_eff: f64,
    pub p_tx_dbm: f64,
    pub noise_dbm: f64,
    pub mu_sq_db: f64,
    #[serde(default = "default_n_clusters")]
    pub n_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizationConfig {
    pub gamma_th_db: f64,
    pub eps_t: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub restarts: usize,
    pub random_seeds: usize,
    pub budget: u64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            gamma_th_db: 18.0,
            eps_t: 1e-3,
            max_sweeps: 50,
            seed: 0,
            restarts: 1,
            random_seeds: 20,
            budget: 1_000_000,
        }
    }
}

/// The on-disk scenario schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub region: Region,
    pub waveguides: usize,
    pub candidates: CandidateConfig,
    #[serde(default)]
    pub blockages: Vec<Blockage>,
    pub grid: GridSpec,
    pub channel: ChannelConfig,
    #[serde(default)]
    pub optimization: OptimizationConfig,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    geometry: Geometry,
    channel: ChannelParams,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        if config.version != SCENARIO_VERSION {
            return Err(Error::Validation(format!(
                "unsupported scenario version {}, expected {SCENARIO_VERSION}",
                config.version
            )));
        }
        config.region.validate()?;
        let candidates = match (&config.candidates.count, &config.candidates.x_coords) {
            (Some(m), None) => {
                if *m == 0 {
                    return Err(Error::Validation("candidates.count must be >= 1".into()));
                }
                CandidateGrid::uniform(config.waveguides, *m, config.region.dx)
            }
            (None, Some(rows)) => CandidateGrid::explicit(rows.clone()),
            _ => {
                return Err(Error::Validation(
                    "candidates needs exactly one of `count` or `x_coords`".into(),
                ))
            }
        };
        let geometry = Geometry::new(
            config.region,
            config.waveguides,
            candidates,
            config.blockages.clone(),
            config.grid,
        )?;
        let ch = &config.channel;
        let channel = ChannelParams::with_equal_clusters(
            ch.fc_hz,
            ch.n_eff,
            db_to_linear(ch.mu_sq_db),
            ch.n_clusters,
            dbm_to_watts(ch.p_tx_dbm),
            dbm_to_watts(ch.noise_dbm),
        )?;
        let opt = &config.optimization;
        if !(opt.eps_t > 0.0) {
            return Err(Error::Validation(format!("optimization.eps_t must be > 0, got {}", opt.eps_t)));
        }
        if !opt.gamma_th_db.is_finite() {
            return Err(Error::Validation("optimization.gamma_th_db must be finite".into()));
        }
        for (name, value) in [
            ("max_sweeps", opt.max_sweeps),
            ("restarts", opt.restarts),
            ("random_seeds", opt.random_seeds),
        ] {
            if value == 0 {
                return Err(Error::Validation(format!("optimization.{name} must be >= 1")));
            }
        }
        Ok(Scenario {
            config,
            geometry,
            channel,
        })
    }

    /// Parses scenario JSON; `origin` is only used in error messages.
    pub fn from_json_str(text: &str, origin: impl AsRef<Path>) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.as_ref().to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_config(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, path)
    }

    /// The bundled default scenario.
    pub fn table1() -> Self {
        Self::from_json_str(TABLE1_JSON, "scenarios/table1.json").expect("bundled scenario is valid")
    }

    /// Pretty JSON with every default written out.
    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.config).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    /// Hex SHA-256 of the canonical (key-sorted, compact) JSON form.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(&self.config).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn optimization(&self) -> &OptimizationConfig {
        &self.config.optimization
    }

    pub fn rho(&self) -> f64 {
        self.channel.rho()
    }

    pub fn gamma_th(&self) -> f64 {
        db_to_linear(self.config.optimization.gamma_th_db)
    }

    fn modified(&self, edit: impl FnOnce(&mut ScenarioConfig)) -> Result<Self> {
        let mut config = self.config.clone();
        edit(&mut config);
        Self::from_config(config)
    }

    /// Rescales both grid resolutions by `factor`.
    pub fn with_grid_scale(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Usage(format!("grid scale must be > 0, got {factor}")));
        }
        self.modified(|c| c.grid = c.grid.scaled(factor))
    }

    pub fn with_grid(&self, grid: GridSpec) -> Result<Self> {
        self.modified(|c| c.grid = grid)
    }

    pub fn with_power_dbm(&self, p_tx_dbm: f64) -> Result<Self> {
        self.modified(|c| c.channel.p_tx_dbm = p_tx_dbm)
    }

    pub fn with_mu_sq_db(&self, mu_sq_db: f64) -> Result<Self> {
        self.modified(|c| c.channel.mu_sq_db = mu_sq_db)
    }

    pub fn with_gamma_th_db(&self, gamma_th_db: f64) -> Result<Self> {
        self.modified(|c| c.optimization.gamma_th_db = gamma_th_db)
    }

    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        self.modified(|c| c.optimization.seed = seed)
    }

    pub fn with_blockages(&self, blockages: Vec<Blockage>) -> Result<Self> {
        self.modified(|c| c.blockages = blockages)
    }

    /// Changes `N` and `M`; only for uniformly spaced candidates.
    pub fn with_size(&self, n_waveguides: usize, n_candidates: usize) -> Result<Self> {
        if self.config.candidates.count.is_none() {
            return Err(Error::Usage(
                "cannot resize a scenario with explicit candidate coordinates".into(),
            ));
        }
        self.modified(|c| {
            c.waveguides = n_waveguides;
            c.candidates.count = Some(n_candidates);
        })
    }
}
