//! Experiment configuration: a flat TOML table whose keys carry their units.
//!
//! Every key is optional and defaults to the reference parameter set. dB and
//! dBm values are converted to linear units in [`ExperimentConfig::sim_config`]
//! and nowhere else.

use std::fmt;
use std::path::Path;

use noma_pfs::estimator::{EstimatorOptions, Solver};
use noma_pfs::sim::{db_to_linear, dbm_to_watts, erlang_shape, FadingMode, Scheduler, SimConfig};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config key `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

/// SIC limit of a sweep cell: a user count or `"inf"` for ideal NOMA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SicLimit(pub Option<usize>);

impl SicLimit {
    pub fn scheduler(self) -> Scheduler {
        match self.0 {
            None => Scheduler::Ideal,
            Some(s) => Scheduler::Practical(s),
        }
    }
}

impl fmt::Display for SicLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("inf"),
            Some(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for SicLimit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            None => s.serialize_str("inf"),
            Some(v) => s.serialize_u64(v as u64),
        }
    }
}

impl<'de> Deserialize<'de> for SicLimit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = SicLimit;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<SicLimit, E> {
                if v < 1 {
                    return Err(E::custom(format!("s_max must be >= 1, got {v}")));
                }
                Ok(SicLimit(Some(v as usize)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<SicLimit, E> {
                self.visit_i64(i64::try_from(v).map_err(E::custom)?)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<SicLimit, E> {
                match v {
                    "inf" | "ideal" => Ok(SicLimit(None)),
                    other => Err(E::custom(format!("expected \"inf\", got {other:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sim,
    Estimate,
    Both,
}

impl Mode {
    pub fn simulates(self) -> bool {
        matches!(self, Mode::Sim | Mode::Both)
    }

    pub fn estimates(self) -> bool {
        matches!(self, Mode::Estimate | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    Full,
    ServingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    Newton,
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Independent drops per sweep cell.
    pub drops: usize,
    pub users: Vec<usize>,
    pub s_max: Vec<SicLimit>,
    pub i_max: Vec<usize>,
    pub epsilon: Vec<f64>,

    pub bandwidth_hz: f64,
    /// Carried for the record; the propagation model is fixed at this carrier.
    pub carrier_ghz: f64,
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_density_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub inter_site_distance_m: f64,
    pub min_link_distance_m: f64,
    pub rings: usize,
    pub path_loss_intercept_db: f64,
    pub path_loss_slope_db_per_decade: f64,
    pub shadowing_std_db: f64,
    pub tau_frames: f64,
    pub frame_ms: f64,
    pub warmup_frames: usize,
    pub measured_frames: usize,
    pub fading: Fading,

    pub estimator_solver: SolverName,
    pub estimator_tol: f64,
    pub estimator_max_iter: usize,
    pub estimator_damping: f64,
    pub estimator_x_nodes: usize,
    pub estimator_phi_nodes: usize,
    pub estimator_quad_rtol: f64,
    pub estimator_max_doublings: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let est = EstimatorOptions::default();
        Self {
            mode: Mode::Both,
            seed: 1,
            drops: 1,
            users: vec![5, 10, 15, 20, 25],
            s_max: vec![
                SicLimit(Some(1)),
                SicLimit(Some(2)),
                SicLimit(Some(3)),
                SicLimit(None),
            ],
            i_max: vec![8],
            epsilon: vec![0.0],
            bandwidth_hz: 10e6,
            carrier_ghz: 2.0,
            tx_power_dbm: 46.0,
            antenna_gain_dbi: 15.0,
            noise_density_dbm_per_hz: -174.0,
            noise_figure_db: 5.0,
            inter_site_distance_m: 500.0,
            min_link_distance_m: 35.0,
            rings: 3,
            path_loss_intercept_db: 128.1,
            path_loss_slope_db_per_decade: 37.6,
            shadowing_std_db: 8.0,
            tau_frames: 1000.0,
            frame_ms: 10.0,
            warmup_frames: 2000,
            measured_frames: 10_000,
            fading: Fading::Full,
            estimator_solver: SolverName::Newton,
            estimator_tol: est.tol,
            estimator_max_iter: est.max_iter,
            estimator_damping: est.damping,
            estimator_x_nodes: est.x_nodes,
            estimator_phi_nodes: est.phi_nodes,
            estimator_quad_rtol: est.quad_rtol,
            estimator_max_doublings: est.max_doublings,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
            key: String::from("<document>"),
            message: e.message().to_string(),
        })?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            key: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.drops == 0 {
            return Err(invalid("drops", "must be >= 1"));
        }
        for (key, empty) in [
            ("users", self.users.is_empty()),
            ("s_max", self.s_max.is_empty()),
            ("i_max", self.i_max.is_empty()),
            ("epsilon", self.epsilon.is_empty()),
        ] {
            if empty {
                return Err(invalid(key, "sweep list must not be empty"));
            }
        }
        if self.users.contains(&0) {
            return Err(invalid("users", "user counts must be >= 1"));
        }
        for &e in &self.epsilon {
            erlang_shape(e).map_err(|err| invalid("epsilon", err.to_string()))?;
        }
        for (key, v) in [
            ("carrier_ghz", self.carrier_ghz),
            ("frame_ms", self.frame_ms),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        self.sim_config()
            .check()
            .map_err(|e| invalid("simulation", e.to_string()))?;
        let est = self.estimator_options();
        let ok = est.tol > 0.0 && est.damping > 0.0 && est.damping <= 1.0 && est.quad_rtol > 0.0;
        if !ok {
            return Err(invalid(
                "estimator_*",
                "tolerances must be positive and damping in (0, 1]",
            ));
        }
        if est.x_nodes == 0 || est.phi_nodes == 0 {
            return Err(invalid("estimator_*_nodes", "must be >= 1"));
        }
        Ok(())
    }

    /// The simulator view, in linear units.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            bandwidth_hz: self.bandwidth_hz,
            tx_power_w: dbm_to_watts(self.tx_power_dbm),
            antenna_gain: db_to_linear(self.antenna_gain_dbi),
            noise_power_w: dbm_to_watts(
                self.noise_density_dbm_per_hz
                    + 10.0 * self.bandwidth_hz.log10()
                    + self.noise_figure_db,
            ),
            inter_site_distance_m: self.inter_site_distance_m,
            min_link_distance_m: self.min_link_distance_m,
            rings: self.rings,
            path_loss_intercept_db: self.path_loss_intercept_db,
            path_loss_slope_db: self.path_loss_slope_db_per_decade,
            shadowing_std_db: self.shadowing_std_db,
            tau: self.tau_frames,
            warmup_frames: self.warmup_frames,
            measured_frames: self.measured_frames,
            fading: match self.fading {
                Fading::Full => FadingMode::Full,
                Fading::ServingOnly => FadingMode::ServingOnly,
            },
        }
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            tol: self.estimator_tol,
            max_iter: self.estimator_max_iter,
            solver: match self.estimator_solver {
                SolverName::Newton => Solver::Newton,
                SolverName::FixedPoint => Solver::FixedPoint,
            },
            damping: self.estimator_damping,
            x_nodes: self.estimator_x_nodes,
            phi_nodes: self.estimator_phi_nodes,
            quad_rtol: self.estimator_quad_rtol,
            max_doublings: self.estimator_max_doublings,
        }
    }
}
