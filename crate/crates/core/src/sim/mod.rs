//! System-level Monte-Carlo engine for the central cell of a hexagonal
//! 37-site network.
//!
//! A run is a pure function of `(SimConfig, seed)`. Every random quantity is
//! drawn from its own ChaCha8 stream keyed by purpose and user index, so a
//! drop with more users extends one with fewer, and different schedulers see
//! the same fades frame by frame.

mod drop;
mod layout;
mod link;
mod measure;

pub use drop::{run_drop, AuditSummary, DropOutcome, Scheduler};
pub use layout::{build_layout, drop_users, NetworkLayout, Point};
pub use link::{
    generate_drop, link_gain, realize_cqi, realize_cqis, DropGeometry, LinkBudget, MeanPowers,
};
pub use measure::{erlang_shape, measure_and_report, MeasurementReport};

use alloc::format;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Whether interfering links fade per frame in the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingMode {
    /// Serving and interfering links are Rayleigh faded every frame.
    #[default]
    Full,
    /// Only the serving link fades; interference is its mean.
    ServingOnly,
}

/// Simulator parameters, already converted to linear units where the
/// quantity enters the SINR as a power or gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    /// Antenna gain, linear.
    pub antenna_gain: f64,
    /// Thermal noise over the band including the noise figure, in watts.
    pub noise_power_w: f64,
    pub inter_site_distance_m: f64,
    pub min_link_distance_m: f64,
    /// Rings of sites around the centre; 3 gives 37 sites.
    pub rings: usize,
    /// Path loss `intercept + slope · log10(d / 1 km)` in dB.
    pub path_loss_intercept_db: f64,
    pub path_loss_slope_db: f64,
    pub shadowing_std_db: f64,
    pub tau: f64,
    pub warmup_frames: usize,
    pub measured_frames: usize,
    pub fading: FadingMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        let bandwidth_hz = 10e6;
        Self {
            bandwidth_hz,
            tx_power_w: dbm_to_watts(46.0),
            antenna_gain: db_to_linear(15.0),
            noise_power_w: dbm_to_watts(-174.0 + 10.0 * bandwidth_hz.log10() + 5.0),
            inter_site_distance_m: 500.0,
            min_link_distance_m: 35.0,
            rings: 3,
            path_loss_intercept_db: 128.1,
            path_loss_slope_db: 37.6,
            shadowing_std_db: 8.0,
            tau: 1000.0,
            warmup_frames: 2000,
            measured_frames: 10_000,
            fading: FadingMode::Full,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_power_w", self.tx_power_w),
            ("antenna_gain", self.antenna_gain),
            ("noise_power_w", self.noise_power_w),
            ("inter_site_distance_m", self.inter_site_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.min_link_distance_m >= 0.0
            && self.min_link_distance_m < 0.5 * self.inter_site_distance_m)
        {
            return Err(Error::invalid(
                "min_link_distance_m",
                format!("must lie in [0, isd / 2), got {}", self.min_link_distance_m),
            ));
        }
        if !(self.shadowing_std_db >= 0.0 && self.shadowing_std_db.is_finite()) {
            return Err(Error::invalid("shadowing_std_db", "must be >= 0"));
        }
        if !self.path_loss_intercept_db.is_finite() || !(self.path_loss_slope_db > 0.0) {
            return Err(Error::invalid(
                "path_loss",
                "intercept must be finite and slope positive",
            ));
        }
        if !(self.tau >= 1.0) {
            return Err(Error::invalid(
                "tau",
                format!("must be >= 1, got {}", self.tau),
            ));
        }
        if self.measured_frames == 0 {
            return Err(Error::invalid("measured_frames", "must be >= 1"));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Purposes of the independent random streams inside a drop.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Geometry,
    InitialRate(usize),
    Fading(usize),
    Measurement(usize),
}

impl Stream {
    fn id(self) -> u64 {
        const STRIDE: u64 = 1 << 32;
        match self {
            Stream::Geometry => 0,
            Stream::InitialRate(u) => STRIDE + u as u64,
            Stream::Fading(u) => 2 * STRIDE + u as u64,
            Stream::Measurement(u) => 3 * STRIDE + u as u64,
        }
    }
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// Seed of drop `index` under a master seed (splitmix64 finaliser).
pub fn drop_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_convert_once() {
        let c = SimConfig::default();
        assert_relative_eq!(c.tx_power_w, 39.810717055349734, max_relative = 1e-12);
        assert_relative_eq!(c.antenna_gain, 31.622776601683793, max_relative = 1e-12);
        // -174 dBm/Hz + 70 dB + 5 dB = -99 dBm
        assert_relative_eq!(
            c.noise_power_w,
            1.2589254117941662e-13,
            max_relative = 1e-12
        );
        c.check().unwrap();
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut c = SimConfig {
            tau: 0.5,
            ..SimConfig::default()
        };
        assert!(c.check().is_err());
        c.tau = 1000.0;
        c.min_link_distance_m = 300.0;
        assert!(c.check().is_err());
    }

    #[test]
    fn drop_seeds_differ() {
        let a: alloc::vec::Vec<u64> = (0..100).map(|i| drop_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(drop_seed(7, 0), drop_seed(8, 0));
    }
}
