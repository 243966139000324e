use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

use super::layout::{drop_user, NetworkLayout, Point};
use super::{stream_rng, FadingMode, SimConfig, Stream};
use crate::allocation::CqiSample;
use crate::error::{Error, Result};
use crate::sinr::SinrDistribution;

/// Comprehensive channel gain `L_{u,b}` (antenna gain, path loss and
/// shadowing) of one user towards every site, linear.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub serving_gain: f64,
    pub interferer_gains: Vec<f64>,
}

impl LinkBudget {
    pub fn mean_powers(&self, tx_power_w: f64) -> MeanPowers {
        MeanPowers {
            serving: self.serving_gain * tx_power_w,
            interferers: self
                .interferer_gains
                .iter()
                .map(|g| g * tx_power_w)
                .collect(),
        }
    }
}

/// Mean received powers `p̂` and `p_i` of one user, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPowers {
    pub serving: f64,
    pub interferers: Vec<f64>,
}

impl MeanPowers {
    pub fn total_interference(&self) -> f64 {
        self.interferers.iter().sum()
    }

    /// CQI distribution with every interferer known and Rayleigh faded.
    pub fn exact_distribution(&self, noise: f64) -> Result<SinrDistribution> {
        SinrDistribution::new(self.serving, self.interferers.clone(), noise)
    }

    /// CQI distribution when interference does not fade: its mean joins the noise.
    pub fn serving_fade_distribution(&self, noise: f64) -> Result<SinrDistribution> {
        SinrDistribution::new(self.serving, Vec::new(), noise + self.total_interference())
    }
}

/// `L = G · 10^{-(PL(d) - X)/10}` with `PL(d) = a + b log10(d / 1 km)` and
/// shadowing `X` in dB.
pub fn link_gain(distance_m: f64, shadow_db: f64, config: &SimConfig) -> f64 {
    let pl =
        config.path_loss_intercept_db + config.path_loss_slope_db * (distance_m / 1000.0).log10();
    config.antenna_gain * 10f64.powf((shadow_db - pl) / 10.0)
}

/// Frozen geometry of one drop: positions, gains and mean powers of each user.
#[derive(Debug, Clone, PartialEq)]
pub struct DropGeometry {
    pub seed: u64,
    pub positions: Vec<Point>,
    pub links: Vec<LinkBudget>,
    pub means: Vec<MeanPowers>,
    pub noise_power_w: f64,
}

impl DropGeometry {
    pub fn users(&self) -> usize {
        self.positions.len()
    }

    /// The first `users` users of this drop.
    pub fn truncated(&self, users: usize) -> Self {
        let n = users.min(self.users());
        Self {
            seed: self.seed,
            positions: self.positions[..n].to_vec(),
            links: self.links[..n].to_vec(),
            means: self.means[..n].to_vec(),
            noise_power_w: self.noise_power_w,
        }
    }
}

/// Drops `users` users and draws their shadowing.
///
/// Users are generated one after another from a single stream, so the first
/// `k` users of a drop do not depend on the total count.
pub fn generate_drop(
    config: &SimConfig,
    layout: &NetworkLayout,
    users: usize,
    seed: u64,
) -> Result<DropGeometry> {
    config.check()?;
    if users == 0 {
        return Err(Error::invalid("users", "must be >= 1"));
    }
    let mut rng = stream_rng(seed, Stream::Geometry);
    let shadow = Normal::new(0.0, config.shadowing_std_db)
        .map_err(|e| Error::invalid("shadowing_std_db", alloc::format!("{e}")))?;
    let mut positions = Vec::with_capacity(users);
    let mut links = Vec::with_capacity(users);
    for _ in 0..users {
        let p = drop_user(layout, &mut rng);
        let mut gains = layout
            .sites()
            .iter()
            .map(|s| link_gain(p.distance(*s), shadow.sample(&mut rng), config));
        let serving_gain = gains.next().unwrap_or(0.0);
        positions.push(p);
        links.push(LinkBudget {
            serving_gain,
            interferer_gains: gains.collect(),
        });
    }
    let means = links
        .iter()
        .map(|l| l.mean_powers(config.tx_power_w))
        .collect();
    Ok(DropGeometry {
        seed,
        positions,
        links,
        means,
        noise_power_w: config.noise_power_w,
    })
}

/// One frame's full-power SINR of a user with unit-mean exponential power fades.
pub fn realize_cqi<R: Rng + ?Sized>(
    means: &MeanPowers,
    noise: f64,
    mode: FadingMode,
    rng: &mut R,
) -> f64 {
    let h: f64 = Exp1.sample(rng);
    let signal = means.serving * h;
    let interference = match mode {
        FadingMode::Full => means
            .interferers
            .iter()
            .map(|&p| {
                let h: f64 = Exp1.sample(rng);
                p * h
            })
            .sum(),
        FadingMode::ServingOnly => means.total_interference(),
    };
    signal / (interference + noise)
}

/// CQIs of all users; user `u` draws from `rngs[u]`.
pub fn realize_cqis<R: Rng>(
    means: &[MeanPowers],
    noise: f64,
    mode: FadingMode,
    rngs: &mut [R],
    out: &mut Vec<CqiSample>,
) {
    out.clear();
    out.extend(
        means
            .iter()
            .zip(rngs.iter_mut())
            .enumerate()
            .map(|(u, (m, rng))| CqiSample {
                user_id: u,
                cqi: realize_cqi(m, noise, mode, rng),
            }),
    );
}
