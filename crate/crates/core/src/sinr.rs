//! Stochastic CQI model for a user in a multi-cell network.
//!
//! With a Rayleigh-faded serving link of mean power `p̂`, Rayleigh-faded
//! interferers of mean powers `p_i` and a constant noise-like term `σ`, the
//! full-power SINR `Φ` has
//!
//! ```text
//! F(φ) = 1 − exp(−σ φ / p̂) · Π_i (1 + p_i φ / p̂)^−1
//! f(φ) = (σ / p̂ + Σ_i p_i / (p_i φ + p̂)) · (1 − F(φ))
//! ```
//!
//! When only some interferers are reported, the rest are folded into the
//! noise term (see [`residual_noise`]) and the same formulas give the
//! estimated model.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SinrDistribution {
    serving_power: f64,
    interferer_powers: Vec<f64>,
    residual_noise: f64,
    // normalised by the serving power
    noise_ratio: f64,
    interferer_ratios: Vec<f64>,
}

impl SinrDistribution {
    pub fn new(
        serving_power: f64,
        interferer_powers: Vec<f64>,
        residual_noise: f64,
    ) -> Result<Self> {
        if !(serving_power > 0.0 && serving_power.is_finite()) {
            return Err(Error::invalid(
                "serving_power",
                format!("must be positive, got {serving_power}"),
            ));
        }
        if !(residual_noise > 0.0 && residual_noise.is_finite()) {
            return Err(Error::invalid(
                "residual_noise",
                format!("must be positive, got {residual_noise}"),
            ));
        }
        if let Some(p) = interferer_powers
            .iter()
            .find(|p| !(**p >= 0.0 && p.is_finite()))
        {
            return Err(Error::invalid(
                "interferer_powers",
                format!("must be non-negative, got {p}"),
            ));
        }
        let interferer_ratios = interferer_powers
            .iter()
            .map(|p| p / serving_power)
            .collect();
        Ok(Self {
            noise_ratio: residual_noise / serving_power,
            serving_power,
            interferer_powers,
            residual_noise,
            interferer_ratios,
        })
    }

    /// The model seen with only the interferers in `reported` kept explicit;
    /// the others join the residual noise.
    pub fn with_reported(&self, reported: &[usize]) -> Result<Self> {
        let noise = residual_noise(&self.interferer_powers, reported, self.residual_noise)?;
        let kept = reported
            .iter()
            .map(|&i| self.interferer_powers[i])
            .collect();
        Self::new(self.serving_power, kept, noise)
    }

    pub fn serving_power(&self) -> f64 {
        self.serving_power
    }

    pub fn interferer_powers(&self) -> &[f64] {
        &self.interferer_powers
    }

    pub fn residual_noise(&self) -> f64 {
        self.residual_noise
    }

    /// `1 − F(φ)` without domain checks; `φ <= 0` gives 1.
    #[inline]
    pub fn ccdf_unchecked(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 1.0;
        }
        let mut denom = 1.0;
        for &b in &self.interferer_ratios {
            denom *= 1.0 + b * phi;
        }
        (-self.noise_ratio * phi).exp() / denom
    }

    /// `F(φ)` without domain checks; `φ <= 0` gives 0.
    #[inline]
    pub fn cdf_unchecked(&self, phi: f64) -> f64 {
        1.0 - self.ccdf_unchecked(phi)
    }

    /// Density without domain checks; `φ <= 0` gives 0.
    #[inline]
    pub fn pdf_unchecked(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 0.0;
        }
        self.hazard_unchecked(phi) * self.ccdf_unchecked(phi)
    }

    /// Hazard rate `f(φ) / (1 − F(φ))` for `φ >= 0`.
    #[inline]
    pub fn hazard_unchecked(&self, phi: f64) -> f64 {
        let mut hazard = self.noise_ratio;
        for &b in &self.interferer_ratios {
            hazard += b / (b * phi + 1.0);
        }
        hazard
    }

    pub fn cdf(&self, phi: f64) -> Result<f64> {
        check_phi(phi)?;
        Ok(self.cdf_unchecked(phi))
    }

    pub fn pdf(&self, phi: f64) -> Result<f64> {
        check_phi(phi)?;
        Ok(self.pdf_unchecked(phi))
    }

    /// Smallest `φ` (up to bisection precision) with `F(φ) >= p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "probability must lie in (0, 1), got {p}"
            )));
        }
        let target = 1.0 - p;
        let mut hi = 1.0 / (self.noise_ratio + self.interferer_ratios.iter().sum::<f64>());
        let mut lo = 0.0;
        let mut guard = 0;
        while self.ccdf_unchecked(hi) > target {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 2000 || !hi.is_finite() {
                return Err(Error::Numerical {
                    what: "quantile",
                    detail: format!("no upper bracket for p = {p}"),
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ccdf_unchecked(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// Truncation point for integrals over the CQI: `1 − F(φ_max) < tail`.
    pub fn upper_limit(&self, tail: f64) -> Result<f64> {
        self.quantile(1.0 - tail)
    }

    /// `B E[log2(1 + Φ)]`, the mean Shannon rate of a user alone in the cell.
    pub fn mean_capacity(&self, bandwidth: f64) -> Result<f64> {
        // E[ln(1+Φ)] = ∫ (1 − F(φ)) / (1 + φ) dφ
        let top = self.upper_limit(1e-12)?;
        let v = crate::quad::adaptive(
            |t: f64| {
                // φ = t^2 concentrates nodes near the origin
                let phi = t * t;
                2.0 * t * self.ccdf_unchecked(phi) / (1.0 + phi)
            },
            0.0,
            top.sqrt(),
            1e-13,
            1e-10,
        )?;
        Ok(bandwidth * v / core::f64::consts::LN_2)
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("phi must be positive, got {phi}")))
    }
}

/// Unreported interference plus noise: `Σ_{i ∉ reported} p_i + σ`.
pub fn residual_noise(
    all_interferers: &[f64],
    reported: &[usize],
    thermal_noise: f64,
) -> Result<f64> {
    let mut is_reported = alloc::vec![false; all_interferers.len()];
    for &i in reported {
        let slot = is_reported.get_mut(i).ok_or_else(|| {
            Error::Inconsistent(format!(
                "reported interferer {i} out of range ({} known)",
                all_interferers.len()
            ))
        })?;
        if *slot {
            return Err(Error::Inconsistent(format!(
                "interferer {i} reported twice"
            )));
        }
        *slot = true;
    }
    Ok(all_interferers
        .iter()
        .zip(&is_reported)
        .filter(|(_, r)| !**r)
        .map(|(p, _)| p)
        .sum::<f64>()
        + thermal_noise)
}
