use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::link::{DropGeometry, MeanPowers};
use super::{stream_rng, Stream};
use crate::error::{Error, Result};
use crate::sinr::{residual_noise, SinrDistribution};

/// What a user reports about its channel once per drop.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    /// Measured serving RSRP `p̂`.
    pub serving_rsrp: f64,
    /// `(interferer index, measured power)` for the strongest true interferers.
    pub reported_irsrp: Vec<(usize, f64)>,
    /// Unreported interference plus noise, from true powers.
    pub residual: f64,
    /// Achieved coefficient of variation of the measurement factor.
    pub cv: f64,
}

impl MeasurementReport {
    pub fn distribution(&self) -> Result<SinrDistribution> {
        SinrDistribution::new(
            self.serving_rsrp,
            self.reported_irsrp.iter().map(|&(_, p)| p).collect(),
            self.residual,
        )
    }
}

/// Integer Erlang shape `⌈1/ε²⌉` for a target CV `ε`; `None` for exact measurement.
pub fn erlang_shape(epsilon: f64) -> Result<Option<u64>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(
            "epsilon",
            format!("must be finite and >= 0, got {epsilon}"),
        ));
    }
    if epsilon == 0.0 {
        return Ok(None);
    }
    // 1 / 0.1² evaluates to 100.00000000000001
    let k = (1.0 / (epsilon * epsilon) - 1e-9).ceil().max(1.0);
    Ok(Some(k as u64))
}

/// Picks the `i_max` strongest interferers and applies unit-mean Erlang
/// measurement noise with CV `epsilon` to each reported power.
pub fn measure_and_report<R: Rng + ?Sized>(
    true_means: &MeanPowers,
    noise: f64,
    i_max: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<MeasurementReport> {
    let shape = erlang_shape(epsilon)?;
    let mut order: Vec<usize> = (0..true_means.interferers.len()).collect();
    order.sort_by(|&a, &b| {
        true_means.interferers[b]
            .total_cmp(&true_means.interferers[a])
            .then(a.cmp(&b))
    });
    order.truncate(i_max);
    let residual = residual_noise(&true_means.interferers, &order, noise)?;
    let (factor, cv): (Option<Gamma<f64>>, f64) = match shape {
        None => (None, 0.0),
        Some(k) => {
            let k = k as f64;
            let g =
                Gamma::new(k, 1.0 / k).map_err(|e| Error::invalid("epsilon", format!("{e}")))?;
            (Some(g), 1.0 / k.sqrt())
        }
    };
    let mut measure = |p: f64| match &factor {
        Some(g) => p * g.sample(rng),
        None => p,
    };
    let serving_rsrp = measure(true_means.serving);
    let reported_irsrp = order
        .iter()
        .map(|&i| (i, measure(true_means.interferers[i])))
        .collect();
    Ok(MeasurementReport {
        serving_rsrp,
        reported_irsrp,
        residual,
        cv,
    })
}

impl DropGeometry {
    /// One report per user, each drawn from the user's own measurement stream.
    pub fn reports(&self, i_max: usize, epsilon: f64) -> Result<Vec<MeasurementReport>> {
        self.means
            .iter()
            .enumerate()
            .map(|(u, m)| {
                let mut rng = stream_rng(self.seed, Stream::Measurement(u));
                measure_and_report(m, self.noise_power_w, i_max, epsilon, &mut rng)
            })
            .collect()
    }
}
