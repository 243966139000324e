//! Long-term averaged rates and the proportional-fair metric.

use alloc::format;

use crate::error::{Error, Result};

/// Per-user PF memory: the exponentially averaged rate `R_u` in bits/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserState {
    pub user_id: usize,
    pub avg_rate: f64,
}

impl UserState {
    pub fn new(user_id: usize, avg_rate: f64) -> Result<Self> {
        if !(avg_rate > 0.0 && avg_rate.is_finite()) {
            return Err(Error::invalid(
                "avg_rate",
                format!("must be positive and finite, got {avg_rate}"),
            ));
        }
        Ok(Self { user_id, avg_rate })
    }

    /// Applies one step of the moving average
    /// `R <- (1 - 1/tau) R + r / tau`, never dropping below `floor`.
    ///
    /// `inst_rate` is zero for frames in which the user is not scheduled.
    pub fn update(self, inst_rate: f64, tau: f64, floor: f64) -> Result<Self> {
        if !(tau >= 1.0) {
            return Err(Error::invalid("tau", format!("must be >= 1, got {tau}")));
        }
        if !(inst_rate >= 0.0) {
            return Err(Error::invalid(
                "inst_rate",
                format!("must be >= 0, got {inst_rate}"),
            ));
        }
        let next = (1.0 - 1.0 / tau) * self.avg_rate + inst_rate / tau;
        Ok(Self {
            user_id: self.user_id,
            avg_rate: next.max(floor).max(f64::MIN_POSITIVE),
        })
    }
}

/// One moving-average step without a floor beyond positivity.
pub fn update_average_rate(state: UserState, inst_rate: f64, tau: f64) -> Result<UserState> {
    state.update(inst_rate, tau, 0.0)
}

/// Lower bound on `R_u` for a system of `users` sharing `bandwidth` Hz.
pub fn rate_floor(bandwidth: f64, users: usize) -> f64 {
    1e-6 * bandwidth / users.max(1) as f64
}

/// PF metric `sum_u r_u / R_u`; `rates[i]` belongs to `states[i]`.
///
/// Users with zero rate contribute nothing and need no state.
pub fn pf_metric(rates: &[f64], states: &[UserState]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &r) in rates.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let state = states.get(i).ok_or_else(|| {
            Error::Inconsistent(format!("user index {i} has rate {r} but no state"))
        })?;
        total += r / state.avg_rate;
    }
    Ok(total)
}
