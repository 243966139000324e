//! Throughput aggregates and empirical deviation distributions.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Overall and cell-edge throughput of one population of users.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSummary {
    pub overall: f64,
    pub cell_edge: f64,
    /// Mean rates sorted ascending.
    pub per_user: Vec<f64>,
}

impl ThroughputSummary {
    pub fn from_rates(rates: &[f64]) -> Result<Self> {
        let cell_edge = cell_edge_throughput(rates)?;
        let mut per_user = rates.to_vec();
        per_user.sort_by(f64::total_cmp);
        Ok(Self {
            overall: rates.iter().sum(),
            cell_edge,
            per_user,
        })
    }
}

/// Number of users counted as cell edge: `⌈0.05 N⌉`, at least one.
pub fn cell_edge_count(n: usize) -> usize {
    // 0.05 * n in integer arithmetic avoids 0.05 * 100 = 5.000000000000001
    n.div_ceil(20).max(1)
}

/// Mean rate of the lowest 5 % of users.
pub fn cell_edge_throughput(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::invalid("rates", "need at least one user"));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = cell_edge_count(sorted.len());
    Ok(sorted[..k].iter().sum::<f64>() / k as f64)
}

/// `(estimate − truth) / truth`.
pub fn relative_deviation(estimate: f64, truth: f64) -> Result<f64> {
    if !(truth > 0.0) {
        return Err(Error::invalid(
            "truth",
            format!("must be positive, got {truth}"),
        ));
    }
    Ok((estimate - truth) / truth)
}

/// Empirical CDF of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "need at least one sample"));
        }
        if samples.iter().any(|s| s.is_nan()) {
            return Err(Error::invalid("samples", "NaN in sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `<= x` (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&s| s <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `q` with `cdf(q) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.sorted[k.clamp(1, n) - 1]
    }

    /// Fraction of samples with `|s| <= bound`.
    pub fn fraction_within(&self, bound: f64) -> f64 {
        let lo = self.sorted.partition_point(|&s| s < -bound);
        let hi = self.sorted.partition_point(|&s| s <= bound);
        (hi - lo) as f64 / self.sorted.len() as f64
    }

    /// `(sample, cumulative fraction)` at each distinct sample value.
    pub fn table(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &s) in self.sorted.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 = p,
                _ => out.push((s, p)),
            }
        }
        out
    }
}

/// Empirical CDF of per-user relative deviations.
pub fn deviation_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(samples)
}

/// Sample mean and coefficient of variation via a single pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    pub fn cv(&self) -> f64 {
        self.variance().sqrt() / self.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cell_edge_examples() {
        assert_eq!(cell_edge_throughput(&[1.0; 20]).unwrap(), 1.0);
        let r: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(cell_edge_throughput(&r).unwrap(), 1.0);
        let r: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(cell_edge_throughput(&r).unwrap(), 3.0);
        assert_eq!(cell_edge_count(1), 1);
        assert_eq!(cell_edge_count(21), 2);
        assert!(cell_edge_throughput(&[]).is_err());
    }

    #[test]
    fn summary_sorts_and_sums() {
        let s = ThroughputSummary::from_rates(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.per_user, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.overall, 6.0);
        assert!(s.cell_edge <= s.overall / 3.0);
    }

    #[test]
    fn deviation_examples() {
        assert_relative_eq!(
            relative_deviation(1.04, 1.0).unwrap(),
            0.04,
            epsilon = 1e-15
        );
        assert_eq!(relative_deviation(2.5, 2.5).unwrap(), 0.0);
        assert_relative_eq!(relative_deviation(0.9, 1.0).unwrap(), -0.1, epsilon = 1e-15);
        assert!(relative_deviation(1.0, 0.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        let c = deviation_cdf(&[-0.05, 0.0, 0.05]).unwrap();
        assert_eq!(c.fraction_within(0.10), 1.0);
        let z = deviation_cdf(&[0.0; 4]).unwrap();
        assert_eq!(z.cdf(-1e-12), 0.0);
        assert_eq!(z.cdf(0.0), 1.0);
        assert_eq!(z.table(), vec![(0.0, 1.0)]);
        assert_eq!(c.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(c.cdf(f64::INFINITY), 1.0);
        assert!(deviation_cdf(&[]).is_err());
    }

    #[test]
    fn moments_match_direct_formula() {
        let mut m = RunningMoments::default();
        for x in [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0] {
            m.push(x);
        }
        assert_relative_eq!(m.mean(), 5.0);
        assert_relative_eq!(m.variance(), 4.0);
        assert_relative_eq!(m.cv(), 0.4);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_quantiles_invert(
            xs in proptest::collection::vec(-1.0f64..1.0, 1..200),
            p in 0.0f64..1.0,
            a in -2.0f64..2.0, b in -2.0f64..2.0,
        ) {
            let c = EmpiricalCdf::new(&xs).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(c.cdf(lo) <= c.cdf(hi));
            prop_assert!(c.cdf(c.quantile(p)) >= p);
            let w = c.fraction_within(0.5);
            let direct = xs.iter().filter(|x| x.abs() <= 0.5).count() as f64 / xs.len() as f64;
            prop_assert!((w - direct).abs() < 1e-12);
        }
    }
}
