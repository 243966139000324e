//! Analytical per-user rate expectation under ideal NOMA.
//!
//! For `τ ≫ 1` the averaged rate `R_u` stays close to its mean `r̄_u`, so the
//! expected PF weight of every user is one:
//!
//! ```text
//! ω̄_u = (B / ln 2) ∫₀¹ E[ π_u(x) · 1{u has the largest CF at x} ] dx = 1
//! ```
//!
//! Written over the CQI `φ` of user `u` (with `ρ_v = r̄_v / r̄_u`), user `v`
//! stays below `u` at `x` iff `Φ_v < ρ_v φ / (1 + x φ (1 − ρ_v))`, and the
//! inner expectation is
//!
//! ```text
//! ∫₀^∞ f_u(φ) · φ / (r̄_u (1 + x φ)) · Π_v F_v(ρ_v φ / (1 + x φ (1 − ρ_v))) dφ
//! ```
//!
//! where `F_v = 1` once the denominator is non-positive. The argument of
//! `F_v` depends on `x` only through `y = x φ`, so with `ℓ = ln(1 + y)` the
//! integration order can be swapped:
//!
//! ```text
//! r̄_u ω̄_u ln2 / B = ∫₀^∞ dℓ ∫_y^∞ f_u(φ) Π_v F_v(c_v(y) φ) dφ,   c_v(y) = ρ_v / (1 + y (1 − ρ_v))
//! ```
//!
//! For `ρ_v > 1` the factor of `v` rises steeply to one as `ℓ` approaches
//! `ln(ρ_v / (ρ_v − 1))` and stays there, so the outer integral is split at
//! those points. Each piece uses a Gauss–Legendre rule in `ℓ`; the inner
//! integral maps `φ = y + (t / (1 − t))³ / h_u(y)` with the hazard rate
//! `h_u`. Node counts double until successive values agree.
//!
//! [`solve_rates`] finds the rates making every `ω̄_u` equal to one. The
//! default [`Solver::Newton`] works on `ln r̄` with the Jacobian taken from
//! the same quadrature pass; [`Solver::FixedPoint`] is the damped update
//! `r̄_u ← r̄_u · ω̄_u^η`, which only contracts for weakly coupled users.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::sinr::SinrDistribution;

/// Update rule of [`solve_rates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Newton steps on `ln r̄`, each component capped at a factor `e`.
    #[default]
    Newton,
    /// `r̄_u ← r̄_u · ω̄_u^η` with `η = damping`.
    FixedPoint,
}

/// Knobs of the quadrature and the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Tolerance on `|ω̄_u − 1|`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: Solver,
    /// Exponent `η` of the fixed-point update.
    pub damping: f64,
    /// Gauss–Legendre nodes per piece of the outer (log power-ratio) axis at
    /// the base level.
    pub x_nodes: usize,
    /// Gauss–Legendre nodes along the mapped CQI axis at the base level.
    pub phi_nodes: usize,
    /// Relative agreement required between two successive node doublings.
    pub quad_rtol: f64,
    /// Maximum number of node doublings beyond the base level.
    pub max_doublings: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 200,
            solver: Solver::Newton,
            damping: 0.5,
            x_nodes: 16,
            phi_nodes: 32,
            quad_rtol: 1e-6,
            max_doublings: 5,
        }
    }
}

impl EstimatorOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "must lie in (0, 1]"));
        }
        if self.x_nodes == 0 || self.phi_nodes == 0 {
            return Err(Error::invalid("nodes", "quadrature rules need nodes"));
        }
        if !(self.quad_rtol > 0.0) {
            return Err(Error::invalid("quad_rtol", "must be positive"));
        }
        Ok(())
    }
}

/// Solved expected rates `r̄′_u` and their residual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    pub rates: Vec<f64>,
    pub total: f64,
    /// `|ω̄_u − 1|` at the returned rates.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Node doublings used by the final quadrature.
    pub quadrature_level: usize,
}

/// Precomputed quadrature nodes for one refinement level.
struct Grid {
    ls: Vec<f64>,
    wl: Vec<f64>,
    ts: Vec<f64>,
    wt: Vec<f64>,
}

impl Grid {
    fn new(opts: &EstimatorOptions, level: usize) -> Self {
        let (ls, wl) = GaussLegendre::new(opts.x_nodes << level).mapped(0.0, 1.0);
        let (ts, wt) = GaussLegendre::new(opts.phi_nodes << level).mapped(0.0, 1.0);
        Self { ls, wl, ts, wt }
    }
}

/// Upper end of the outer integral: `ln(1 + φ)` where `1 − F_u(φ) = 10⁻¹³`.
const TAIL: f64 = 1e-13;

fn log_limit(dist: &SinrDistribution) -> Result<f64> {
    Ok(dist.upper_limit(TAIL)?.ln_1p())
}

struct Competitor<'a> {
    index: usize,
    dist: &'a SinrDistribution,
    rho: f64,
}

struct Active<'a> {
    index: usize,
    dist: &'a SinrDistribution,
    /// `c_v(y)`.
    coef: f64,
    /// `∂ ln c_v / ∂ ln ρ_v = (1 + y) / (1 + y (1 − ρ_v))`.
    elasticity: f64,
}

/// `J_u = ∫ dℓ ∫ f_u Π_v F_v dφ`, so that `ω̄_u = (B / ln 2) J_u / r̄_u`.
///
/// With `jac` given, also accumulates `∂J_u / ∂ ln r̄_v` for `v ≠ u` into
/// `jac[v]`.
fn integral_on_grid(
    me: usize,
    l_max: f64,
    dists: &[&SinrDistribution],
    rates: &[f64],
    grid: &Grid,
    mut jac: Option<&mut [f64]>,
) -> f64 {
    let own = rates[me];
    let dist = dists[me];
    let others: Vec<Competitor> = dists
        .iter()
        .zip(rates)
        .enumerate()
        .filter(|(v, _)| *v != me)
        .map(|(index, (d, r))| Competitor {
            index,
            dist: d,
            rho: r / own,
        })
        .collect();
    // A competitor with ρ_v > 1 never beats u beyond ln(ρ_v / (ρ_v − 1)),
    // and its CDF factor climbs steeply to one just before that point.
    let mut breaks: Vec<f64> = others
        .iter()
        .filter(|c| c.rho > 1.0)
        .map(|c| (c.rho / (c.rho - 1.0)).ln())
        .filter(|&l| l < l_max)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut active: Vec<Active> = Vec::with_capacity(others.len());
    let mut cdfs: Vec<f64> = Vec::with_capacity(others.len());
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in breaks.iter().copied().chain(core::iter::once(l_max)) {
        let width = hi - lo;
        for (&s, &wl) in grid.ls.iter().zip(&grid.wl) {
            let y = (lo + s * width).exp_m1();
            active.clear();
            active.extend(others.iter().filter_map(|c| {
                let denom = 1.0 + y * (1.0 - c.rho);
                (denom > 0.0).then(|| Active {
                    index: c.index,
                    dist: c.dist,
                    coef: c.rho / denom,
                    elasticity: (1.0 + y) / denom,
                })
            }));
            let scale = 1.0 / dist.hazard_unchecked(y);
            let outer = wl * width;
            'nodes: for (&t, &wt) in grid.ts.iter().zip(&grid.wt) {
                let q = t / (1.0 - t);
                let phi = y + scale * q * q * q;
                // dφ/dt = 3 s t² / (1 − t)⁴
                let jac_t = 3.0 * scale * q * q / ((1.0 - t) * (1.0 - t));
                let mut prod = outer * wt * jac_t * dist.pdf_unchecked(phi);
                if !(prod > 0.0 && prod.is_finite()) {
                    continue;
                }
                cdfs.clear();
                for a in &active {
                    let f = a.dist.cdf_unchecked(a.coef * phi);
                    prod *= f;
                    if prod < 1e-300 {
                        continue 'nodes;
                    }
                    cdfs.push(f);
                }
                total += prod;
                if let Some(jac) = jac.as_deref_mut() {
                    // ∂ ln F_v / ∂ ln ρ_v = f_v(a) a / F_v(a) · elasticity
                    for (a, &f) in active.iter().zip(&cdfs) {
                        let arg = a.coef * phi;
                        jac[a.index] += prod / f * a.dist.pdf_unchecked(arg) * arg * a.elasticity;
                    }
                }
            }
        }
        lo = hi;
    }
    total
}

fn weights_on_grid(
    dists: &[&SinrDistribution],
    limits: &[f64],
    rates: &[f64],
    grid: &Grid,
    bandwidth: f64,
) -> Vec<f64> {
    (0..dists.len())
        .map(|u| {
            bandwidth / LN_2 * integral_on_grid(u, limits[u], dists, rates, grid, None) / rates[u]
        })
        .collect()
}

/// Weights and the Jacobian `∂ ln ω̄_u / ∂ ln r̄_v` (row-major).
fn weights_and_jacobian(
    dists: &[&SinrDistribution],
    limits: &[f64],
    rates: &[f64],
    grid: &Grid,
    bandwidth: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = dists.len();
    let mut weights = Vec::with_capacity(n);
    let mut jac = alloc::vec![0.0; n * n];
    for u in 0..n {
        let row = &mut jac[u * n..(u + 1) * n];
        let j = integral_on_grid(u, limits[u], dists, rates, grid, Some(&mut *row));
        weights.push(bandwidth / LN_2 * j / rates[u]);
        let mut off = 0.0;
        for (v, e) in row.iter_mut().enumerate() {
            if v != u {
                *e = if j > 0.0 { *e / j } else { 0.0 };
                off += *e;
            }
        }
        // ω̄_u is homogeneous of degree −1 in the rates
        row[u] = -1.0 - off;
    }
    (weights, jac)
}

fn check_inputs(dists: &[&SinrDistribution], rates: &[f64], bandwidth: f64) -> Result<()> {
    if dists.is_empty() {
        return Err(Error::invalid("users", "need at least one user"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid("bandwidth", "must be positive"));
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("rate", format!("must be positive, got {r}")));
    }
    Ok(())
}

/// Expected PF weight `ω̄_u` of a user whose competitors are `others`.
///
/// Refines the quadrature by node doubling until two successive values agree
/// to `opts.quad_rtol`.
pub fn expected_weight(
    user: &SinrDistribution,
    own_rate: f64,
    others: &[(&SinrDistribution, f64)],
    bandwidth: f64,
    opts: &EstimatorOptions,
) -> Result<f64> {
    opts.check()?;
    let mut dists = Vec::with_capacity(others.len() + 1);
    let mut rates = Vec::with_capacity(others.len() + 1);
    dists.push(user);
    rates.push(own_rate);
    for (d, r) in others {
        dists.push(*d);
        rates.push(*r);
    }
    check_inputs(&dists, &rates, bandwidth)?;
    let l_max = log_limit(user)?;
    let mut prev: Option<f64> = None;
    for level in 0..=opts.max_doublings {
        let grid = Grid::new(opts, level);
        let w =
            bandwidth / LN_2 * integral_on_grid(0, l_max, &dists, &rates, &grid, None) / own_rate;
        if !w.is_finite() {
            return Err(Error::Numerical {
                what: "expected weight",
                detail: format!("non-finite value at level {level}"),
            });
        }
        if let Some(p) = prev {
            if (w - p).abs() <= opts.quad_rtol * w.abs() {
                return Ok(w);
            }
        }
        prev = Some(w);
    }
    Err(Error::Numerical {
        what: "expected weight",
        detail: format!(
            "quadrature did not settle to {:.1e} within {} doublings (last value {:?})",
            opts.quad_rtol, opts.max_doublings, prev
        ),
    })
}

/// Bound on the per-iteration change factor `ω̄_u` of the fixed-point update.
const MIN_STEP: f64 = 1e-2;
/// Largest Newton step in `ln r̄`.
const MAX_LOG_STEP: f64 = 1.0;

/// Solves the dense system `a x = b` in place by Gaussian elimination with
/// partial pivoting.
fn solve_dense(a: &mut [f64], b: &mut [f64]) -> Option<()> {
    let n = b.len();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if !(a[pivot * n + col].abs() > 1e-300) {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let m = a[row * n + col] / a[col * n + col];
            if m != 0.0 {
                for k in col..n {
                    a[row * n + k] -= m * a[col * n + k];
                }
                b[row] -= m * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    b.iter().all(|x| x.is_finite()).then_some(())
}

fn fixed_point_step(rates: &mut [f64], weights: &[f64], damping: f64) {
    for (r, w) in rates.iter_mut().zip(weights) {
        // a user that never wins at the current rates has weight 0
        *r *= w.clamp(MIN_STEP, 1.0 / MIN_STEP).powf(damping);
    }
}

/// Solves `ω̄_u(r̄) = 1` for all users.
pub fn solve_rates(
    users: &[SinrDistribution],
    bandwidth: f64,
    opts: &EstimatorOptions,
) -> Result<RateSolution> {
    opts.check()?;
    let dists: Vec<&SinrDistribution> = users.iter().collect();
    check_inputs(&dists, &[], bandwidth)?;
    let n = users.len();

    // Start from an equal share of each user's standalone capacity.
    let mut rates = users
        .iter()
        .map(|d| d.mean_capacity(bandwidth).map(|c| c / n as f64))
        .collect::<Result<Vec<_>>>()?;
    let limits = users.iter().map(log_limit).collect::<Result<Vec<_>>>()?;

    let mut level = 0;
    let mut grid = Grid::new(opts, level);
    let mut iterations = 0;
    loop {
        let (weights, jac) = match opts.solver {
            Solver::Newton => {
                let (w, j) = weights_and_jacobian(&dists, &limits, &rates, &grid, bandwidth);
                (w, Some(j))
            }
            Solver::FixedPoint => (
                weights_on_grid(&dists, &limits, &rates, &grid, bandwidth),
                None,
            ),
        };
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Numerical {
                what: "rate estimator",
                detail: format!("invalid expected weights {weights:?} at rates {rates:?}"),
            });
        }
        let residuals: Vec<f64> = weights.iter().map(|w| (w - 1.0).abs()).collect();
        let max_res = residuals.iter().copied().fold(0.0, f64::max);
        if max_res <= opts.tol {
            // Accept only once the next refinement level agrees.
            if level >= opts.max_doublings {
                return Err(Error::Numerical {
                    what: "rate estimator",
                    detail: format!(
                        "quadrature did not settle to {:.1e} within {} doublings",
                        opts.quad_rtol, opts.max_doublings
                    ),
                });
            }
            let finer = Grid::new(opts, level + 1);
            let refined = weights_on_grid(&dists, &limits, &rates, &finer, bandwidth);
            let settled = refined
                .iter()
                .zip(&weights)
                .all(|(a, b)| (a - b).abs() <= opts.quad_rtol * a.abs());
            let refined_res: Vec<f64> = refined.iter().map(|w| (w - 1.0).abs()).collect();
            level += 1;
            grid = finer;
            if settled && refined_res.iter().all(|r| *r <= opts.tol) {
                return Ok(RateSolution {
                    total: rates.iter().sum(),
                    rates,
                    residuals: refined_res,
                    iterations,
                    quadrature_level: level,
                });
            }
            continue;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                max_residual: max_res,
                last_rates: rates,
                residuals,
            });
        }
        match jac {
            Some(mut a) if weights.iter().all(|w| *w > 0.0) => {
                let mut step: Vec<f64> = weights.iter().map(|w| -w.ln()).collect();
                if solve_dense(&mut a, &mut step).is_none() {
                    fixed_point_step(&mut rates, &weights, opts.damping);
                } else {
                    let biggest = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
                    let shrink = if biggest > MAX_LOG_STEP {
                        MAX_LOG_STEP / biggest
                    } else {
                        1.0
                    };
                    for (r, s) in rates.iter_mut().zip(&step) {
                        *r *= (s * shrink).exp();
                    }
                }
            }
            _ => fixed_point_step(&mut rates, &weights, opts.damping),
        }
        iterations += 1;
    }
}
