//! Slow reference implementations and randomized verification suites.
//!
//! Nothing here is used by the schedulers or the estimator. The brute-force
//! allocation search shares no code with the envelope scheduler, and the
//! Monte-Carlo sampler draws CQIs straight from fading powers.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::allocation::{classify_pair, optimal_schedule_ideal, Candidate, PairCase};
use crate::error::Result;
use crate::estimator::{solve_rates, EstimatorOptions};
use crate::pfs::UserState;
use crate::quad;
use crate::sinr::SinrDistribution;

/// Outcome of one randomized suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed error measure (suite specific).
    pub worst: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Best PF weight (units of `B / ln 2`) found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub weight: f64,
    /// Candidate indices in SIC order.
    pub order: Vec<usize>,
    pub cprs: Vec<f64>,
}

fn weight_of(cands: &[Candidate], order: &[usize], cprs: &[f64]) -> f64 {
    order
        .iter()
        .zip(cprs.windows(2))
        .map(|(&i, a)| {
            let c = &cands[i];
            ((1.0 + a[1] * c.cqi).ln() - (1.0 + a[0] * c.cqi).ln()) / c.avg_rate
        })
        .sum()
}

/// Non-increasing-CQI orderings of `subset`: permutations within equal-CQI groups.
fn descending_orderings(cands: &[Candidate], subset: &[usize]) -> Vec<Vec<usize>> {
    let mut base = subset.to_vec();
    base.sort_by(|&a, &b| cands[b].cqi.total_cmp(&cands[a].cqi));
    let mut out = alloc::vec![Vec::new()];
    let mut i = 0;
    while i < base.len() {
        let mut j = i + 1;
        while j < base.len() && cands[base[j]].cqi == cands[base[i]].cqi {
            j += 1;
        }
        let perms = permutations(&base[i..j]);
        out = out
            .iter()
            .flat_map(|prefix| {
                perms.iter().map(move |p| {
                    let mut v = prefix.clone();
                    v.extend_from_slice(p);
                    v
                })
            })
            .collect();
        i = j;
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return alloc::vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Grid dynamic programme over CPRs `k / grid`, returning the best value and CPRs.
fn grid_search(cands: &[Candidate], order: &[usize], grid: usize) -> (f64, Vec<f64>) {
    let s = order.len();
    let x = |k: usize| k as f64 / grid as f64;
    let level = |n: usize, k: usize| {
        let c = &cands[order[n]];
        (1.0 + x(k) * c.cqi).ln() / c.avg_rate
    };
    // f[n][k]: best weight of the first n+1 users with alpha_{n+1} = x(k)
    let mut f = alloc::vec![alloc::vec![0.0; grid + 1]; s];
    let mut arg = alloc::vec![alloc::vec![0usize; grid + 1]; s];
    for (k, v) in f[0].iter_mut().enumerate() {
        *v = level(0, k) - level(0, 0);
    }
    for n in 1..s {
        let mut best = f64::NEG_INFINITY;
        let mut best_j = 0;
        for k in 0..=grid {
            let cand = f[n - 1][k] - level(n, k);
            if cand > best {
                best = cand;
                best_j = k;
            }
            f[n][k] = level(n, k) + best;
            arg[n][k] = best_j;
        }
    }
    let mut cprs = alloc::vec![0.0; s + 1];
    let mut k = grid;
    for n in (0..s).rev() {
        cprs[n + 1] = x(k);
        k = if n > 0 { arg[n][k] } else { 0 };
    }
    (f[s - 1][grid], cprs)
}

/// Coordinate ascent on the interior CPRs with golden-section line searches.
fn refine(cands: &[Candidate], order: &[usize], cprs: &mut [f64]) -> f64 {
    let s = order.len();
    let mut value = weight_of(cands, order, cprs);
    for _ in 0..500 {
        for n in 1..s {
            let (lo, hi) = (cprs[n - 1], cprs[n + 1]);
            let g = |a: f64| {
                let u = &cands[order[n - 1]];
                let v = &cands[order[n]];
                (1.0 + a * u.cqi).ln() / u.avg_rate - (1.0 + a * v.cqi).ln() / v.avg_rate
            };
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let (mut a, mut b) = (lo, hi);
            let mut c = b - r * (b - a);
            let mut d = a + r * (b - a);
            let (mut gc, mut gd) = (g(c), g(d));
            for _ in 0..200 {
                if gc > gd {
                    b = d;
                    d = c;
                    gd = gc;
                    c = b - r * (b - a);
                    gc = g(c);
                } else {
                    a = c;
                    c = d;
                    gc = gd;
                    d = a + r * (b - a);
                    gd = g(d);
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            let mid = 0.5 * (a + b);
            // keep the best of the bracket ends and the interior optimum
            let best = [lo, mid, hi, cprs[n]]
                .into_iter()
                .max_by(|p, q| g(*p).total_cmp(&g(*q)))
                .unwrap_or(mid);
            cprs[n] = best;
        }
        let next = weight_of(cands, order, cprs);
        let done = (next - value).abs() <= 1e-15 * next.abs().max(1.0);
        value = value.max(next);
        if done {
            break;
        }
    }
    value
}

/// Exhaustive search over all user subsets, all non-increasing-CQI orderings
/// and a CPR grid of step `1 / grid`, followed by local refinement of the
/// near-best grid points.
pub fn brute_force_allocation(cands: &[Candidate], grid: usize) -> BruteForce {
    let n = cands.len();
    let mut coarse: Vec<(f64, Vec<usize>, Vec<f64>)> = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        for order in descending_orderings(cands, &subset) {
            let (w, cprs) = grid_search(cands, &order, grid);
            coarse.push((w, order, cprs));
        }
    }
    let top = coarse.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let mut best = BruteForce {
        weight: f64::NEG_INFINITY,
        order: Vec::new(),
        cprs: Vec::new(),
    };
    for (w, order, mut cprs) in coarse {
        if w < top - 1e-2 * top.abs().max(1e-12) {
            continue;
        }
        let v = refine(cands, &order, &mut cprs);
        if v > best.weight {
            best = BruteForce {
                weight: v,
                order,
                cprs,
            };
        }
    }
    best
}

/// `∫_0^1 max_u π_u(x) dx` by adaptive quadrature (units of `B / ln 2`).
pub fn max_cf_integral(cands: &[Candidate]) -> Result<f64> {
    quad::adaptive(
        |x| {
            cands
                .iter()
                .map(|c| c.cf(x))
                .fold(f64::NEG_INFINITY, f64::max)
        },
        0.0,
        1.0,
        1e-13,
        1e-11,
    )
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random candidates with `Φ ~ logU[0.1, 100]` and `R ~ logU[0.1, 10]`.
pub fn random_candidates<R: Rng + ?Sized>(rng: &mut R, users: usize) -> Vec<Candidate> {
    (0..users)
        .map(|u| Candidate {
            user_id: u,
            cqi: log_uniform(rng, 0.1, 100.0),
            avg_rate: log_uniform(rng, 0.1, 10.0),
        })
        .collect()
}

/// Envelope scheduler against [`brute_force_allocation`] on random instances
/// with up to `max_users` users; fails where the relative gap exceeds `rtol`.
pub fn optimality_suite(
    instances: usize,
    max_users: usize,
    grid: usize,
    rtol: f64,
    seed: u64,
) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        name: "envelope vs brute force",
        cases: 0,
        failures: 0,
        worst: 0.0,
    };
    for _ in 0..instances {
        let users = rng.random_range(1..=max_users);
        let cands = random_candidates(&mut rng, users);
        let alg = crate::allocation::normalized_weight(&optimal_schedule_ideal(&cands)?, &cands)?;
        let bf = brute_force_allocation(&cands, grid).weight;
        let gap = (alg - bf).abs() / bf.abs();
        report.cases += 1;
        report.worst = report.worst.max(gap);
        if gap > rtol {
            report.failures += 1;
        }
    }
    Ok(report)
}

/// Checks that `theta` returns a point where two CFs coincide and that the
/// pair classification agrees with a dense numeric comparison of the CFs.
pub fn crossing_theta_suite(
    theta: fn(&Candidate, &Candidate) -> f64,
    pairs: usize,
    points: usize,
    seed: u64,
) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        name: "crossing point and pair cases",
        cases: 0,
        failures: 0,
        worst: 0.0,
    };
    while report.cases < pairs {
        let c = random_candidates(&mut rng, 2);
        let (u, v) = if c[0].cqi > c[1].cqi {
            (c[0], c[1])
        } else {
            (c[1], c[0])
        };
        if u.avg_rate == v.avg_rate {
            continue;
        }
        report.cases += 1;
        let t = theta(&u, &v);
        // 1/π is affine in x, so compare there to stay finite for any t
        let inv = |c: &Candidate| c.avg_rate / c.cqi + t * c.avg_rate;
        let mismatch = (inv(&u) - inv(&v)).abs() / inv(&u).abs().max(inv(&v).abs());
        let mut bad = !(mismatch <= 1e-9);
        report.worst = report.worst.max(if mismatch.is_nan() {
            f64::INFINITY
        } else {
            mismatch
        });

        let Ok(rel) = classify_pair(&u, &v) else {
            report.failures += 1;
            continue;
        };
        for k in 1..=points {
            let x = k as f64 / (points + 1) as f64;
            let (pu, pv) = (u.cf(x), v.cf(x));
            let slack = 1e-12 * pu.max(pv);
            bad |= match rel.case {
                PairCase::Case2 => pu > pv + slack,
                PairCase::Case3 => pv > pu + slack,
                PairCase::Case1 => {
                    let th = rel.theta.unwrap_or(f64::NAN);
                    if (x - th).abs() < 1e-9 {
                        false
                    } else if x < th {
                        pv > pu + slack
                    } else {
                        pu > pv + slack
                    }
                }
                PairCase::EqualCqi => false,
            };
        }
        if rel.case == PairCase::Case1 {
            let th = rel.theta.unwrap_or(f64::NAN);
            bad |= !((t - th).abs() <= 1e-12 * th.abs().max(1.0));
        }
        report.failures += usize::from(bad);
    }
    report
}

/// Random instances of CQI distributions with a strict subset of the
/// interferers reported; every sampled `φ` must see `F_{Φ'}(φ) > F_Φ(φ)`.
pub fn dominance_suite(instances: usize, points: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        name: "partial-report CDF dominance",
        cases: 0,
        failures: 0,
        worst: f64::INFINITY,
    };
    for _ in 0..instances {
        let n = rng.random_range(1..=12);
        let serving = log_uniform(&mut rng, 1.0, 100.0);
        let powers: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, 0.01, 1.0)).collect();
        let noise = log_uniform(&mut rng, 0.01, 1.0);
        let exact = SinrDistribution::new(serving, powers, noise)?;
        let keep = rng.random_range(0..n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..keep {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        idx.truncate(keep);
        let partial = exact.with_reported(&idx)?;
        let mut bad = false;
        for _ in 0..points {
            let phi = log_uniform(&mut rng, 0.01, 100.0);
            let (full, part) = (exact.ccdf_unchecked(phi), partial.ccdf_unchecked(phi));
            // F' > F  <=>  1 - F' < 1 - F
            let margin = (full - part) / full;
            report.worst = report.worst.min(margin);
            bad |= !(part < full);
        }
        report.cases += 1;
        report.failures += usize::from(bad);
    }
    Ok(report)
}

/// Single user, one equal-power interferer and vanishing noise: the solved
/// rate at `B = 1` must be `1 / ln 2`. Returns the absolute error.
pub fn single_user_closed_form_error(opts: &EstimatorOptions) -> Result<f64> {
    let d = SinrDistribution::new(1.0, alloc::vec![1.0], 1e-12)?;
    let sol = solve_rates(&[d], 1.0, opts)?;
    Ok((sol.rates[0] - core::f64::consts::LOG2_E).abs())
}

/// One CQI draw from a distribution's own fading model: Rayleigh serving and
/// reported interferers, constant residual noise.
pub fn sample_cqi<R: Rng + ?Sized>(dist: &SinrDistribution, rng: &mut R) -> f64 {
    let h: f64 = Exp1.sample(rng);
    let i: f64 = dist
        .interferer_powers()
        .iter()
        .map(|&p| {
            let g: f64 = Exp1.sample(rng);
            p * g
        })
        .sum();
    dist.serving_power() * h / (i + dist.residual_noise())
}

/// Frame-level PF simulation of the ideal scheduler with CQIs drawn from
/// `dists`; returns the time-averaged rate of each user.
pub fn monte_carlo_ideal_rates(
    dists: &[SinrDistribution],
    bandwidth: f64,
    tau: f64,
    warmup: usize,
    frames: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = dists.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states: Vec<UserState> = (0..n)
        .map(|u| UserState::new(u, bandwidth / n as f64))
        .collect::<Result<_>>()?;
    let mut sums = alloc::vec![0.0; n];
    let mut cqis = alloc::vec![0.0; n];
    for frame in 0..warmup + frames {
        let cands: Vec<Candidate> = dists
            .iter()
            .zip(&states)
            .enumerate()
            .map(|(u, (d, s))| {
                cqis[u] = sample_cqi(d, &mut rng);
                Candidate::new(u, cqis[u], s.avg_rate)
            })
            .collect::<Result<_>>()?;
        let alloc = optimal_schedule_ideal(&cands)?;
        let rates = crate::allocation::rates_from_allocation(&alloc, &cqis, bandwidth)?;
        for (u, st) in states.iter_mut().enumerate() {
            *st = st.update(rates[u], tau, 0.0)?;
            if frame >= warmup {
                sums[u] += rates[u];
            }
        }
    }
    Ok(sums.iter().map(|s| s / frames as f64).collect())
}
