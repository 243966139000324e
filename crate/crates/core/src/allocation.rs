//! Optimal PF power allocation for downlink NOMA.
//!
//! With the users of a frame sorted by descending CQI `Φ`, the PF metric of a
//! power split is `(B / ln 2) Σ_n ∫_{α_{n-1}}^{α_n} π_{c_n}(x) dx` where
//! `π_u(x) = Φ_u / (R_u (1 + x Φ_u))` is the user's coefficient function (CF)
//! and `α_n` are the cumulative power ratios (CPRs). The metric is maximised
//! by giving every `x ∈ (0, 1)` to the user with the largest CF, so the
//! optimum is the upper envelope of the CFs. Since `1 / π_u(x) = R_u / Φ_u +
//! x R_u` is affine in `x`, that envelope is a lower envelope of lines and is
//! traced in at most `U (U - 1) / 2` crossing-point evaluations by
//! [`optimal_schedule_ideal`].
//!
//! When SIC can only separate `s_max` users, [`optimal_schedule_practical`]
//! runs the envelope scheduler on every candidate pool of at most `s_max`
//! users and keeps the best.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::LN_2;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pfs::UserState;

/// Relative tolerance under which two CQIs are considered equal.
pub const CQI_EQ_RTOL: f64 = 1e-12;
/// Margin applied to both ends of the open interval `(0, 1)` for crossing points.
pub const THETA_EPS: f64 = 1e-12;

/// A user competing for the current frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub user_id: usize,
    /// Full-power SINR `Φ_u`, linear.
    pub cqi: f64,
    /// Long-term averaged rate `R_u`.
    pub avg_rate: f64,
}

impl Candidate {
    pub fn new(user_id: usize, cqi: f64, avg_rate: f64) -> Result<Self> {
        let c = Self {
            user_id,
            cqi,
            avg_rate,
        };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        if !(self.cqi > 0.0 && self.cqi.is_finite()) {
            return Err(Error::Domain(format!(
                "user {}: cqi must be positive and finite, got {}",
                self.user_id, self.cqi
            )));
        }
        if !(self.avg_rate > 0.0 && self.avg_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "user {}: avg_rate must be positive and finite, got {}",
                self.user_id, self.avg_rate
            )));
        }
        Ok(())
    }

    /// `π_u(x)` without domain checks.
    #[inline]
    pub fn cf(&self, x: f64) -> f64 {
        self.cqi / (self.avg_rate * (1.0 + x * self.cqi))
    }

    /// `π_u(0) = Φ_u / R_u`.
    #[inline]
    fn cf_at_zero(&self) -> f64 {
        self.cqi / self.avg_rate
    }
}

/// One frame's realised CQI of a user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqiSample {
    pub user_id: usize,
    pub cqi: f64,
}

impl Candidate {
    pub fn from_sample(sample: CqiSample, state: &UserState) -> Result<Self> {
        Self::new(sample.user_id, sample.cqi, state.avg_rate)
    }
}

/// Coefficient function `π(x) = Φ / (R (1 + x Φ))` for `x ∈ (0, 1)`.
pub fn coefficient_fn(cqi: f64, avg_rate: f64, x: f64) -> Result<f64> {
    Candidate::new(0, cqi, avg_rate)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x must lie in (0, 1), got {x}")));
    }
    Ok(cqi / (avg_rate * (1.0 + x * cqi)))
}

#[inline]
fn theta_unchecked(u: &Candidate, v: &Candidate) -> f64 {
    (u.avg_rate / u.cqi - v.avg_rate / v.cqi) / (v.avg_rate - u.avg_rate)
}

/// Crossing point `θ_{u,v} = (R_u/Φ_u − R_v/Φ_v) / (R_v − R_u)` of two CFs.
///
/// Symmetric in its arguments. The caller decides whether the point lies in
/// `(0, 1)`.
pub fn crossing_theta(u: &Candidate, v: &Candidate) -> Result<f64> {
    u.check()?;
    v.check()?;
    if u.avg_rate == v.avg_rate {
        return Err(Error::DegeneratePair);
    }
    Ok(theta_unchecked(u, v))
}

#[inline]
fn cqi_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= CQI_EQ_RTOL * a.abs().max(b.abs())
}

/// How the CFs of two users relate on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCase {
    /// The CFs cross once inside `(0, 1)`: the higher-CQI user wins below θ.
    Case1,
    /// The higher-CQI user is dominated everywhere.
    Case2,
    /// The lower-CQI user is dominated everywhere.
    Case3,
    /// Equal CQIs: the CFs are proportional and the smaller `R` dominates.
    EqualCqi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRelation {
    pub case: PairCase,
    /// Crossing point, present exactly for [`PairCase::Case1`].
    pub theta: Option<f64>,
    /// The higher-CQI member (for equal CQIs, the dominant one).
    pub higher: usize,
    /// Member whose CF is never below the other's; `None` for `Case1`.
    pub dominant: Option<usize>,
}

/// Classifies a pair of users by the relative shape of their CFs.
///
/// Argument order does not matter: the higher-CQI member is identified
/// internally.
pub fn classify_pair(a: &Candidate, b: &Candidate) -> Result<PairRelation> {
    a.check()?;
    b.check()?;
    if cqi_equal(a.cqi, b.cqi) {
        let dom = match a.avg_rate.partial_cmp(&b.avg_rate) {
            Some(Ordering::Less) => a,
            Some(Ordering::Greater) => b,
            _ if a.user_id <= b.user_id => a,
            _ => b,
        };
        return Ok(PairRelation {
            case: PairCase::EqualCqi,
            theta: None,
            higher: dom.user_id,
            dominant: Some(dom.user_id),
        });
    }
    let (u, v) = if a.cqi > b.cqi { (a, b) } else { (b, a) };
    Ok(classify_ordered(u, v))
}

/// `u` must have the strictly larger CQI.
fn classify_ordered(u: &Candidate, v: &Candidate) -> PairRelation {
    let ratio = v.avg_rate / u.avg_rate;
    let lower = v.cqi / u.cqi;
    let upper = (1.0 + 1.0 / u.cqi) / (1.0 + 1.0 / v.cqi);
    let mk = |case, theta, dominant| PairRelation {
        case,
        theta,
        higher: u.user_id,
        dominant,
    };
    if ratio <= lower {
        return mk(PairCase::Case2, None, Some(v.user_id));
    }
    if ratio >= upper {
        return mk(PairCase::Case3, None, Some(u.user_id));
    }
    let theta = theta_unchecked(u, v);
    if theta <= THETA_EPS {
        mk(PairCase::Case2, None, Some(v.user_id))
    } else if theta >= 1.0 - THETA_EPS {
        mk(PairCase::Case3, None, Some(u.user_id))
    } else {
        mk(PairCase::Case1, Some(theta), None)
    }
}

/// A scheduled user sequence with its cumulative power ratios.
///
/// `sequence[n]` is `c_{n+1}` (descending CQI) and `cprs` is
/// `⟨α_0 = 0, α_1, …, α_S = 1⟩`, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    sequence: Vec<usize>,
    cprs: Vec<f64>,
}

impl Allocation {
    pub fn new(sequence: Vec<usize>, cprs: Vec<f64>) -> Result<Self> {
        let a = Self { sequence, cprs };
        a.check_shape()?;
        Ok(a)
    }

    /// The whole power goes to `user`.
    pub fn single(user: usize) -> Self {
        Self {
            sequence: alloc::vec![user],
            cprs: alloc::vec![0.0, 1.0],
        }
    }

    /// Builds an allocation from per-user power ratios listed in SIC order.
    pub fn from_power_ratios(sequence: Vec<usize>, ratios: &[f64]) -> Result<Self> {
        if ratios.len() != sequence.len() {
            return Err(Error::Inconsistent(format!(
                "{} users but {} power ratios",
                sequence.len(),
                ratios.len()
            )));
        }
        let mut cprs = Vec::with_capacity(ratios.len() + 1);
        cprs.push(0.0);
        let mut acc = 0.0;
        for &l in ratios {
            acc += l;
            cprs.push(acc);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::Inconsistent(format!("power ratios sum to {acc}")));
        }
        *cprs.last_mut().unwrap() = 1.0;
        Self::new(sequence, cprs)
    }

    fn check_shape(&self) -> Result<()> {
        let s = self.sequence.len();
        if s == 0 {
            return Err(Error::Inconsistent("empty user sequence".into()));
        }
        if self.cprs.len() != s + 1 {
            return Err(Error::Inconsistent(format!(
                "{s} users need {} CPRs, got {}",
                s + 1,
                self.cprs.len()
            )));
        }
        if self.cprs[0] != 0.0 || self.cprs[s] != 1.0 {
            return Err(Error::Inconsistent(
                "CPRs must start at 0 and end at 1".into(),
            ));
        }
        if self.cprs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Inconsistent(
                "CPRs must be strictly increasing".into(),
            ));
        }
        for (i, u) in self.sequence.iter().enumerate() {
            if self.sequence[..i].contains(u) {
                return Err(Error::Inconsistent(format!("user {u} scheduled twice")));
            }
        }
        Ok(())
    }

    /// Checks the SIC ordering against the frame's CQIs (`cqis[user_id]`).
    pub fn check_against(&self, cqis: &[f64]) -> Result<()> {
        self.check_shape()?;
        let mut prev: Option<f64> = None;
        for &u in &self.sequence {
            let phi = *cqis
                .get(u)
                .ok_or_else(|| Error::Inconsistent(format!("no CQI for scheduled user {u}")))?;
            if !(phi > 0.0 && phi.is_finite()) {
                return Err(Error::Inconsistent(format!("user {u} has CQI {phi}")));
            }
            if let Some(p) = prev {
                if !(phi < p) || cqi_equal(p, phi) {
                    return Err(Error::Inconsistent(format!(
                        "sequence not in strictly descending CQI order at user {u}"
                    )));
                }
            }
            prev = Some(phi);
        }
        Ok(())
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn cprs(&self) -> &[f64] {
        &self.cprs
    }

    /// Number of multiplexed users `S`.
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// `λ_{c_n} = α_n − α_{n−1}` in SIC order.
    pub fn power_ratios(&self) -> Vec<f64> {
        self.cprs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Scheduled users paired with their `(α_{n−1}, α_n)` interval.
    pub fn segments(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.sequence
            .iter()
            .zip(self.cprs.windows(2))
            .map(|(&u, w)| (u, w[0], w[1]))
    }
}

/// Post-SIC SINR of every user, indexed by user id (zero if unscheduled).
pub fn post_sic_sinr(allocation: &Allocation, cqis: &[f64]) -> Result<Vec<f64>> {
    allocation.check_against(cqis)?;
    let mut out = alloc::vec![0.0; cqis.len()];
    let mut stronger = 0.0;
    for (u, lambda) in allocation.sequence.iter().zip(allocation.power_ratios()) {
        let phi = cqis[*u];
        out[*u] = phi * lambda / (phi * stronger + 1.0);
        stronger += lambda;
    }
    Ok(out)
}

#[inline]
fn segment_log_gain(phi: f64, lo: f64, hi: f64) -> f64 {
    (hi * phi).ln_1p() - (lo * phi).ln_1p()
}

/// Shannon rate `B log2((1 + α_n Φ) / (1 + α_{n−1} Φ))` per user id.
pub fn rates_from_allocation(
    allocation: &Allocation,
    cqis: &[f64],
    bandwidth: f64,
) -> Result<Vec<f64>> {
    allocation.check_against(cqis)?;
    let mut out = alloc::vec![0.0; cqis.len()];
    for (u, lo, hi) in allocation.segments() {
        out[u] = bandwidth / LN_2 * segment_log_gain(cqis[u], lo, hi);
    }
    Ok(out)
}

/// PF weight `Σ_n r_{c_n} / R_{c_n}` of an allocation.
pub fn pf_weight_of_allocation(
    allocation: &Allocation,
    cqis: &[f64],
    states: &[UserState],
    bandwidth: f64,
) -> Result<f64> {
    let rates = rates_from_allocation(allocation, cqis, bandwidth)?;
    crate::pfs::pf_metric(&rates, states)
}

/// PF weight in units of `B / ln 2`, straight from candidate data.
pub fn normalized_weight(allocation: &Allocation, candidates: &[Candidate]) -> Result<f64> {
    let mut total = 0.0;
    for (u, lo, hi) in allocation.segments() {
        let c = candidates
            .iter()
            .find(|c| c.user_id == u)
            .ok_or_else(|| Error::Inconsistent(format!("user {u} is not a candidate")))?;
        total += segment_log_gain(c.cqi, lo, hi) / c.avg_rate;
    }
    Ok(total)
}

fn validate(cands: &[Candidate]) -> Result<()> {
    if cands.is_empty() {
        return Err(Error::invalid("candidates", "candidate set is empty"));
    }
    cands.iter().try_for_each(Candidate::check)
}

/// `true` if `a` should win a tie against `b`: smaller CQI, then smaller id.
#[inline]
fn tie_prefers(a: &Candidate, b: &Candidate) -> bool {
    if cqi_equal(a.cqi, b.cqi) {
        a.user_id < b.user_id
    } else {
        a.cqi < b.cqi
    }
}

#[inline]
fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Envelope tracing on the pool `cands[pool[..]]`.
///
/// Writes candidate indices (not user ids) to `seq` and the CPRs to `cprs`
/// and returns the number of crossing points evaluated.
fn envelope(
    cands: &[Candidate],
    pool: &[usize],
    work: &mut Vec<(usize, f64)>,
    seq: &mut Vec<usize>,
    cprs: &mut Vec<f64>,
) -> usize {
    seq.clear();
    cprs.clear();
    work.clear();

    let mut first = pool[0];
    for &i in &pool[1..] {
        let (a, b) = (cands[i].cf_at_zero(), cands[first].cf_at_zero());
        if (near(a, b) && tie_prefers(&cands[i], &cands[first])) || (!near(a, b) && a > b) {
            first = i;
        }
    }
    seq.push(first);
    cprs.push(0.0);

    let mut evals = 0;
    let mut current = first;
    let mut alpha = 0.0;
    // Valid set V: lower-CQI users whose CF crosses the current one in (α, 1).
    for &i in pool {
        if i == current {
            continue;
        }
        if let Some(t) = crossing_in_range(&cands[current], &cands[i], alpha, &mut evals) {
            work.push((i, t));
        }
    }
    while !work.is_empty() {
        let mut best = 0;
        for k in 1..work.len() {
            let (i, t) = work[k];
            let (j, tb) = work[best];
            if (near(t, tb) && tie_prefers(&cands[i], &cands[j])) || (!near(t, tb) && t < tb) {
                best = k;
            }
        }
        let (next, theta) = work.swap_remove(best);
        seq.push(next);
        cprs.push(theta);
        current = next;
        alpha = theta;
        let mut k = 0;
        while k < work.len() {
            let i = work[k].0;
            match crossing_in_range(&cands[current], &cands[i], alpha, &mut evals) {
                Some(t) => {
                    work[k].1 = t;
                    k += 1;
                }
                None => {
                    work.swap_remove(k);
                }
            }
        }
    }
    cprs.push(1.0);
    evals
}

/// Crossing point of `cur` with a strictly lower-CQI `other` if the pair is
/// in Case 1 and the crossing lies in `(alpha, 1)`.
#[inline]
fn crossing_in_range(
    cur: &Candidate,
    other: &Candidate,
    alpha: f64,
    evals: &mut usize,
) -> Option<f64> {
    if !(other.cqi < cur.cqi) || cqi_equal(cur.cqi, other.cqi) {
        return None;
    }
    if other.avg_rate >= cur.avg_rate {
        // Case 3: the lower-CQI user never overtakes.
        return None;
    }
    *evals += 1;
    let t = theta_unchecked(cur, other);
    (t > alpha + THETA_EPS && t < 1.0 - THETA_EPS).then_some(t)
}

/// Optimal sequence and CPRs for ideal NOMA (no SIC limit).
///
/// Starts from the user with the largest `π(0)`, then repeatedly appends the
/// lower-CQI user whose CF crosses the current one first. Ties go to the
/// smaller CQI, then to the smaller user id.
pub fn optimal_schedule_ideal(candidates: &[Candidate]) -> Result<Allocation> {
    optimal_schedule_ideal_counted(candidates).map(|(a, _)| a)
}

/// As [`optimal_schedule_ideal`], also returning the number of crossing
/// points evaluated.
pub fn optimal_schedule_ideal_counted(candidates: &[Candidate]) -> Result<(Allocation, usize)> {
    validate(candidates)?;
    let pool: Vec<usize> = (0..candidates.len()).collect();
    let mut seq = Vec::new();
    let mut cprs = Vec::new();
    let evals = envelope(candidates, &pool, &mut Vec::new(), &mut seq, &mut cprs);
    let sequence = seq.iter().map(|&i| candidates[i].user_id).collect();
    Ok((Allocation { sequence, cprs }, evals))
}

/// Best allocation with at most `s_max` multiplexed users.
///
/// Enumerates all candidate pools of size `<= s_max`, runs the envelope
/// scheduler restricted to each pool and keeps the first pool attaining the
/// largest PF weight. `s_max = 1` is classic orthogonal PF.
pub fn optimal_schedule_practical(candidates: &[Candidate], s_max: usize) -> Result<Allocation> {
    if s_max < 1 {
        return Err(Error::invalid("s_max", "must be at least 1"));
    }
    validate(candidates)?;
    if s_max == 1 {
        return Ok(Allocation::single(best_single(candidates).user_id));
    }
    let ideal = optimal_schedule_ideal(candidates)?;
    if ideal.len() <= s_max {
        return Ok(ideal);
    }

    let n = candidates.len();
    let mut work = Vec::with_capacity(s_max);
    let mut seq = Vec::with_capacity(s_max);
    let mut cprs = Vec::with_capacity(s_max + 1);
    let mut best_w = f64::NEG_INFINITY;
    let mut best_seq: Vec<usize> = Vec::new();
    let mut best_cprs: Vec<f64> = Vec::new();
    let mut pool: Vec<usize> = Vec::with_capacity(s_max);

    for size in 1..=s_max.min(n) {
        pool.clear();
        pool.extend(0..size);
        loop {
            envelope(candidates, &pool, &mut work, &mut seq, &mut cprs);
            // A shorter result equals the allocation of a smaller pool that
            // was already scored.
            if seq.len() == size {
                let w: f64 = seq
                    .iter()
                    .zip(cprs.windows(2))
                    .map(|(&i, a)| {
                        let c = &candidates[i];
                        segment_log_gain(c.cqi, a[0], a[1]) / c.avg_rate
                    })
                    .sum();
                if w > best_w {
                    best_w = w;
                    best_seq.clone_from(&seq);
                    best_cprs.clone_from(&cprs);
                }
            }
            if !next_combination(&mut pool, n) {
                break;
            }
        }
    }
    let sequence = best_seq.iter().map(|&i| candidates[i].user_id).collect();
    Ok(Allocation {
        sequence,
        cprs: best_cprs,
    })
}

fn best_single(candidates: &[Candidate]) -> &Candidate {
    let score = |c: &Candidate| c.cqi.ln_1p() / c.avg_rate;
    let mut best = &candidates[0];
    let mut best_score = score(best);
    for c in &candidates[1..] {
        let s = score(c);
        if s > best_score || (s == best_score && c.user_id < best.user_id) {
            best = c;
            best_score = s;
        }
    }
    best
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
