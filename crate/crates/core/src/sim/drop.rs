use alloc::vec::Vec;

use rand::Rng;

use super::link::{realize_cqis, DropGeometry};
use super::{stream_rng, SimConfig, Stream};
use crate::allocation::{
    normalized_weight, optimal_schedule_ideal, optimal_schedule_practical, rates_from_allocation,
    Allocation, Candidate,
};
use crate::error::Result;
use crate::pfs::{rate_floor, UserState};
use crate::stats::RunningMoments;

/// Frame scheduler used inside a drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheduler {
    /// No SIC limit.
    Ideal,
    /// At most `s_max` multiplexed users; `Practical(1)` is OMA.
    Practical(usize),
}

impl Scheduler {
    pub const OMA: Scheduler = Scheduler::Practical(1);

    pub fn s_max(self) -> Option<usize> {
        match self {
            Scheduler::Ideal => None,
            Scheduler::Practical(s) => Some(s),
        }
    }

    pub fn schedule(self, candidates: &[Candidate]) -> Result<Allocation> {
        match self {
            Scheduler::Ideal => optimal_schedule_ideal(candidates),
            Scheduler::Practical(s) => optimal_schedule_practical(candidates, s),
        }
    }
}

/// Frame-by-frame comparison of the schedulers on identical inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuditSummary {
    pub frames: usize,
    /// Frames where `ideal >= s3 >= s2 >= OMA` failed beyond the slack.
    pub violations: usize,
    /// Smallest relative gap over all adjacent pairs (negative = violation).
    pub worst_gap: f64,
}

const AUDIT_SLACK: f64 = 1e-10;
const AUDIT_CHAIN: [Scheduler; 4] = [
    Scheduler::Ideal,
    Scheduler::Practical(3),
    Scheduler::Practical(2),
    Scheduler::Practical(1),
];

impl AuditSummary {
    fn record(&mut self, candidates: &[Candidate]) -> Result<()> {
        let mut w = [0.0; 4];
        for (slot, s) in w.iter_mut().zip(AUDIT_CHAIN) {
            *slot = normalized_weight(&s.schedule(candidates)?, candidates)?;
        }
        if self.frames == 0 {
            self.worst_gap = f64::INFINITY;
        }
        self.frames += 1;
        let mut bad = false;
        for pair in w.windows(2) {
            let gap = (pair[0] - pair[1]) / pair[0].abs().max(1.0);
            self.worst_gap = self.worst_gap.min(gap);
            bad |= gap < -AUDIT_SLACK;
        }
        self.violations += usize::from(bad);
        Ok(())
    }
}

/// Result of one simulated drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcome {
    pub scheduler: Scheduler,
    /// Time-averaged instantaneous rate of each user over the measured frames.
    pub mean_rates: Vec<f64>,
    /// PF metric `Σ r_u / R_u` of every measured frame.
    pub metric_trace: Vec<f64>,
    /// Coefficient of variation of each `R_u(t)` over the measured frames.
    pub avg_rate_cv: Vec<f64>,
    /// Largest `|Σ λ − 1|` over all frames.
    pub max_power_sum_error: f64,
    /// Mean number of multiplexed users per measured frame.
    pub mean_multiplexed: f64,
    pub audit: Option<AuditSummary>,
}

impl DropOutcome {
    pub fn overall(&self) -> f64 {
        self.mean_rates.iter().sum()
    }
}

/// Runs the frame loop of one drop.
///
/// Every frame draws CQIs, schedules, converts the allocation into Shannon
/// rates and updates all averaged rates. The first `warmup_frames` frames are
/// discarded. With `audit` set, every measured frame is additionally
/// scheduled by the ideal, 3-user, 2-user and OMA schedulers on the same
/// candidates to check the ordering of their PF weights.
pub fn run_drop(
    config: &SimConfig,
    geometry: &DropGeometry,
    scheduler: Scheduler,
    audit: bool,
) -> Result<DropOutcome> {
    config.check()?;
    let n = geometry.users();
    let b = config.bandwidth_hz;
    let floor = rate_floor(b, n);
    let seed = geometry.seed;

    let mut states: Vec<UserState> = (0..n)
        .map(|u| {
            let r0 = stream_rng(seed, Stream::InitialRate(u)).random_range(0.5..1.5) * b / n as f64;
            UserState::new(u, r0)
        })
        .collect::<Result<_>>()?;
    let mut fading: Vec<_> = (0..n)
        .map(|u| stream_rng(seed, Stream::Fading(u)))
        .collect();

    let mut samples = Vec::with_capacity(n);
    let mut candidates = Vec::with_capacity(n);
    let mut cqis = alloc::vec![0.0; n];
    let mut rate_sums = alloc::vec![0.0; n];
    let mut moments = alloc::vec![RunningMoments::default(); n];
    let mut metric_trace = Vec::with_capacity(config.measured_frames);
    let mut max_power_sum_error: f64 = 0.0;
    let mut multiplexed = 0usize;
    let mut summary = audit.then(AuditSummary::default);

    for frame in 0..config.warmup_frames + config.measured_frames {
        let measured = frame >= config.warmup_frames;
        realize_cqis(
            &geometry.means,
            geometry.noise_power_w,
            config.fading,
            &mut fading,
            &mut samples,
        );
        candidates.clear();
        for (s, st) in samples.iter().zip(&states) {
            cqis[s.user_id] = s.cqi;
            candidates.push(Candidate::from_sample(*s, st)?);
        }
        let allocation = scheduler.schedule(&candidates)?;
        let power_sum: f64 = allocation.power_ratios().iter().sum();
        max_power_sum_error = max_power_sum_error.max((power_sum - 1.0).abs());
        let rates = rates_from_allocation(&allocation, &cqis, b)?;

        if measured {
            if let Some(a) = summary.as_mut() {
                a.record(&candidates)?;
            }
            let metric: f64 = rates.iter().zip(&states).map(|(r, s)| r / s.avg_rate).sum();
            metric_trace.push(metric);
            multiplexed += allocation.len();
            for (acc, r) in rate_sums.iter_mut().zip(&rates) {
                *acc += r;
            }
        }
        for (st, &r) in states.iter_mut().zip(&rates) {
            *st = st.update(r, config.tau, floor)?;
        }
        if measured {
            for (m, st) in moments.iter_mut().zip(&states) {
                m.push(st.avg_rate);
            }
        }
    }

    let frames = config.measured_frames as f64;
    Ok(DropOutcome {
        scheduler,
        mean_rates: rate_sums.iter().map(|s| s / frames).collect(),
        metric_trace,
        avg_rate_cv: moments.iter().map(RunningMoments::cv).collect(),
        max_power_sum_error,
        mean_multiplexed: multiplexed as f64 / frames,
        audit: summary,
    })
}
