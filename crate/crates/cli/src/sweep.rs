//! Sweep execution.
//!
//! A simulation depends on `(users, s_max, drop)` and an estimate on
//! `(users, i_max, epsilon, drop)`, so each is computed once and shared by
//! every result row that needs it. Work items run on a rayon pool; rows are
//! assembled afterwards in sweep order, which keeps the output independent
//! of the number of workers.

use std::collections::BTreeMap;
use std::time::Instant;

use noma_pfs::estimator::solve_rates;
use noma_pfs::sim::{build_layout, drop_seed, generate_drop, run_drop, NetworkLayout, SimConfig};
use noma_pfs::stats::{cell_edge_throughput, relative_deviation};
use noma_pfs::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SicLimit};

pub const RESULT_COLUMNS: [&str; 12] = [
    "scenario_id",
    "users",
    "s_max",
    "i_max",
    "epsilon",
    "seed",
    "overall_sim",
    "cell_edge_sim",
    "overall_est",
    "rel_dev",
    "runtime",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub users: usize,
    pub s_max: String,
    pub i_max: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub overall_sim: Option<f64>,
    pub cell_edge_sim: Option<f64>,
    pub overall_est: Option<f64>,
    pub rel_dev: Option<f64>,
    /// Wall-clock seconds spent on the simulation and estimate of this row.
    pub runtime: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub scenario_id: String,
    pub users: usize,
    pub s_max: String,
    pub i_max: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub user: usize,
    pub sim_rate: f64,
    pub est_rate: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NonConvergence,
    NumericalFailure,
    EstimateError,
    SimError,
}

/// Outcome of one simulated drop.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub mean_rates: Vec<f64>,
    pub avg_rate_cv: Vec<f64>,
    pub seconds: f64,
}

/// Outcome of one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstRecord {
    pub rates: Vec<f64>,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimKey {
    pub users: usize,
    pub s_max: SicLimit,
    pub drop: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EstKey {
    pub users: usize,
    pub i_max: usize,
    /// `epsilon` as raw bits, for ordering.
    pub epsilon_bits: u64,
    pub drop: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub deviations: Vec<DeviationRow>,
    pub sims: BTreeMap<SimKey, Result<SimRecord, String>>,
    pub estimates: BTreeMap<EstKey, Result<EstRecord, (Status, String)>>,
    pub drop_seeds: Vec<u64>,
}

fn scenario_id(users: usize, s_max: SicLimit, i_max: usize, epsilon: f64) -> String {
    format!("u{users}_s{s_max}_i{i_max}_e{epsilon}")
}

fn simulate(
    sim: &SimConfig,
    layout: &NetworkLayout,
    key: SimKey,
    seed: u64,
) -> Result<SimRecord, String> {
    let t = Instant::now();
    let geometry = generate_drop(sim, layout, key.users, seed).map_err(|e| e.to_string())?;
    let out = run_drop(sim, &geometry, key.s_max.scheduler(), false).map_err(|e| e.to_string())?;
    Ok(SimRecord {
        mean_rates: out.mean_rates,
        avg_rate_cv: out.avg_rate_cv,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn estimate(
    cfg: &ExperimentConfig,
    sim: &SimConfig,
    layout: &NetworkLayout,
    key: EstKey,
    seed: u64,
) -> Result<EstRecord, (Status, String)> {
    let t = Instant::now();
    let failed = |e: Error| {
        let status = match e {
            Error::NonConvergence { .. } => Status::NonConvergence,
            Error::Numerical { .. } => Status::NumericalFailure,
            _ => Status::EstimateError,
        };
        (status, e.to_string())
    };
    let geometry = generate_drop(sim, layout, key.users, seed).map_err(failed)?;
    let dists = geometry
        .reports(key.i_max, f64::from_bits(key.epsilon_bits))
        .map_err(failed)?
        .iter()
        .map(|r| r.distribution())
        .collect::<Result<Vec<_>, _>>()
        .map_err(failed)?;
    let sol = solve_rates(&dists, sim.bandwidth_hz, &cfg.estimator_options()).map_err(failed)?;
    Ok(EstRecord {
        rates: sol.rates,
        iterations: sol.iterations,
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// Runs every simulation and estimate of the sweep and assembles the rows.
///
/// `include_runtime = false` leaves the runtime column empty so that two runs
/// produce identical tables.
pub fn run_sweep(cfg: &ExperimentConfig, include_runtime: bool) -> SweepOutput {
    let sim = cfg.sim_config();
    let layout = build_layout(&sim);
    let drop_seeds: Vec<u64> = (0..cfg.drops as u64)
        .map(|d| drop_seed(cfg.seed, d))
        .collect();

    let mut sim_keys = Vec::new();
    let mut est_keys = Vec::new();
    for &users in &cfg.users {
        for drop in 0..cfg.drops {
            if cfg.mode.simulates() {
                sim_keys.extend(cfg.s_max.iter().map(|&s_max| SimKey { users, s_max, drop }));
            }
            if cfg.mode.estimates() {
                for &i_max in &cfg.i_max {
                    est_keys.extend(cfg.epsilon.iter().map(|e| EstKey {
                        users,
                        i_max,
                        epsilon_bits: e.to_bits(),
                        drop,
                    }));
                }
            }
        }
    }
    sim_keys.sort();
    sim_keys.dedup();
    est_keys.sort();
    est_keys.dedup();

    let sims: BTreeMap<_, _> = sim_keys
        .par_iter()
        .map(|&k| (k, simulate(&sim, &layout, k, drop_seeds[k.drop])))
        .collect();
    let estimates: BTreeMap<_, _> = est_keys
        .par_iter()
        .map(|&k| (k, estimate(cfg, &sim, &layout, k, drop_seeds[k.drop])))
        .collect();

    let mut rows = Vec::new();
    let mut deviations = Vec::new();
    for &users in &cfg.users {
        for &s_max in &cfg.s_max {
            for &i_max in &cfg.i_max {
                for &epsilon in &cfg.epsilon {
                    let id = scenario_id(users, s_max, i_max, epsilon);
                    for (drop, &seed) in drop_seeds.iter().enumerate() {
                        let s = sims.get(&SimKey { users, s_max, drop });
                        let e = estimates.get(&EstKey {
                            users,
                            i_max,
                            epsilon_bits: epsilon.to_bits(),
                            drop,
                        });
                        let mut row = ResultRow {
                            scenario_id: id.clone(),
                            users,
                            s_max: s_max.to_string(),
                            i_max,
                            epsilon,
                            seed,
                            overall_sim: None,
                            cell_edge_sim: None,
                            overall_est: None,
                            rel_dev: None,
                            runtime: None,
                            status: Status::Ok,
                        };
                        let mut seconds = 0.0;
                        match s {
                            Some(Ok(r)) => {
                                row.overall_sim = Some(r.mean_rates.iter().sum());
                                row.cell_edge_sim = cell_edge_throughput(&r.mean_rates).ok();
                                seconds += r.seconds;
                            }
                            Some(Err(_)) => row.status = Status::SimError,
                            None => {}
                        }
                        match e {
                            Some(Ok(r)) => {
                                row.overall_est = Some(r.rates.iter().sum());
                                seconds += r.seconds;
                            }
                            Some(Err((status, _))) => row.status = row.status.max(*status),
                            None => {}
                        }
                        if let (Some(Ok(sr)), Some(Ok(er))) = (s, e) {
                            row.rel_dev = relative_deviation(
                                er.rates.iter().sum(),
                                sr.mean_rates.iter().sum(),
                            )
                            .ok();
                            for (user, (&sim_rate, &est_rate)) in
                                sr.mean_rates.iter().zip(&er.rates).enumerate()
                            {
                                let Ok(rel_dev) = relative_deviation(est_rate, sim_rate) else {
                                    continue;
                                };
                                deviations.push(DeviationRow {
                                    scenario_id: id.clone(),
                                    users,
                                    s_max: s_max.to_string(),
                                    i_max,
                                    epsilon,
                                    seed,
                                    user,
                                    sim_rate,
                                    est_rate,
                                    rel_dev,
                                });
                            }
                        }
                        if include_runtime {
                            row.runtime = Some(seconds);
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    SweepOutput {
        rows,
        deviations,
        sims,
        estimates,
        drop_seeds,
    }
}
