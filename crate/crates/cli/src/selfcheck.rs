//! Reduced-size oracle suites behind `--mode selfcheck`.

use std::time::Instant;

use noma_pfs::allocation::crossing_theta;
use noma_pfs::estimator::EstimatorOptions;
use noma_pfs::oracle::{
    crossing_theta_suite, dominance_suite, optimality_suite, single_user_closed_form_error,
    SuiteReport,
};
use noma_pfs::Candidate;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
    pub passed: bool,
    pub seconds: f64,
}

fn theta(u: &Candidate, v: &Candidate) -> f64 {
    crossing_theta(u, v).unwrap_or(f64::NAN)
}

fn flipped_theta(u: &Candidate, v: &Candidate) -> f64 {
    -theta(u, v)
}

fn line(r: SuiteReport, seconds: f64) -> CheckLine {
    CheckLine {
        name: r.name.to_owned(),
        cases: r.cases,
        failures: r.failures,
        worst: r.worst,
        passed: r.passed(),
        seconds,
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

/// Runs every suite; the run passes if every line does.
pub fn run_selfcheck(seed: u64) -> Vec<CheckLine> {
    let mut out = Vec::new();

    let (r, s) = timed(|| optimality_suite(200, 5, 1000, 1e-4, seed));
    out.push(match r {
        Ok(r) => line(r, s),
        Err(e) => CheckLine {
            name: format!("envelope vs brute force ({e})"),
            cases: 0,
            failures: 1,
            worst: f64::NAN,
            passed: false,
            seconds: s,
        },
    });

    let (r, s) = timed(|| crossing_theta_suite(theta, 10_000, 1000, seed));
    out.push(line(r, s));

    // the suite must notice a corrupted crossing formula
    let (r, s) = timed(|| crossing_theta_suite(flipped_theta, 1000, 100, seed));
    out.push(CheckLine {
        name: "mutated crossing point is rejected".to_owned(),
        cases: r.cases,
        failures: usize::from(r.passed()),
        worst: r.worst,
        passed: !r.passed(),
        seconds: s,
    });

    let (r, s) = timed(|| dominance_suite(10_000, 1000, seed));
    out.push(match r {
        Ok(r) => line(r, s),
        Err(e) => CheckLine {
            name: format!("partial-report CDF dominance ({e})"),
            cases: 0,
            failures: 1,
            worst: f64::NAN,
            passed: false,
            seconds: s,
        },
    });

    let (r, s) = timed(|| single_user_closed_form_error(&EstimatorOptions::default()));
    let err = r.unwrap_or(f64::INFINITY);
    let passed = err <= 1e-3;
    out.push(CheckLine {
        name: "single-user estimator closed form".to_owned(),
        cases: 1,
        failures: usize::from(!passed),
        worst: err,
        passed,
        seconds: s,
    });
    out
}
