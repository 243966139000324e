//! Result files: `results.csv`, `deviations.csv` and `manifest.json`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use noma_pfs::sim::erlang_shape;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::sweep::{SweepOutput, RESULT_COLUMNS};

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const DEVIATION_COLUMNS: [&str; 10] = [
    "scenario_id",
    "users",
    "s_max",
    "i_max",
    "epsilon",
    "seed",
    "user",
    "sim_rate",
    "est_rate",
    "rel_dev",
];

/// Writes all result files into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_csv(&dir.join("results.csv"), &out.rows, &RESULT_COLUMNS)?;
    write_csv(
        &dir.join("deviations.csv"),
        &out.deviations,
        &DEVIATION_COLUMNS,
    )?;

    let mut status_counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &out.rows {
        let name = serde_json::to_value(r.status)?
            .as_str()
            .unwrap_or_default()
            .to_owned();
        *status_counts.entry(name).or_default() += 1;
    }
    let failures: Vec<_> = out
        .estimates
        .iter()
        .filter_map(|(k, v)| v.as_ref().err().map(|(_, msg)| (k, msg)))
        .map(|(k, msg)| {
            json!({
                "users": k.users,
                "i_max": k.i_max,
                "epsilon": f64::from_bits(k.epsilon_bits),
                "seed": out.drop_seeds[k.drop],
                "error": msg,
            })
        })
        .collect();
    let measurement: Vec<_> = cfg
        .epsilon
        .iter()
        .map(|&e| {
            let shape = erlang_shape(e).ok().flatten();
            json!({
                "epsilon": e,
                "erlang_shape": shape,
                "achieved_cv": shape.map_or(0.0, |k| 1.0 / (k as f64).sqrt()),
            })
        })
        .collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "drop_seeds": out.drop_seeds,
        "measurement": measurement,
        "columns": {
            "results": RESULT_COLUMNS,
            "deviations": DEVIATION_COLUMNS,
        },
        "rows": out.rows.len(),
        "status_counts": status_counts,
        "estimator_failures": failures,
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
