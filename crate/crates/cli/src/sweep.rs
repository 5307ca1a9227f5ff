//! Grid sweeps over (λ, β).

use std::path::Path;
use std::time::Instant;

use dyadic_core::csv::{fmt_f64, CsvBuf};
use dyadic_core::{ModelParams, Regime};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{OutputDir, RunManifest, Verdict, MANIFEST_NAME};
use crate::run::{new_manifest, run, Findings};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub lambda: f64,
    pub beta: f64,
    pub u: f64,
    pub regime: &'static str,
    /// "pass", "fail" (a check failed) or "error" (the pipeline aborted).
    pub status: &'static str,
    pub exit_code: i32,
    pub checks_passed: usize,
    pub checks_total: usize,
    pub shooting_depth: Option<f64>,
    pub conditioning_cap: Option<f64>,
    pub b1: Option<f64>,
    pub envelope_passed: Option<bool>,
    pub error: Option<String>,
}

pub fn point_dir_name(index: usize) -> String {
    format!("point-{index:03}")
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut c = CsvBuf::new(&[
        "index",
        "lambda",
        "beta",
        "u",
        "regime",
        "status",
        "exit_code",
        "checks_passed",
        "checks_total",
        "shooting_depth",
        "conditioning_cap",
        "b1",
        "envelope_passed",
        "error",
    ]);
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in rows {
        c.row([
            r.index.to_string(),
            fmt_f64(r.lambda),
            fmt_f64(r.beta),
            fmt_f64(r.u),
            r.regime.to_string(),
            r.status.to_string(),
            r.exit_code.to_string(),
            r.checks_passed.to_string(),
            r.checks_total.to_string(),
            opt(r.shooting_depth),
            opt(r.conditioning_cap),
            opt(r.b1),
            r.envelope_passed.map(|b| b.to_string()).unwrap_or_default(),
            // commas and newlines would break the row
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        ]);
    }
    c.finish()
}

fn point_row(index: usize, lambda: f64, beta: f64, outcome: &CliResult<RunManifest>) -> SweepRow {
    let u = lambda.powf(2.0 * beta - 6.0);
    let mut row = SweepRow {
        index,
        lambda,
        beta,
        u,
        regime: Regime::classify(u).as_str(),
        status: "error",
        exit_code: 0,
        checks_passed: 0,
        checks_total: 0,
        shooting_depth: None,
        conditioning_cap: None,
        b1: None,
        envelope_passed: None,
        error: None,
    };
    match outcome {
        Ok(m) => {
            row.checks_total = m.verdicts.len();
            row.checks_passed = m.verdicts.iter().filter(|v| v.passed).count();
            row.status = if m.passed { "pass" } else { "fail" };
            row.exit_code = if m.passed { 0 } else { crate::error::EXIT_CHECK_FAILED };
            row.shooting_depth = m.metrics.get("shooting_depth").copied();
            row.conditioning_cap = m.metrics.get("conditioning_cap").copied();
            row.b1 = m.metrics.get("b1").copied();
            row.envelope_passed = m.verdict("envelope").map(|v| v.passed);
        }
        Err(e) => {
            row.exit_code = e.exit_code();
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Runs the template command at every grid point (λ outer, β inner) in
/// `point-NNN` subdirectories and aggregates the outcomes into `sweep.csv`.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> CliResult<RunManifest> {
    let start = Instant::now();
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("command sweep needs a sweep section".into()))?;
    let points: Vec<(usize, f64, f64)> = sweep
        .lambdas
        .iter()
        .flat_map(|&l| sweep.betas.iter().map(move |&b| (l, b)))
        .enumerate()
        .map(|(i, (l, b))| (i, l, b))
        .collect();
    let mut dir = OutputDir::create(out, cfg.format)?;
    let run_point = |&(i, lambda, beta): &(usize, f64, f64)| {
        let outcome = ModelParams::new(lambda, beta)
            .map_err(CliError::from)
            .and_then(|params| {
                let mut child = cfg.clone();
                child.command = sweep.command;
                child.params = params;
                child.sweep = None;
                child.output_dir = None;
                run(&child, &out.join(point_dir_name(i)))
            });
        if let Err(e) = &outcome {
            log::warn!("sweep point {i} (lambda = {lambda}, beta = {beta}) failed: {e}");
        }
        (point_row(i, lambda, beta, &outcome), outcome.ok())
    };
    let workers = cfg.workers.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(SweepRow, Option<RunManifest>)> = pool.install(|| points.par_iter().map(run_point).collect());

    let rows: Vec<SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
    dir.table("sweep", || sweep_csv(&rows), &rows)?;
    let mut f = Findings::default();
    for (row, manifest) in &results {
        f.verdicts.push(Verdict::holds(&point_dir_name(row.index), row.status == "pass"));
        if let Some(m) = manifest {
            for file in &m.files {
                let rel = format!("{}/{}", point_dir_name(row.index), file.path);
                dir.record(rel, file.sha256.clone(), file.bytes);
            }
            dir.record_existing(&format!("{}/{}", point_dir_name(row.index), MANIFEST_NAME))?;
        }
    }
    f.metrics.insert("points".into(), rows.len() as f64);
    let manifest = new_manifest(cfg, start, f)?;
    dir.finish(manifest)
}
