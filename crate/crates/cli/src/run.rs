//! One pipeline per command.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use dyadic_core::csv::{fmt_f64, CsvBuf};
use dyadic_core::estimates::{cube_integrals_to_csv, level_set_grid, level_sets_to_csv};
use dyadic_core::galerkin::SignVerdict;
use dyadic_core::{
    blowup_functional, build_selfsimilar, check_envelope, check_lower_bound, check_sign_structure,
    conditioning_cap, convergence_study, cube_integral, energy_report, envelope_check, integrate,
    limit_study, psi_metric, reverse_to_solution, shoot, stationary_residual, verify_blowup,
    EnergyReport, IntegratorConfig, Regime, SignReport, SystemKind, Trajectory,
};

use crate::config::{Command, ExperimentConfig, Format};
use crate::error::{CliError, CliResult};
use crate::manifest::{OutputDir, RunManifest, Verdict};

/// Verdicts and scalar metrics collected by a pipeline.
#[derive(Debug, Default)]
pub struct Findings {
    pub verdicts: Vec<Verdict>,
    pub metrics: BTreeMap<String, f64>,
}

impl Findings {
    fn check(&mut self, v: Verdict) {
        log::info!(
            "{}: {} (value {:e}, needs {})",
            v.name,
            if v.passed { "pass" } else { "FAIL" },
            v.value,
            v.condition
        );
        self.verdicts.push(v);
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }
}

/// Runs the configured command, writing artifacts and `manifest.json`
/// into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    if cfg.command == Command::Sweep {
        return crate::sweep::run_sweep(cfg, out);
    }
    let start = Instant::now();
    let mut dir = OutputDir::create(out, cfg.format)?;
    let mut f = Findings::default();
    match cfg.command {
        Command::Simulate => simulate(cfg, &mut dir, &mut f)?,
        Command::Verify => verify(cfg, &mut dir, &mut f)?,
        Command::Estimate => estimate(cfg, &mut dir, &mut f)?,
        Command::Stationary => stationary(cfg, &mut dir, &mut f)?,
        Command::Selfsimilar => selfsimilar(cfg, &mut dir, &mut f)?,
        Command::NonuniquenessDemo => nonuniqueness(cfg, &mut dir, &mut f)?,
        Command::Sweep => unreachable!("handled above"),
    }
    let manifest = new_manifest(cfg, start, f)?;
    dir.finish(manifest)
}

pub(crate) fn new_manifest(cfg: &ExperimentConfig, start: Instant, f: Findings) -> CliResult<RunManifest> {
    Ok(RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cfg.command.as_str().into(),
        config: serde_json::to_value(cfg).map_err(|e| CliError::Core(e.into()))?,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        passed: f.verdicts.iter().all(|v| v.passed),
        verdicts: f.verdicts,
        metrics: f.metrics,
        files: Vec::new(),
    })
}

fn write_trajectory(dir: &mut OutputDir, stem: &str, traj: &Trajectory) -> CliResult<()> {
    match dir.format() {
        Format::Csv => dir.write(&format!("{stem}.csv"), traj.to_csv().as_bytes()),
        Format::Json => dir.write(&format!("{stem}.json"), traj.to_json()?.as_bytes()),
    }
}

fn energy_csv(r: &EnergyReport) -> String {
    let mut c = CsvBuf::new(&["t", "energy", "dissipation", "identity_residual", "slack"]);
    for i in 0..r.times.len() {
        c.float_row(
            None,
            &[r.times[i], r.energy[i], r.dissipation[i], r.identity_residual[i], r.slack[i]],
        );
    }
    c.finish()
}

fn sign_csv(r: &SignReport) -> String {
    let mut c = CsvBuf::new(&["n", "initial", "verdict", "tau", "min_value"]);
    for m in &r.modes {
        let (verdict, tau) = match &m.verdict {
            SignVerdict::NonnegativePreserved => ("nonnegative-preserved", String::new()),
            SignVerdict::NoCrossing => ("no-crossing", String::new()),
            SignVerdict::CrossedOnce { tau } => ("crossed-once", fmt_f64(*tau)),
            SignVerdict::Violated { at, .. } => ("violated", fmt_f64(*at)),
        };
        c.row([
            m.mode.to_string(),
            fmt_f64(m.initial),
            verdict.to_string(),
            tau,
            fmt_f64(m.min_value),
        ]);
    }
    c.finish()
}

/// Integrates the configured data and records the energy checks shared by
/// simulate, verify and estimate.
fn trajectory_with_energy(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<Trajectory> {
    let a = cfg.data_vector()?;
    let traj = integrate(&cfg.params, &a, &cfg.integrator, cfg.system)?;
    write_trajectory(dir, "trajectory", &traj)?;
    let e0 = a.norm_sq();
    let energies: Vec<f64> = traj.states().iter().map(|s| s.norm_sq()).collect();
    let e_max = energies.iter().copied().fold(0.0, f64::max);
    f.metric("n_modes", a.n_modes() as f64);
    f.metric("steps", traj.n_segments() as f64);
    f.metric("initial_energy", e0);
    f.metric("final_energy", *energies.last().unwrap_or(&e0));
    let tol = cfg.verify.energy_tolerance;
    f.check(Verdict::at_most("l2_bound", e_max - e0, tol * e0.max(f64::MIN_POSITIVE)));
    match cfg.system {
        SystemKind::Viscous => {
            let r = energy_report(&traj)?;
            dir.table("energy", || energy_csv(&r), &r)?;
            f.metric("min_leray_hopf_slack", r.min_slack);
            f.check(Verdict::below("energy_identity", r.max_identity_residual, tol));
            f.check(Verdict::holds("dissipation_nondecreasing", r.dissipation_nondecreasing));
        }
        SystemKind::Inviscid => {
            let drift = energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
            f.check(Verdict::below("energy_conservation", drift, tol));
        }
    }
    Ok(traj)
}

fn simulate(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<()> {
    trajectory_with_energy(cfg, dir, f).map(|_| ())
}

fn verify(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<()> {
    let traj = trajectory_with_energy(cfg, dir, f)?;
    let v = &cfg.verify;
    if cfg.system == SystemKind::Viscous {
        let r = check_sign_structure(&traj);
        dir.table("sign", || sign_csv(&r), &r)?;
        f.check(Verdict::none("sign_structure", r.violations));
    } else {
        log::warn!("sign structure is only checked for the viscous system");
    }
    if let Some(eps2) = v.eps2 {
        let r = check_lower_bound(&traj, eps2, v.first_mode)?;
        f.metric("lower_bound_min_margin", r.min_normalized_margin);
        f.check(Verdict::none("lower_bound", r.violations));
        f.check(Verdict::none("lower_bound_positivity", r.positivity_violations));
    }
    if let Some(eps3) = v.eps3 {
        let r = check_envelope(&traj, eps3, v.first_mode)?;
        f.metric("envelope_t_prime", r.t_prime);
        f.metric("envelope_max_ratio", r.max_ratio);
        f.check(Verdict::none("envelope", r.violations));
    }
    if v.convergence_modes.len() >= 2 {
        let spec = cfg.data.clone().ok_or_else(|| CliError::Config("no data section".into()))?;
        let params = cfg.params;
        let table = convergence_study(
            &cfg.params,
            |n| {
                spec.resized(n)
                    .and_then(|s| s.generate(&params))
                    .map_err(|e| dyadic_core::Error::Precondition(e.to_string()))
            },
            &v.convergence_modes,
            &cfg.integrator,
            cfg.system,
        )?;
        let csv = || {
            let mut c = CsvBuf::new(&["n_coarse", "n_fine", "max_diff"]);
            for r in &table.rows {
                c.row([r.n_coarse.to_string(), r.n_fine.to_string(), fmt_f64(r.max_diff)]);
            }
            c.finish()
        };
        dir.table("convergence", csv, &table)?;
        f.check(Verdict::holds("convergence_decreasing", table.decreasing()));
    }
    Ok(())
}

fn estimate(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<()> {
    let traj = trajectory_with_energy(cfg, dir, f)?;
    let e = &cfg.estimate;
    if !e.modes.is_empty() && !e.levels.is_empty() {
        let rows = level_set_grid(&traj, &e.modes, &e.levels)?;
        dir.table("level_sets", || level_sets_to_csv(&rows), &rows)?;
        let outside = rows.iter().filter(|r| !r.within_bounds()).count();
        f.check(Verdict::none("level_set_bounds", outside));
    }
    if !e.cube_modes.is_empty() {
        let rows = e
            .cube_modes
            .iter()
            .map(|&n| cube_integral(&traj, n))
            .collect::<dyadic_core::Result<Vec<_>>>()?;
        dir.table("cube_integrals", || cube_integrals_to_csv(&rows), &rows)?;
        let failing = rows.iter().filter(|r| !r.holds()).count();
        f.check(Verdict::none("cube_integral_bound", failing));
    }
    if let Some(eps) = e.blowup_eps {
        f.metric("blowup_functional", blowup_functional(&traj, eps)?);
    }
    Ok(())
}

fn stationary(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<()> {
    let s = &cfg.stationary;
    let p = &cfg.params;
    let aux = shoot(p, s.target_len)?;
    let sol = reverse_to_solution(&aux, p)?;
    match dir.format() {
        Format::Csv => dir.write("solution.csv", sol.to_csv().as_bytes())?,
        Format::Json => dir.write("solution.json", sol.to_json()?.as_bytes())?,
    }
    let shot = sol.shot.as_ref().expect("shoot records its parameter");
    f.metric("shooting_depth", s.target_len as f64);
    f.metric("shooting_parameter", shot.parameter);
    f.metric("bisection_iterations", shot.iterations as f64);
    f.metric("b1", sol.b[0]);
    f.metric("b_last", *sol.b.last().expect("nonempty prefix"));
    f.check(Verdict::at_most(
        "shooting_hit",
        shot.hit_error.abs(),
        dyadic_core::stationary::HIT_TOL,
    ));
    f.check(Verdict::below("recurrence_residual", sol.recurrence_residual, 1e-12));
    let resid = stationary_residual(p, &sol.a_vector()?)?;
    f.check(Verdict::below(
        "stationary_residual",
        resid.max_relative(),
        s.residual_tolerance,
    ));
    let env = envelope_check(&sol);
    f.metric("max_ratio_to_index", env.max_ratio_to_index);
    if sol.regime == Regime::Supercritical {
        f.metric("tail_scaled_variation", env.tail_variation());
    }
    f.check(Verdict::holds("envelope", env.passed));
    if !s.limit_lengths.is_empty() {
        let table = limit_study(p, &s.limit_lengths)?;
        dir.table("limit", || table.to_csv(), &table)?;
        f.metric("extrapolated_b1", table.extrapolated_b1);
        f.metric(
            "limit_increments_decreasing",
            if table.increments_decreasing() { 1.0 } else { 0.0 },
        );
    }
    if s.measure_cap {
        let cap = conditioning_cap(p, s.cap_search_limit)?;
        f.metric("conditioning_cap", cap.cap as f64);
        f.metric("conditioning_cap_limit_reached", if cap.limit_reached { 1.0 } else { 0.0 });
    }
    Ok(())
}

fn selfsimilar(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<()> {
    let s = &cfg.selfsimilar;
    let sol = build_selfsimilar(&cfg.params, s.prefix_len)?;
    let csv = || {
        let mut c = CsvBuf::new(&["n", "b", "profile"]);
        for (i, (b, u)) in sol.b.iter().zip(&sol.profile).enumerate() {
            c.float_row(Some(&(i + 1).to_string()), &[*b, *u]);
        }
        c.finish()
    };
    dir.table("profile", csv, &sol)?;
    let m = s.residual_samples.max(2);
    let worst = (0..m)
        .map(|j| 0.99 * j as f64 / (m - 1) as f64)
        .flat_map(|t| sol.ode_residual(t))
        .fold(0.0, f64::max);
    f.check(Verdict::below("ode_residual", worst, s.residual_tolerance));
    let report = verify_blowup(&sol, &s.times, &cfg.integrator)?;
    dir.table("blowup", || report.to_csv(), &report)?;
    f.metric("analytic_growth", report.analytic_growth);
    f.metric("compared_modes", report.compared_modes as f64);
    let max_diff = report.rows.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
    f.check(Verdict::below("galerkin_agreement", max_diff, s.agreement_tolerance));
    Ok(())
}

fn nonuniqueness(cfg: &ExperimentConfig, dir: &mut OutputDir, f: &mut Findings) -> CliResult<()> {
    let s = &cfg.nonuniqueness;
    let p = &cfg.params;
    if s.prefix_len < 5 {
        return Err(CliError::Config("prefix_len must be at least 5".into()));
    }
    let aux = shoot(p, s.prefix_len - 2)?;
    let sol = reverse_to_solution(&aux, p)?;
    let a = sol.a_vector()?;
    dir.write("stationary.csv", sol.to_csv().as_bytes())?;
    let resid = stationary_residual(p, &a)?;
    f.check(Verdict::below(
        "stationary_residual",
        resid.max_relative(),
        s.residual_tolerance,
    ));
    let icfg = IntegratorConfig {
        t_end: s.t_end,
        ..cfg.integrator.clone()
    };
    let traj = integrate(p, &a, &icfg, SystemKind::Viscous)?;
    write_trajectory(dir, "trajectory", &traj)?;
    let frozen = Trajectory::constant(*p, SystemKind::Viscous, a.clone(), s.t_end)?;
    let psi = psi_metric(&frozen, &traj, s.psi_modes.unwrap_or(s.prefix_len))?;
    dir.table("psi", || psi.to_csv(), &psi)?;
    let e0 = a.norm_sq();
    let loss = 1.0 - traj.last().norm_sq() / e0;
    f.metric("initial_energy", e0);
    f.metric("psi_final", psi.last());
    f.check(Verdict::above("galerkin_energy_loss", loss, s.min_energy_loss));
    f.check(Verdict::above("psi_final", psi.last(), s.min_psi));
    Ok(())
}
