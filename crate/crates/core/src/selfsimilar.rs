//! Self-similar solutions u_n(t) = −b_n·ϰ^{−n}/(1 − t) of the inviscid
//! system, where b solves the stationary recurrence with u = ϰ².

use serde::Serialize;

use crate::csv::{fmt_f64, CsvBuf};
use crate::error::{Error, Result};
use crate::galerkin::{integrate, IntegratorConfig, SystemKind};
use crate::model::{ModelParams, ShellVector};
use crate::stationary::{reverse_with, shoot_u, StationarySolution};

/// Modes at the end of the prefix excluded from comparisons.
pub const BOUNDARY_MODES: usize = 3;
/// Simulations stop this far before the blow-up time.
pub const BLOWUP_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct SelfSimilarSolution {
    pub params: ModelParams,
    pub kappa: f64,
    pub b: Vec<f64>,
    /// u_n(0) = −b_n·ϰ^{−n}
    pub profile: Vec<f64>,
    pub blowup_time: f64,
}

impl SelfSimilarSolution {
    /// Wraps an arbitrary b (used for the trivial b ≡ 0 case and tests).
    pub fn from_b(params: ModelParams, b: Vec<f64>) -> Self {
        let kappa = params.kappa();
        let profile = b
            .iter()
            .enumerate()
            .map(|(i, bn)| -bn * kappa.powf(-((i + 1) as f64)))
            .collect();
        Self {
            params,
            kappa,
            b,
            profile,
            blowup_time: 1.0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.b.len()
    }

    /// Analytic state at time t < 1.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        self.profile.iter().map(|x| x / (1.0 - t)).collect()
    }

    pub fn initial_data(&self) -> Result<ShellVector> {
        ShellVector::new(self.profile.clone())
    }

    /// Per-mode relative residual of the inviscid equations on the analytic
    /// form, for modes 1..K−1 (the last mode needs b_{K+1}).
    pub fn ode_residual(&self, t: f64) -> Vec<f64> {
        let u = self.state_at(t);
        let k = self.kappa;
        let s = 1.0 / (1.0 - t);
        (0..u.len().saturating_sub(1))
            .map(|i| {
                let n = (i + 1) as f64;
                let prev = if i == 0 { 0.0 } else { u[i - 1] };
                let lhs = self.profile[i] * s * s;
                let feed = k.powf(n) * prev * prev;
                let drain = k.powf(n + 1.0) * u[i] * u[i + 1];
                let scale = lhs.abs().max(feed.abs()).max(drain.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (lhs - feed + drain).abs() / scale
                }
            })
            .collect()
    }
}

/// Shoots the supercritical recurrence with u = ϰ² and assembles the
/// profile. `prefix_len` is the number of modes (at least 5).
pub fn build_selfsimilar(params: &ModelParams, prefix_len: usize) -> Result<SelfSimilarSolution> {
    if prefix_len < 5 {
        return Err(Error::Precondition(format!(
            "prefix length must be at least 5, got {prefix_len}"
        )));
    }
    let u = params.kappa().powi(2);
    let aux = shoot_u(u, prefix_len - 2)?;
    let sol: StationarySolution = reverse_with(&aux, params, u)?;
    Ok(SelfSimilarSolution::from_b(*params, sol.b))
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupRow {
    pub t: f64,
    /// max over compared modes of |simulated − analytic|
    pub max_abs_diff: f64,
    /// max over compared modes of |simulated − analytic| / |analytic|
    pub max_rel_diff: f64,
    pub analytic_norm: f64,
    pub simulated_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub compared_modes: usize,
    pub rows: Vec<BlowupRow>,
    /// Analytic ℓ₂ norm at t = 1 − 10⁻³ divided by the norm at t = 0.
    pub analytic_growth: f64,
    /// (t, n, analytic, simulated) samples backing `rows`.
    pub samples: Vec<(f64, usize, f64, f64)>,
}

impl BlowupReport {
    pub fn to_csv(&self) -> String {
        let mut c = CsvBuf::new(&["t", "n", "analytic", "simulated", "abs_diff"]);
        for &(t, n, a, s) in &self.samples {
            c.row([fmt_f64(t), n.to_string(), fmt_f64(a), fmt_f64(s), fmt_f64((s - a).abs())]);
        }
        c.finish()
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates the inviscid Galerkin system from the profile and compares it
/// with the analytic form, excluding the last `BOUNDARY_MODES` modes.
pub fn verify_blowup(
    sol: &SelfSimilarSolution,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<BlowupReport> {
    if let Some(t) = times.iter().find(|&&t| !(0.0..1.0).contains(&t)) {
        return Err(Error::Precondition(format!("sample time {t} is outside [0, 1)")));
    }
    let compared = sol.n_modes().saturating_sub(BOUNDARY_MODES);
    let norm0 = l2(&sol.profile);
    let analytic_growth = if norm0 > 0.0 {
        l2(&sol.state_at(1.0 - BLOWUP_MARGIN)) / norm0
    } else {
        0.0
    };
    let sim_times: Vec<f64> = times.iter().map(|&t| t.min(1.0 - BLOWUP_MARGIN)).collect();
    let t_max = sim_times.iter().copied().fold(0.0, f64::max);
    let traj = if t_max > 0.0 {
        let cfg = IntegratorConfig {
            t_end: t_max,
            ..cfg.clone()
        };
        Some(integrate(&sol.params, &sol.initial_data()?, &cfg, SystemKind::Inviscid)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(times.len());
    let mut samples = Vec::new();
    for &t in &sim_times {
        let exact = sol.state_at(t);
        let sim = match &traj {
            Some(tr) => tr.eval(t),
            None => sol.profile.clone(),
        };
        let (mut abs_d, mut rel_d): (f64, f64) = (0.0, 0.0);
        for i in 0..compared {
            let d = (sim[i] - exact[i]).abs();
            abs_d = abs_d.max(d);
            if exact[i] != 0.0 {
                rel_d = rel_d.max(d / exact[i].abs());
            }
            samples.push((t, i + 1, exact[i], sim[i]));
        }
        rows.push(BlowupRow {
            t,
            max_abs_diff: abs_d,
            max_rel_diff: rel_d,
            analytic_norm: l2(&exact),
            simulated_norm: l2(&sim),
        });
    }
    Ok(BlowupReport {
        compared_modes: compared,
        rows,
        analytic_growth,
        samples,
    })
}
