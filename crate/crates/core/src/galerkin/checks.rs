//! Trajectory-level checks: energy balance, sign structure, lower bound,
//! envelope, and successive-truncation convergence.

use rayon::prelude::*;
use serde::Serialize;

use crate::bracket::refine;
use crate::error::{Error, Result};
use crate::model::{compute_constants, ModelParams, ShellVector};
use crate::quadrature;

use super::{integrate, IntegratorConfig, SystemKind, Trajectory};

/// Relative slack allowed when comparing data against a hypothesis bound
/// computed by the same closed form.
const HYPOTHESIS_SLACK: f64 = 1e-12;

/// Tolerance separating integrator error from a genuine violation.
pub fn check_tolerance(traj: &Trajectory) -> f64 {
    1e2 * traj.config().rel_tol * traj.initial().norm()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// D(t) = 2 Σ_n ∫_0^t λ^{2n} u_n².
    pub dissipation: Vec<f64>,
    /// |E(t) − E(0) + D(t)|
    pub identity_residual: Vec<f64>,
    /// E(0) − E(t) − D(t)
    pub slack: Vec<f64>,
    pub max_identity_residual: f64,
    pub min_slack: f64,
    pub dissipation_nondecreasing: bool,
}

pub fn energy_report(traj: &Trajectory) -> Result<EnergyReport> {
    if traj.kind() != SystemKind::Viscous {
        return Err(Error::UnsupportedKind(
            "energy report needs the viscous system".into(),
        ));
    }
    let params = traj.params();
    let rates: Vec<f64> = (1..=traj.n_modes())
        .map(|n| params.dissipation_rate(n))
        .collect();
    let e0 = traj.initial().norm_sq();
    let abs_tol = 1e-15 * e0.max(f64::MIN_POSITIVE);

    let per_segment: Vec<f64> = (0..traj.n_segments())
        .into_par_iter()
        .map(|i| {
            let seg = traj.segment(i);
            let mut buf = vec![0.0; rates.len()];
            let f = |t: f64| {
                seg.state_at(t, &mut buf);
                2.0 * buf.iter().zip(&rates).map(|(x, r)| r * x * x).sum::<f64>()
            };
            quadrature::integrate(f, seg.t0(), seg.t1(), abs_tol, 1e-12)
        })
        .collect();

    let times = traj.times().to_vec();
    let energy: Vec<f64> = traj.states().iter().map(ShellVector::norm_sq).collect();
    let mut dissipation = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    dissipation.push(0.0);
    for d in &per_segment {
        acc += d;
        dissipation.push(acc);
    }
    let slack: Vec<f64> = energy
        .iter()
        .zip(&dissipation)
        .map(|(e, d)| e0 - e - d)
        .collect();
    let identity_residual: Vec<f64> = slack.iter().map(|s| s.abs()).collect();
    Ok(EnergyReport {
        max_identity_residual: identity_residual.iter().copied().fold(0.0, f64::max),
        min_slack: slack.iter().copied().fold(f64::INFINITY, f64::min),
        dissipation_nondecreasing: dissipation.windows(2).all(|w| w[1] >= w[0]),
        times,
        energy,
        dissipation,
        identity_residual,
        slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum SignVerdict {
    /// a_n ≥ 0 and u_n never dropped below −tol.
    NonnegativePreserved,
    /// a_n < 0 and u_n stayed ≤ tol on the whole horizon.
    NoCrossing,
    /// a_n < 0, u_n crossed zero at `tau` and stayed ≥ −tol afterwards.
    CrossedOnce { tau: f64 },
    /// The sign pattern predicted for this mode failed.
    Violated { at: f64, value: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSign {
    pub mode: usize,
    pub initial: f64,
    pub verdict: SignVerdict,
    pub min_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub tol: f64,
    pub modes: Vec<ModeSign>,
    pub violations: usize,
}

impl SignReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn check_sign_structure(traj: &Trajectory) -> SignReport {
    let tol = check_tolerance(traj);
    let (times, states) = traj.samples();
    let mut modes = Vec::with_capacity(traj.n_modes());
    for n in 1..=traj.n_modes() {
        let i = n - 1;
        let a = traj.initial().mode(n);
        let min_value = states.iter().map(|s| s[i]).fold(f64::INFINITY, f64::min);
        let verdict = if a >= 0.0 {
            match states.iter().position(|s| s[i] < -tol) {
                None => SignVerdict::NonnegativePreserved,
                Some(j) => SignVerdict::Violated {
                    at: times[j],
                    value: states[j][i],
                },
            }
        } else {
            match states.iter().position(|s| s[i] > tol) {
                None => SignVerdict::NoCrossing,
                Some(j) => {
                    let k = (0..j)
                        .rev()
                        .find(|&k| states[k][i] <= 0.0)
                        .expect("initial value is negative");
                    let seg = traj.segment(traj.segment_index(times[k]));
                    let tau = if seg.t1() >= times[k + 1] {
                        refine(|t| seg.mode_at(n, t), times[k], times[k + 1])
                    } else {
                        refine(|t| traj.eval(t)[i], times[k], times[k + 1])
                    };
                    match (j..states.len()).find(|&m| states[m][i] < -tol) {
                        None => SignVerdict::CrossedOnce { tau },
                        Some(m) => SignVerdict::Violated {
                            at: times[m],
                            value: states[m][i],
                        },
                    }
                }
            }
        };
        modes.push(ModeSign {
            mode: n,
            initial: a,
            verdict,
            min_value,
        });
    }
    let violations = modes
        .iter()
        .filter(|m| matches!(m.verdict, SignVerdict::Violated { .. }))
        .count();
    SignReport {
        tol,
        modes,
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub eps2: f64,
    pub first_mode: usize,
    pub tol: f64,
    /// Samples with u_n < −eps2·λ^{(2−β)n} − tol for some n ≥ K.
    pub violations: usize,
    /// Samples where λ^{2n} + λ^{β(n+1)}u_{n+1} < λ^{2n}(1 − eps2·λ²), checked
    /// after division by λ^{2n}.
    pub positivity_violations: usize,
    /// min over samples and n ≥ K of (u_n + eps2·λ^{(2−β)n}) / λ^{(2−β)n}.
    pub min_normalized_margin: f64,
}

impl LowerBoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.positivity_violations == 0
    }
}

fn check_first_mode(k: usize, traj: &Trajectory) -> Result<()> {
    if k == 0 || k > traj.n_modes() {
        return Err(Error::ModeOutOfRange {
            mode: k,
            n_modes: traj.n_modes(),
        });
    }
    Ok(())
}

pub fn check_lower_bound(traj: &Trajectory, eps2: f64, k: usize) -> Result<LowerBoundReport> {
    check_first_mode(k, traj)?;
    let p = traj.params();
    let eps2_max = compute_constants(p).eps2_max;
    if !(eps2 > 0.0 && eps2 <= eps2_max * (1.0 + HYPOTHESIS_SLACK)) {
        return Err(Error::HypothesisViolated(format!(
            "eps2 = {eps2} must lie in (0, {eps2_max}]"
        )));
    }
    let n_modes = traj.n_modes();
    let profile: Vec<f64> = (1..=n_modes).map(|n| p.envelope_profile(n)).collect();
    for n in k..=n_modes {
        let a = traj.initial().mode(n);
        if a < -eps2 * profile[n - 1] * (1.0 + HYPOTHESIS_SLACK) {
            return Err(Error::HypothesisViolated(format!(
                "a_{n} = {a} is below -eps2*lambda^((2-beta)n) = {}",
                -eps2 * profile[n - 1]
            )));
        }
    }
    let tol = check_tolerance(traj);
    let floor = 1.0 - eps2 * p.lambda() * p.lambda();
    // λ^{β(n+1)−2n}, the factor multiplying u_{n+1} after division by λ^{2n}
    let weight: Vec<f64> = (1..=n_modes)
        .map(|n| p.coupling(n + 1) / p.dissipation_rate(n))
        .collect();
    let (_, states) = traj.samples();
    let mut violations = 0;
    let mut positivity_violations = 0;
    let mut min_margin = f64::INFINITY;
    for s in &states {
        for n in k..=n_modes {
            let u = s[n - 1];
            let bound = -eps2 * profile[n - 1];
            min_margin = min_margin.min((u - bound) / profile[n - 1]);
            if u < bound - tol {
                violations += 1;
            }
        }
        for n in k.saturating_sub(1).max(1)..n_modes {
            let lhs = 1.0 + weight[n - 1] * s[n];
            if lhs < floor - tol * weight[n - 1] {
                positivity_violations += 1;
            }
        }
    }
    Ok(LowerBoundReport {
        eps2,
        first_mode: k,
        tol,
        violations,
        positivity_violations,
        min_normalized_margin: min_margin,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub eps3: f64,
    pub first_mode: usize,
    pub tol: f64,
    /// Largest T′ ≤ t_end with |u_K| ≤ eps3·λ^{(2−β)K} + tol on [0, T′].
    pub t_prime: f64,
    /// Samples in [0, T′] with |u_n| > eps3·λ^{(2−β)n} + tol for some n ≥ K.
    pub violations: usize,
    /// max over samples in [0, T′] and n ≥ K of |u_n| / (eps3·λ^{(2−β)n}).
    pub max_ratio: f64,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn check_envelope(traj: &Trajectory, eps3: f64, k: usize) -> Result<EnvelopeReport> {
    check_first_mode(k, traj)?;
    let p = traj.params();
    let eps3_max = compute_constants(p).eps3_max;
    if !(eps3 > 0.0 && eps3 <= eps3_max * (1.0 + HYPOTHESIS_SLACK)) {
        return Err(Error::HypothesisViolated(format!(
            "eps3 = {eps3} must lie in (0, {eps3_max}]"
        )));
    }
    let n_modes = traj.n_modes();
    let bound: Vec<f64> = (1..=n_modes)
        .map(|n| eps3 * p.envelope_profile(n))
        .collect();
    for n in k..=n_modes {
        let a = traj.initial().mode(n);
        if a.abs() > bound[n - 1] * (1.0 + HYPOTHESIS_SLACK) {
            return Err(Error::HypothesisViolated(format!(
                "|a_{n}| = {} exceeds eps3*lambda^((2-beta)n) = {}",
                a.abs(),
                bound[n - 1]
            )));
        }
    }
    let tol = check_tolerance(traj);
    let (times, states) = traj.samples();
    let excess = |u: f64| u.abs() - bound[k - 1] - tol;
    let t_prime = match states.iter().position(|s| excess(s[k - 1]) > 0.0) {
        None => traj.t_end(),
        Some(j) => {
            // bisection on the dense output between the last good sample and j
            let (mut lo, mut hi) = (times[j - 1], times[j]);
            while hi - lo > 4.0 * f64::EPSILON * hi {
                let mid = 0.5 * (lo + hi);
                if excess(traj.eval(mid)[k - 1]) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lo
        }
    };
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for (t, s) in times.iter().zip(&states) {
        if *t > t_prime {
            break;
        }
        for n in k..=n_modes {
            let u = s[n - 1].abs();
            max_ratio = max_ratio.max(u / bound[n - 1]);
            if u > bound[n - 1] + tol {
                violations += 1;
            }
        }
    }
    Ok(EnvelopeReport {
        eps3,
        first_mode: k,
        tol,
        t_prime,
        violations,
        max_ratio,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_coarse: usize,
    pub n_fine: usize,
    /// max over the sampling grid and n ≤ n_coarse of |u_n^{coarse} − u_n^{fine}|.
    pub max_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].max_diff < w[0].max_diff)
    }
}

/// Compares successive truncations. `data(n)` must return the initial
/// vector for the n-mode system.
pub fn convergence_study<F>(
    params: &ModelParams,
    data: F,
    n_list: &[usize],
    cfg: &IntegratorConfig,
    kind: SystemKind,
) -> Result<ConvergenceTable>
where
    F: Fn(usize) -> Result<ShellVector> + Sync,
{
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("mode counts must be increasing".into()));
    }
    let trajs = n_list
        .par_iter()
        .map(|&n| {
            let a = data(n)?;
            if a.n_modes() != n {
                return Err(Error::InvalidState(format!(
                    "data generator returned {} modes for n = {n}",
                    a.n_modes()
                )));
            }
            integrate(params, &a, cfg, kind)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = ((cfg.dense_samples_per_unit_time as f64) * cfg.t_end).ceil() as usize;
    let grid: Vec<f64> = (0..=m).map(|j| cfg.t_end * j as f64 / m as f64).collect();
    let rows = trajs
        .windows(2)
        .map(|w| {
            let (c, f) = (&w[0], &w[1]);
            let max_diff = grid
                .iter()
                .map(|&t| {
                    let (uc, uf) = (c.eval(t), f.eval(t));
                    uc.iter()
                        .zip(&uf)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            ConvergenceRow {
                n_coarse: c.n_modes(),
                n_fine: f.n_modes(),
                max_diff,
            }
        })
        .collect();
    Ok(ConvergenceTable { rows })
}
