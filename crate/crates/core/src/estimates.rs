//! Level-set measures, the cube-integral bound, the blow-up functional and
//! the ψ distance between trajectories, all evaluated on dense output.

use rayon::prelude::*;
use serde::Serialize;

use crate::bracket::refine;
use crate::csv::{fmt_f64, CsvBuf};
use crate::error::{Error, Result};
use crate::galerkin::{PreparedSegment, SystemKind, Trajectory};
use crate::model::compute_constants;
use crate::quadrature;

/// Smallest number of samples per step used to locate level crossings.
const MIN_SAMPLES: usize = 4;
const MAX_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetStats {
    pub mode: usize,
    pub y: f64,
    /// |{t : u_n(t) ≥ y ≥ u_{n+2}(t)}|
    pub measure_a: f64,
    /// |{t : u_n(t) ≥ y}|
    pub measure_b: f64,
    pub bound_a: f64,
    pub bound_b: f64,
    /// Samples per step at which the measures settled.
    pub samples_per_step: usize,
}

impl LevelSetStats {
    pub fn within_bounds(&self) -> bool {
        self.measure_a <= self.bound_a && self.measure_b <= self.bound_b
    }
}

fn require_viscous(traj: &Trajectory, what: &str) -> Result<()> {
    if traj.kind() != SystemKind::Viscous {
        return Err(Error::UnsupportedKind(format!("{what} needs the viscous system")));
    }
    Ok(())
}

/// Data must be nonnegative from mode `n` on.
fn require_nonnegative_tail(traj: &Trajectory, n: usize) -> Result<()> {
    let a = traj.initial();
    if let Some(k) = (n..=a.n_modes()).find(|&k| a.mode(k) < 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "initial data must be nonnegative from mode {n} on; a_{k} = {}",
            a.mode(k)
        )));
    }
    Ok(())
}

/// Measure of {t : g(t) ≥ 0} over all segments with `m` samples per step.
fn superlevel_measure<G>(segs: &[PreparedSegment<'_>], g: &G, m: usize) -> f64
where
    G: Fn(&PreparedSegment<'_>, f64) -> f64,
{
    let mut total = 0.0;
    for seg in segs {
        let (t0, t1) = (seg.t0(), seg.t1());
        let dt = (t1 - t0) / m as f64;
        let mut left_t = t0;
        let mut left = g(seg, t0);
        for j in 1..=m {
            let right_t = if j == m { t1 } else { t0 + dt * j as f64 };
            let right = g(seg, right_t);
            match (left >= 0.0, right >= 0.0) {
                (true, true) => total += right_t - left_t,
                (false, false) => {}
                (true, false) => total += refine(|t| g(seg, t), left_t, right_t) - left_t,
                (false, true) => total += right_t - refine(|t| g(seg, t), left_t, right_t),
            }
            left_t = right_t;
            left = right;
        }
    }
    total
}

/// Doubles the sampling density until the measure moves by less than
/// 1e-8·t_end.
fn settled_measure<G>(segs: &[PreparedSegment<'_>], g: G, t_end: f64) -> (f64, usize)
where
    G: Fn(&PreparedSegment<'_>, f64) -> f64,
{
    let mut m = MIN_SAMPLES;
    let mut prev = superlevel_measure(segs, &g, m);
    while m < MAX_SAMPLES {
        m *= 2;
        let next = superlevel_measure(segs, &g, m);
        let moved = (next - prev).abs();
        prev = next;
        if moved < 1e-8 * t_end {
            break;
        }
    }
    (prev, m)
}

fn level_set_on(traj: &Trajectory, segs: &[PreparedSegment<'_>], n: usize, y: f64) -> LevelSetStats {
    let p = traj.params();
    let c = compute_constants(p);
    let norm_sq = traj.initial().norm_sq();
    let denom = y.powi(3) * p.coupling(n) + y * y * p.dissipation_rate(n);
    let (measure_b, mb) = settled_measure(segs, |s, t| s.mode_at(n, t) - y, traj.t_end());
    let (measure_a, ma) = settled_measure(
        segs,
        |s, t| (s.mode_at(n, t) - y).min(y - s.mode_at(n + 2, t)),
        traj.t_end(),
    );
    LevelSetStats {
        mode: n,
        y,
        measure_a,
        measure_b,
        bound_a: c.c2 * norm_sq / denom,
        bound_b: c.c3 * norm_sq / denom,
        samples_per_step: ma.max(mb),
    }
}

fn validate_level(traj: &Trajectory, n: usize, y: f64) -> Result<()> {
    require_viscous(traj, "level-set measurement")?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Precondition(format!("level y must be positive, got {y}")));
    }
    if n == 0 || n + 2 > traj.n_modes() {
        return Err(Error::ModeOutOfRange {
            mode: n,
            n_modes: traj.n_modes().saturating_sub(2),
        });
    }
    require_nonnegative_tail(traj, n)
}

/// Measures of A_n(y) = {u_n ≥ y ≥ u_{n+2}} and B_n(y) = {u_n ≥ y} on
/// [0, t_end], with their closed-form bounds.
pub fn level_set_measure(traj: &Trajectory, n: usize, y: f64) -> Result<LevelSetStats> {
    validate_level(traj, n, y)?;
    let segs: Vec<_> = (0..traj.n_segments()).map(|i| traj.segment(i)).collect();
    Ok(level_set_on(traj, &segs, n, y))
}

/// `level_set_measure` over a grid of modes and levels, sharing the
/// prepared interpolants. Rows are ordered by mode, then level.
pub fn level_set_grid(traj: &Trajectory, modes: &[usize], levels: &[f64]) -> Result<Vec<LevelSetStats>> {
    for &n in modes {
        for &y in levels {
            validate_level(traj, n, y)?;
        }
    }
    let segs: Vec<_> = (0..traj.n_segments()).map(|i| traj.segment(i)).collect();
    let pairs: Vec<(usize, f64)> = modes
        .iter()
        .flat_map(|&n| levels.iter().map(move |&y| (n, y)))
        .collect();
    Ok(pairs
        .par_iter()
        .map(|&(n, y)| level_set_on(traj, &segs, n, y))
        .collect())
}

pub fn level_sets_to_csv(rows: &[LevelSetStats]) -> String {
    let mut c = CsvBuf::new(&["n", "y", "measure_a", "measure_b", "bound_a", "bound_b"]);
    for r in rows {
        c.float_row(
            Some(&r.mode.to_string()),
            &[r.y, r.measure_a, r.measure_b, r.bound_a, r.bound_b],
        );
    }
    c.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeIntegralReport {
    pub mode: usize,
    /// ∫_0^{t_end} u_n³ dt
    pub integral_value: f64,
    /// Upper bound for ∫_{t_end}^∞ u_n³ dt.
    pub tail_bound: f64,
    /// 3c₃‖a‖²λ^{−βn}·log(λ^{(β−2)n}‖a‖ + 1)
    pub closed_form_bound: f64,
}

impl CubeIntegralReport {
    pub fn holds(&self) -> bool {
        self.integral_value + self.tail_bound <= self.closed_form_bound
    }
}

/// Integral of u_n³ over the horizon plus a bound for the remainder.
///
/// The tail uses u_n ≤ ‖a‖ and the energy budget past t_end:
/// ∫_{t_end}^∞ u_n³ ≤ ‖a‖·λ^{−2n}·∫_{t_end}^∞ λ^{2n}u_n² ≤ ‖a‖·λ^{−2n}·E(t_end)/2,
/// and the reported bound drops the factor ½.
pub fn cube_integral(traj: &Trajectory, n: usize) -> Result<CubeIntegralReport> {
    require_viscous(traj, "cube integral")?;
    if n == 0 || n > traj.n_modes() {
        return Err(Error::ModeOutOfRange {
            mode: n,
            n_modes: traj.n_modes(),
        });
    }
    require_nonnegative_tail(traj, n)?;
    let p = traj.params();
    let norm = traj.initial().norm();
    let integral_value: f64 = (0..traj.n_segments())
        .into_par_iter()
        .map(|i| {
            let seg = traj.segment(i);
            quadrature::integrate(|t| seg.mode_at(n, t).powi(3), seg.t0(), seg.t1(), 1e-18, 1e-12)
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let tail_bound = norm * traj.last().norm_sq() / p.dissipation_rate(n);
    let c3 = compute_constants(p).c3;
    let closed_form_bound = 3.0 * c3 * norm * norm / p.coupling(n)
        * (p.lambda().powf((p.beta() - 2.0) * n as f64) * norm).ln_1p();
    Ok(CubeIntegralReport {
        mode: n,
        integral_value,
        tail_bound,
        closed_form_bound,
    })
}

pub fn cube_integrals_to_csv(rows: &[CubeIntegralReport]) -> String {
    let mut c = CsvBuf::new(&["n", "integral", "tail_bound", "bound"]);
    for r in rows {
        c.float_row(
            Some(&r.mode.to_string()),
            &[r.integral_value, r.tail_bound, r.closed_form_bound],
        );
    }
    c.finish()
}

/// ∫_0^{t_end} (Σ_n λ^{2(ε+1/3)βn} u_n²)^{3/2} dt, a blow-up diagnostic.
pub fn blowup_functional(traj: &Trajectory, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    let p = traj.params();
    let w: Vec<f64> = (1..=traj.n_modes())
        .map(|n| p.lambda().powf(2.0 * (eps + 1.0 / 3.0) * p.beta() * n as f64))
        .collect();
    let parts: Vec<f64> = (0..traj.n_segments())
        .into_par_iter()
        .map(|i| {
            let seg = traj.segment(i);
            let mut buf = vec![0.0; w.len()];
            let f = |t: f64| {
                seg.state_at(t, &mut buf);
                buf.iter()
                    .zip(&w)
                    .map(|(x, w)| w * x * x)
                    .sum::<f64>()
                    .powf(1.5)
            };
            quadrature::integrate(f, seg.t0(), seg.t1(), 0.0, 1e-10)
        })
        .collect();
    Ok(parts.iter().sum())
}

/// ψ_N(t) = Σ_{n ≤ N} 2^{−n}(u_n − v_n)² on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct PsiSeries {
    pub n_cap: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PsiSeries {
    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut c = CsvBuf::new(&["t", "psi"]);
        for (t, v) in self.times.iter().zip(&self.values) {
            c.row([fmt_f64(*t), fmt_f64(*v)]);
        }
        c.finish()
    }
}

/// ψ at a single time; modes beyond a truncation count as zero.
pub fn psi_at(a: &Trajectory, b: &Trajectory, n_cap: usize, t: f64) -> f64 {
    let (ua, ub) = (a.eval(t), b.eval(t));
    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let mut w = 1.0;
    let mut s = 0.0;
    for k in 0..n_cap {
        w *= 0.5;
        let d = get(&ua, k) - get(&ub, k);
        s += w * d * d;
    }
    s
}

pub fn psi_metric(a: &Trajectory, b: &Trajectory, n_cap: usize) -> Result<PsiSeries> {
    a.ensure_comparable(b)?;
    if n_cap == 0 {
        return Err(Error::Precondition("n_cap must be positive".into()));
    }
    let t_end = a.t_end();
    let m = ((a.config().dense_samples_per_unit_time as f64) * t_end).ceil().max(1.0) as usize;
    let times: Vec<f64> = (0..=m).map(|j| t_end * j as f64 / m as f64).collect();
    let values = times.par_iter().map(|&t| psi_at(a, b, n_cap, t)).collect();
    Ok(PsiSeries {
        n_cap,
        times,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::{integrate, IntegratorConfig};
    use crate::model::{ModelParams, ShellVector};
    use approx::assert_relative_eq;

    fn single_mode(t_end: f64) -> Trajectory {
        let p = ModelParams::new(2.0, 2.5).unwrap();
        let a = ShellVector::new(vec![1.0]).unwrap();
        integrate(&p, &a, &IntegratorConfig::with_t_end(t_end), SystemKind::Viscous).unwrap()
    }

    #[test]
    fn cube_integral_of_decaying_mode() {
        let r = cube_integral(&single_mode(3.0), 1).unwrap();
        assert_relative_eq!(r.integral_value, 1.0 / 12.0, max_relative = 1e-9);
        assert!(r.integral_value + r.tail_bound >= 1.0 / 12.0);
        assert!(r.holds());
    }

    /// First time u_1 drops below `y`, from a fixed-step RK4 run.
    fn rk4_first_crossing(p: &ModelParams, a: &[f64], y: f64) -> f64 {
        let rhs = |u: &[f64]| -> Vec<f64> {
            crate::model::rhs_viscous(p, &ShellVector::new(u.to_vec()).unwrap())
                .unwrap()
                .into_vec()
        };
        let h = 1e-5;
        let mut u = a.to_vec();
        let mut t = 0.0;
        loop {
            let k1 = rhs(&u);
            let s = |k: &[f64], c: f64| -> Vec<f64> { u.iter().zip(k).map(|(x, d)| x + c * d).collect() };
            let k2 = rhs(&s(&k1, h / 2.0));
            let k3 = rhs(&s(&k2, h / 2.0));
            let k4 = rhs(&s(&k3, h));
            let next: Vec<f64> = (0..u.len())
                .map(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect();
            if next[0] < y {
                return t + h * (u[0] - y) / (u[0] - next[0]);
            }
            u = next;
            t += h;
        }
    }

    #[test]
    fn superlevel_measure_matches_fixed_step_oracle() {
        let p = ModelParams::new(2.0, 2.5).unwrap();
        let a = ShellVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let traj = integrate(&p, &a, &IntegratorConfig::with_t_end(1.0), SystemKind::Viscous).unwrap();
        let s = level_set_measure(&traj, 1, 0.5).unwrap();
        // u_1 decreases monotonically, so the superlevel set is an interval from 0
        let oracle = rk4_first_crossing(&p, a.as_slice(), 0.5);
        assert_relative_eq!(s.measure_b, oracle, max_relative = 1e-6);
        assert!(s.measure_a <= s.measure_b);
        assert!(s.within_bounds());
        let none = level_set_measure(&traj, 1, 1.5).unwrap();
        assert_eq!(none.measure_b, 0.0);
    }

    #[test]
    fn level_set_preconditions() {
        let traj = single_mode(1.0);
        assert!(matches!(level_set_measure(&traj, 1, 0.5), Err(Error::ModeOutOfRange { .. })));
        let p = ModelParams::new(2.0, 2.5).unwrap();
        let a = ShellVector::new(vec![0.5, -0.1, 0.2]).unwrap();
        let t = integrate(&p, &a, &IntegratorConfig::with_t_end(0.5), SystemKind::Viscous).unwrap();
        assert!(matches!(level_set_measure(&t, 1, 0.1), Err(Error::HypothesisViolated(_))));
        assert!(matches!(level_set_measure(&t, 1, -0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn psi_of_identical_trajectories_vanishes() {
        let t = single_mode(1.0);
        let s = psi_metric(&t, &t, 4).unwrap();
        assert_eq!(s.max(), 0.0);
        assert!(blowup_functional(&t, 0.1).unwrap() > 0.0);
        assert!(blowup_functional(&t, 0.0).is_err());
    }
}
