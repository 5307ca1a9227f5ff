//! Galerkin truncations of the viscous and inviscid systems.
//!
//! The default scheme treats the diagonal linear term exactly (fourth-order
//! exponential time differencing) so that the λ^{2n} stiffness of the top
//! modes does not limit the step. A classical Dormand–Prince 5(4) pair is
//! provided for cross-validation on small truncations.

mod checks;
mod dopri;
mod etd;
mod system;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ShellVector};

pub use checks::{
    check_envelope, check_lower_bound, check_sign_structure, convergence_study, energy_report,
    ConvergenceRow, ConvergenceTable, EnergyReport, EnvelopeReport, LowerBoundReport, ModeSign,
    SignReport, SignVerdict,
};
pub use trajectory::{PreparedSegment, Trajectory};

/// Truncations above this size trigger a warning: λ^{2N} approaches the
/// limit of what double-precision step control can resolve.
pub const MODE_WARNING_THRESHOLD: usize = 24;

/// Integration halts once the ℓ₂ norm of the state exceeds this value.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    #[default]
    Viscous,
    Inviscid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exponential time differencing, linear part exact.
    #[default]
    Exponential,
    /// Dormand–Prince 5(4) on the full right-hand side.
    DormandPrince,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Density of the uniform sampling grid used by checkers, on top of the
    /// step times.
    pub dense_samples_per_unit_time: usize,
    pub scheme: Scheme,
    /// Bound on attempted steps (accepted plus rejected).
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
            dense_samples_per_unit_time: 200,
            scheme: Scheme::Exponential,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_end(t_end: f64) -> Self {
        Self {
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.t_end) {
            return Err(Error::Precondition(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(Error::Precondition("tolerances must be positive".into()));
        }
        if !positive(self.max_step) {
            return Err(Error::Precondition("max_step must be positive".into()));
        }
        if self.dense_samples_per_unit_time == 0 || self.max_steps == 0 {
            return Err(Error::Precondition(
                "dense_samples_per_unit_time and max_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Integrates the Galerkin system from `a` over `[0, cfg.t_end]`.
pub fn integrate(
    params: &ModelParams,
    a: &ShellVector,
    cfg: &IntegratorConfig,
    kind: SystemKind,
) -> Result<Trajectory> {
    cfg.validate()?;
    if a.n_modes() > MODE_WARNING_THRESHOLD {
        log::warn!(
            "{} modes exceeds the recommended cap of {}; step control may degrade",
            a.n_modes(),
            MODE_WARNING_THRESHOLD
        );
    }
    let sys = system::System::new(params, kind, a.n_modes());
    let raw = match cfg.scheme {
        Scheme::Exponential => etd::run(&sys, a.as_slice(), cfg)?,
        Scheme::DormandPrince => dopri::run(&sys, a.as_slice(), cfg)?,
    };
    Trajectory::from_run(*params, kind, cfg.clone(), sys, raw)
}

/// Output of a stepper before it is wrapped into a `Trajectory`.
pub(crate) struct RawRun {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dense: Vec<trajectory::SegmentData>,
}

/// Weighted RMS norm used for step control.
pub(crate) fn error_norm(err: &[f64], u0: &[f64], u1: &[f64], cfg: &IntegratorConfig) -> (f64, usize) {
    let mut sum = 0.0;
    let mut worst = (0.0, 0usize);
    for i in 0..err.len() {
        let sc = cfg.abs_tol + cfg.rel_tol * u0[i].abs().max(u1[i].abs());
        let r = err[i] / sc;
        let r2 = r * r;
        if r2 > worst.0 || r2.is_nan() {
            worst = (r2, i);
        }
        sum += r2;
    }
    ((sum / err.len() as f64).sqrt(), worst.1 + 1)
}

/// Step-size factor from a normalized error estimate.
pub(crate) fn step_factor(err: f64, after_reject: bool) -> f64 {
    let fac = if err.is_finite() {
        (0.9 * err.max(1e-30).powf(-0.2)).clamp(0.2, 5.0)
    } else {
        0.2
    };
    if after_reject {
        fac.min(1.0)
    } else {
        fac
    }
}

/// Starting step from the size of the explicitly treated part.
pub(crate) fn initial_step(u: &[f64], f: &[f64], cfg: &IntegratorConfig) -> f64 {
    let n = u.len() as f64;
    let (mut d0, mut d1) = (0.0, 0.0);
    for (x, fx) in u.iter().zip(f) {
        let sc = cfg.abs_tol + cfg.rel_tol * x.abs();
        d0 += (x / sc).powi(2);
        d1 += (fx / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(cfg.max_step).min(cfg.t_end)
}

pub(crate) fn too_small(h: f64, t: f64) -> bool {
    h < 1e-300 || h <= 8.0 * f64::EPSILON * t.abs()
}

pub(crate) fn l2(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = IntegratorConfig::default();
        assert_eq!(c.rel_tol, 1e-10);
        assert_eq!(c.abs_tol, 1e-12);
        assert_eq!(c.scheme, Scheme::Exponential);
        assert!(c.validate().is_ok());
        assert!(IntegratorConfig::with_t_end(0.0).validate().is_err());
        let bad = IntegratorConfig {
            rel_tol: -1.0,
            ..c
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_serde_fills_defaults() {
        let c: IntegratorConfig =
            serde_json::from_str(r#"{"t_end": 2.0, "scheme": "dormand-prince"}"#).unwrap();
        assert_eq!(c.t_end, 2.0);
        assert_eq!(c.scheme, Scheme::DormandPrince);
        assert_eq!(c.rel_tol, 1e-10);
    }

    #[test]
    fn step_factor_is_clamped() {
        assert_eq!(step_factor(0.0, false), 5.0);
        assert_eq!(step_factor(0.0, true), 1.0);
        assert_eq!(step_factor(1e9, false), 0.2);
        assert_eq!(step_factor(f64::NAN, false), 0.2);
    }
}
