//! Fourth-order exponential time differencing (Cox–Matthews) with an
//! exponential-Hermite companion for error control and dense output.
//!
//! The companion integrates the cubic Hermite interpolant of N through the
//! step endpoints exactly against the linear propagator. Its mismatch with
//! the Runge–Kutta solution is O(h⁵) and serves as the local error estimate.

use crate::error::{Error, Result};
use crate::phi::phi;

use super::system::System;
use super::trajectory::SegmentData;
use super::{error_norm, initial_step, l2, step_factor, too_small, RawRun, BLOWUP_THRESHOLD};
use crate::galerkin::IntegratorConfig;

/// Coefficients of the cubic Hermite interpolant of N in θ ∈ [0, 1].
pub(crate) fn hermite(n0: f64, nd0: f64, n1: f64, nd1: f64, h: f64) -> [f64; 4] {
    let (s0, s1) = (h * nd0, h * nd1);
    [n0, s0, 3.0 * (n1 - n0) - 2.0 * s0 - s1, 2.0 * (n0 - n1) + s0 + s1]
}

/// Companion value at fraction θ of a step of size h, for a mode with
/// z = −L·h.
pub(crate) fn companion(u0: f64, z: f64, h: f64, theta: f64, q: &[f64; 4]) -> f64 {
    let p = phi(z * theta);
    p[0] * u0
        + theta
            * h
            * (p[1] * q[0]
                + theta * (p[2] * q[1] + theta * (2.0 * p[3] * q[2] + 6.0 * theta * p[4] * q[3])))
}

struct Work {
    nu: Vec<f64>,
    ndot: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    na: Vec<f64>,
    nb: Vec<f64>,
    nc: Vec<f64>,
    u1: Vec<f64>,
    n1: Vec<f64>,
    ndot1: Vec<f64>,
    mismatch: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        Self {
            nu: z(),
            ndot: z(),
            a: z(),
            b: z(),
            c: z(),
            na: z(),
            nb: z(),
            nc: z(),
            u1: z(),
            n1: z(),
            ndot1: z(),
            mismatch: z(),
        }
    }
}

/// One trial step from `u` (with N(u), Ṅ(u) in `w`); fills `w.u1`, `w.n1`,
/// `w.ndot1` and `w.mismatch`.
#[allow(clippy::needless_range_loop)]
fn trial(sys: &System, u: &[f64], h: f64, w: &mut Work) {
    let n = u.len();
    let mut half = vec![[0.0f64; 2]; n];
    for i in 0..n {
        let z2 = -sys.linear[i] * h * 0.5;
        let p = phi(z2);
        half[i] = [p[0], 0.5 * h * p[1]];
        w.a[i] = p[0] * u[i] + half[i][1] * w.nu[i];
    }
    sys.nonlinear(&w.a, &mut w.na);
    for i in 0..n {
        w.b[i] = half[i][0] * u[i] + half[i][1] * w.na[i];
    }
    sys.nonlinear(&w.b, &mut w.nb);
    for i in 0..n {
        w.c[i] = half[i][0] * w.a[i] + half[i][1] * (2.0 * w.nb[i] - w.nu[i]);
    }
    sys.nonlinear(&w.c, &mut w.nc);
    let mut full = vec![[0.0f64; 5]; n];
    for i in 0..n {
        let p = phi(-sys.linear[i] * h);
        full[i] = p;
        let f1 = p[1] - 3.0 * p[2] + 4.0 * p[3];
        let f2 = 2.0 * (p[2] - 2.0 * p[3]);
        let f3 = 4.0 * p[3] - p[2];
        w.u1[i] = p[0] * u[i] + h * (f1 * w.nu[i] + f2 * (w.na[i] + w.nb[i]) + f3 * w.nc[i]);
    }
    sys.nonlinear(&w.u1, &mut w.n1);
    sys.nonlinear_dot(&w.u1, &w.n1, &mut w.ndot1);
    for i in 0..n {
        let q = hermite(w.nu[i], w.ndot[i], w.n1[i], w.ndot1[i], h);
        let p = full[i];
        let end = p[0] * u[i] + h * (p[1] * q[0] + p[2] * q[1] + 2.0 * p[3] * q[2] + 6.0 * p[4] * q[3]);
        w.mismatch[i] = w.u1[i] - end;
    }
}

pub(crate) fn run(sys: &System, a: &[f64], cfg: &IntegratorConfig) -> Result<RawRun> {
    let n = a.len();
    let mut w = Work::new(n);
    let mut u = a.to_vec();
    sys.nonlinear(&u, &mut w.nu);
    sys.nonlinear_dot(&u, &w.nu, &mut w.ndot);

    let mut t = 0.0;
    let mut h = initial_step(&u, &w.nu, cfg);
    let mut out = RawRun {
        times: vec![0.0],
        states: vec![u.clone()],
        dense: Vec::new(),
    };
    let mut attempts = 0usize;
    let mut rejected_last = false;

    while t < cfg.t_end {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(Error::StepLimit {
                t,
                steps: cfg.max_steps,
            });
        }
        h = h.min(cfg.max_step);
        let last = t + h >= cfg.t_end;
        if last {
            h = cfg.t_end - t;
        }
        trial(sys, &u, h, &mut w);
        let (err, worst) = error_norm(&w.mismatch, &u, &w.u1, cfg);
        let finite = w.u1.iter().all(|x| x.is_finite());
        if finite && err <= 1.0 {
            t = if last { cfg.t_end } else { t + h };
            if l2(&w.u1) > BLOWUP_THRESHOLD {
                return Err(Error::BlowUp {
                    t_last: out.times[out.times.len() - 1],
                    threshold: BLOWUP_THRESHOLD,
                });
            }
            std::mem::swap(&mut u, &mut w.u1);
            std::mem::swap(&mut w.nu, &mut w.n1);
            std::mem::swap(&mut w.ndot, &mut w.ndot1);
            out.times.push(t);
            out.states.push(u.clone());
            out.dense.push(SegmentData::Exponential {
                mismatch: w.mismatch.clone(),
            });
            h *= step_factor(err, rejected_last);
            rejected_last = false;
        } else {
            h *= step_factor(if finite { err } else { f64::INFINITY }, false).min(0.9);
            rejected_last = true;
            if too_small(h, t) {
                return Err(Error::StiffnessFailure { t, step: h, mode: worst });
            }
        }
    }
    log::debug!(
        "exponential scheme: {} steps, {} attempts",
        out.times.len() - 1,
        attempts
    );
    Ok(out)
}
