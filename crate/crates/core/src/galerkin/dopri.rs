//! Dormand–Prince 5(4) with FSAL and Hairer's continuous extension.

use crate::error::{Error, Result};

use super::system::System;
use super::trajectory::SegmentData;
use super::{error_norm, initial_step, l2, step_factor, too_small, RawRun, BLOWUP_THRESHOLD};
use crate::galerkin::IntegratorConfig;

const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension: y(θ) = u0 + θ(Δ + (1−θ)(c2 + θ(c3 + (1−θ)c4))).
pub(crate) fn dense_value(u0: f64, u1: f64, c2: f64, c3: f64, c4: f64, theta: f64) -> f64 {
    let s = 1.0 - theta;
    u0 + theta * ((u1 - u0) + s * (c2 + theta * (c3 + s * c4)))
}

pub(crate) fn run(sys: &System, a: &[f64], cfg: &IntegratorConfig) -> Result<RawRun> {
    let n = a.len();
    let z = || vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (z(), z(), z(), z(), z(), z(), z());
    let (mut y, mut u1, mut err) = (z(), z(), z());
    let mut u = a.to_vec();
    sys.full(&u, &mut k1);

    let mut t = 0.0;
    let mut h = initial_step(&u, &k1, cfg);
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
        for i in 0..n {
            y[i] = u[i] + h * A21 * k1[i];
        }
        sys.full(&y, &mut k2);
        for i in 0..n {
            y[i] = u[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.full(&y, &mut k3);
        for i in 0..n {
            y[i] = u[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.full(&y, &mut k4);
        for i in 0..n {
            y[i] = u[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.full(&y, &mut k5);
        for i in 0..n {
            y[i] = u[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.full(&y, &mut k6);
        for i in 0..n {
            u1[i] = u[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.full(&u1, &mut k7);
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let (e, worst) = error_norm(&err, &u, &u1, cfg);
        let finite = u1.iter().all(|x| x.is_finite());
        if finite && e <= 1.0 {
            let mut c2 = z();
            let mut c3 = z();
            let mut c4 = z();
            for i in 0..n {
                let d = u1[i] - u[i];
                c2[i] = h * k1[i] - d;
                c3[i] = d - h * k7[i] - c2[i];
                c4[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            t = if last { cfg.t_end } else { t + h };
            if l2(&u1) > BLOWUP_THRESHOLD {
                return Err(Error::BlowUp {
                    t_last: out.times[out.times.len() - 1],
                    threshold: BLOWUP_THRESHOLD,
                });
            }
            std::mem::swap(&mut u, &mut u1);
            std::mem::swap(&mut k1, &mut k7);
            out.times.push(t);
            out.states.push(u.clone());
            out.dense.push(SegmentData::Polynomial { c2, c3, c4 });
            h *= step_factor(e, rejected_last);
            rejected_last = false;
        } else {
            h *= step_factor(if finite { e } else { f64::INFINITY }, false).min(0.9);
            rejected_last = true;
            if too_small(h, t) {
                return Err(Error::StiffnessFailure { t, step: h, mode: worst });
            }
        }
    }
    log::debug!("dormand-prince: {} steps, {} attempts", out.times.len() - 1, attempts);
    Ok(out)
}
