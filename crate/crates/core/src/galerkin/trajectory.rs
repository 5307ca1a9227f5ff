use serde::Serialize;

use crate::csv::CsvBuf;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ShellVector};
use crate::phi::phi;

use super::dopri::dense_value;
use super::etd::{companion, hermite};
use super::system::System;
use super::{IntegratorConfig, RawRun, Scheme, SystemKind};

/// Per-step data needed to rebuild the local interpolant.
#[derive(Debug, Clone)]
pub(crate) enum SegmentData {
    /// Mismatch between the Runge–Kutta endpoint and the Hermite companion.
    Exponential { mismatch: Vec<f64> },
    /// Dormand–Prince continuous-extension coefficients.
    Polynomial { c2: Vec<f64>, c3: Vec<f64>, c4: Vec<f64> },
    /// The state is held constant over the segment.
    Hold,
}

/// Time-ordered Galerkin states with piecewise dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: ModelParams,
    kind: SystemKind,
    config: IntegratorConfig,
    times: Vec<f64>,
    states: Vec<ShellVector>,
    dense: Vec<SegmentData>,
    sys: System,
}

impl Trajectory {
    pub(crate) fn from_run(
        params: ModelParams,
        kind: SystemKind,
        config: IntegratorConfig,
        sys: System,
        raw: RawRun,
    ) -> Result<Self> {
        let states = raw
            .states
            .into_iter()
            .map(ShellVector::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            kind,
            config,
            times: raw.times,
            states,
            dense: raw.dense,
            sys,
        })
    }

    /// A time-independent trajectory equal to `state` on `[0, t_end]`.
    pub fn constant(
        params: ModelParams,
        kind: SystemKind,
        state: ShellVector,
        t_end: f64,
    ) -> Result<Self> {
        let config = IntegratorConfig::with_t_end(t_end);
        config.validate()?;
        let sys = System::new(&params, kind, state.n_modes());
        Ok(Self {
            params,
            kind,
            config,
            times: vec![0.0, t_end],
            states: vec![state.clone(), state],
            dense: vec![SegmentData::Hold],
            sys,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn scheme(&self) -> Scheme {
        self.config.scheme
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[ShellVector] {
        &self.states
    }

    pub fn n_modes(&self) -> usize {
        self.states[0].n_modes()
    }

    pub fn n_segments(&self) -> usize {
        self.dense.len()
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn initial(&self) -> &ShellVector {
        &self.states[0]
    }

    pub fn last(&self) -> &ShellVector {
        &self.states[self.states.len() - 1]
    }

    /// Rebuilds the interpolant of step `i` (between `times[i]` and `times[i+1]`).
    pub fn segment(&self, i: usize) -> PreparedSegment<'_> {
        let t0 = self.times[i];
        let h = self.times[i + 1] - t0;
        let u0 = self.states[i].as_slice();
        let u1 = self.states[i + 1].as_slice();
        let local = match &self.dense[i] {
            SegmentData::Hold => Local::Hold,
            SegmentData::Polynomial { c2, c3, c4 } => Local::Polynomial { u1, c2, c3, c4 },
            SegmentData::Exponential { mismatch } => {
                let n = u0.len();
                let mut n0 = vec![0.0; n];
                let mut nd0 = vec![0.0; n];
                let mut n1 = vec![0.0; n];
                let mut nd1 = vec![0.0; n];
                self.sys.nonlinear(u0, &mut n0);
                self.sys.nonlinear_dot(u0, &n0, &mut nd0);
                self.sys.nonlinear(u1, &mut n1);
                self.sys.nonlinear_dot(u1, &n1, &mut nd1);
                let z: Vec<f64> = self.sys.linear.iter().map(|l| -l * h).collect();
                let phi1: Vec<f64> = z.iter().map(|&z| phi(z)[1]).collect();
                let q = (0..n).map(|k| hermite(n0[k], nd0[k], n1[k], nd1[k], h)).collect();
                Local::Exponential {
                    z,
                    phi1,
                    q,
                    mismatch,
                }
            }
        };
        PreparedSegment { t0, h, u0, local }
    }

    /// Index of the segment containing `t` (clamped to the time span).
    pub fn segment_index(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(self.n_segments() - 1)
    }

    /// Dense-output state at time `t ∈ [0, t_end]`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let seg = self.segment(self.segment_index(t));
        let mut out = vec![0.0; self.n_modes()];
        seg.state_at(t, &mut out);
        out
    }

    /// Step times merged with a uniform grid of
    /// `dense_samples_per_unit_time` points per unit time.
    pub fn sample_times(&self) -> Vec<f64> {
        let t_end = self.t_end();
        let m = ((self.config.dense_samples_per_unit_time as f64) * t_end).ceil().max(1.0) as usize;
        let mut out = Vec::with_capacity(self.times.len() + m);
        let mut j = 1;
        for w in self.times.windows(2) {
            out.push(w[0]);
            while j < m {
                let g = t_end * j as f64 / m as f64;
                if g >= w[1] {
                    break;
                }
                if g > w[0] {
                    out.push(g);
                }
                j += 1;
            }
        }
        out.push(t_end);
        out
    }

    /// States on `sample_times()`.
    pub fn samples(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let times = self.sample_times();
        let mut states = Vec::with_capacity(times.len());
        let mut seg_idx = usize::MAX;
        let mut seg: Option<PreparedSegment<'_>> = None;
        for &t in &times {
            let k = self.segment_index(t);
            if k != seg_idx {
                seg = Some(self.segment(k));
                seg_idx = k;
            }
            let mut v = vec![0.0; self.n_modes()];
            seg.as_ref().expect("segment prepared").state_at(t, &mut v);
            states.push(v);
        }
        (times, states)
    }

    /// CSV with columns t, u_1, …, u_N at the step times.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_modes()).map(|n| format!("u_{n}")));
        let mut c = CsvBuf::with_header(header);
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = Vec::with_capacity(s.n_modes() + 1);
            row.push(*t);
            row.extend_from_slice(s.as_slice());
            c.float_row(None, &row);
        }
        c.finish()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            params: &'a ModelParams,
            kind: SystemKind,
            config: &'a IntegratorConfig,
            n_modes: usize,
            times: &'a [f64],
            states: &'a [ShellVector],
        }
        Ok(serde_json::to_string_pretty(&Doc {
            params: &self.params,
            kind: self.kind,
            config: &self.config,
            n_modes: self.n_modes(),
            times: &self.times,
            states: &self.states,
        })?)
    }

    /// Errors unless both trajectories share parameters, time span and
    /// initial data on their common modes.
    pub fn ensure_comparable(&self, other: &Trajectory) -> Result<()> {
        if self.params != other.params {
            return Err(Error::Mismatch("parameters differ".into()));
        }
        if (self.t_end() - other.t_end()).abs() > 1e-12 * self.t_end() {
            return Err(Error::Mismatch(format!(
                "time spans differ ({} vs {})",
                self.t_end(),
                other.t_end()
            )));
        }
        let n = self.n_modes().min(other.n_modes());
        let (a, b) = (self.initial(), other.initial());
        for k in 1..=n {
            let (x, y) = (a.mode(k), b.mode(k));
            if (x - y).abs() > 1e-14 * x.abs().max(y.abs()) {
                return Err(Error::Mismatch(format!("initial data differ at mode {k}")));
            }
        }
        Ok(())
    }
}

enum Local<'a> {
    Exponential {
        z: Vec<f64>,
        phi1: Vec<f64>,
        q: Vec<[f64; 4]>,
        mismatch: &'a [f64],
    },
    Polynomial {
        u1: &'a [f64],
        c2: &'a [f64],
        c3: &'a [f64],
        c4: &'a [f64],
    },
    Hold,
}

/// Dense-output evaluator for one step.
pub struct PreparedSegment<'a> {
    t0: f64,
    h: f64,
    u0: &'a [f64],
    local: Local<'a>,
}

impl PreparedSegment<'_> {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Value of mode `n` (1-based) at time `t` within the segment.
    pub fn mode_at(&self, n: usize, t: f64) -> f64 {
        let i = n - 1;
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        match &self.local {
            Local::Hold => self.u0[i],
            Local::Polynomial { u1, c2, c3, c4 } => {
                dense_value(self.u0[i], u1[i], c2[i], c3[i], c4[i], theta)
            }
            Local::Exponential {
                z,
                phi1,
                q,
                mismatch,
            } => {
                let base = companion(self.u0[i], z[i], self.h, theta, &q[i]);
                base + mismatch[i] * theta * phi(z[i] * theta)[1] / phi1[i]
            }
        }
    }

    pub fn state_at(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.mode_at(i + 1, t);
        }
    }
}
