use crate::model::{nonlinear_into, ModelParams};

use super::SystemKind;

/// Precomputed coefficients of one truncated system: du/dt = −L·u + N(u).
#[derive(Debug, Clone)]
pub(crate) struct System {
    /// Diagonal of L: λ^{2n} for the viscous system, zero otherwise.
    pub linear: Vec<f64>,
    /// coupling[k] = λ^{β(k+1)}, k = 0..=N.
    pub coupling: Vec<f64>,
}

impl System {
    pub fn new(params: &ModelParams, kind: SystemKind, n_modes: usize) -> Self {
        let linear = (1..=n_modes)
            .map(|n| match kind {
                SystemKind::Viscous => params.dissipation_rate(n),
                SystemKind::Inviscid => 0.0,
            })
            .collect();
        let coupling = (1..=n_modes + 1).map(|n| params.coupling(n)).collect();
        Self { linear, coupling }
    }

    pub fn nonlinear(&self, u: &[f64], out: &mut [f64]) {
        nonlinear_into(&self.coupling, u, out);
    }

    pub fn full(&self, u: &[f64], out: &mut [f64]) {
        self.nonlinear(u, out);
        for ((o, l), x) in out.iter_mut().zip(&self.linear).zip(u) {
            *o -= l * x;
        }
    }

    /// Time derivative of N along the flow, given N(u) already evaluated.
    pub fn nonlinear_dot(&self, u: &[f64], nu: &[f64], out: &mut [f64]) {
        let n = u.len();
        let du = |i: usize| nu[i] - self.linear[i] * u[i];
        for i in 0..n {
            let mut v = 0.0;
            if i > 0 {
                v += 2.0 * self.coupling[i] * u[i - 1] * du(i - 1);
            }
            if i + 1 < n {
                v -= self.coupling[i + 1] * (du(i) * u[i + 1] + u[i] * du(i + 1));
            }
            out[i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonlinear_dot_matches_finite_difference() {
        let p = ModelParams::new(1.5, 2.5).unwrap();
        let sys = System::new(&p, SystemKind::Viscous, 4);
        let u = [0.3, -0.2, 0.1, 0.05];
        let mut f = [0.0; 4];
        let mut nu = [0.0; 4];
        let mut nd = [0.0; 4];
        sys.full(&u, &mut f);
        sys.nonlinear(&u, &mut nu);
        sys.nonlinear_dot(&u, &nu, &mut nd);
        let h = 1e-6;
        let shift = |s: f64| -> [f64; 4] {
            let v: Vec<f64> = u.iter().zip(&f).map(|(x, d)| x + s * d).collect();
            let mut o = [0.0; 4];
            sys.nonlinear(&v, &mut o);
            o
        };
        let (plus, minus) = (shift(h), shift(-h));
        for i in 0..4 {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            assert!((fd - nd[i]).abs() < 1e-6 * (1.0 + nd[i].abs()), "mode {i}: {fd} vs {}", nd[i]);
        }
    }
}
