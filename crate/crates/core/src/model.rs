//! Parameters, shell states, right-hand sides and the closed-form constants
//! attached to the dyadic model
//!
//! ```text
//! du_n/dt = -λ^{2n} u_n + λ^{βn} u_{n-1}^2 - λ^{β(n+1)} u_n u_{n+1},   u_0 = 0.
//! ```
//!
//! Mode numbers in the public API are 1-based; `ShellVector` stores mode `n`
//! at slice index `n - 1`. Finite truncations use the Galerkin closure
//! `u_{N+1} = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    lambda: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    lambda: f64,
    beta: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.lambda, raw.beta)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            lambda: p.lambda,
            beta: p.beta,
        }
    }
}

impl ModelParams {
    pub fn new(lambda: f64, beta: f64) -> Result<Self> {
        if !(lambda.is_finite() && beta.is_finite() && lambda > 1.0 && beta > 0.0) {
            return Err(Error::InvalidParams { lambda, beta });
        }
        Ok(Self { lambda, beta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// ϰ = λ^β, the coupling ratio of the inviscid system.
    pub fn kappa(&self) -> f64 {
        self.lambda.powf(self.beta)
    }

    /// u = λ^{2β-6}, the parameter of the stationary recurrence.
    pub fn u(&self) -> f64 {
        self.lambda.powf(2.0 * self.beta - 6.0)
    }

    /// λ^{2n}
    pub fn dissipation_rate(&self, n: usize) -> f64 {
        self.lambda.powf(2.0 * n as f64)
    }

    /// λ^{βn}
    pub fn coupling(&self, n: usize) -> f64 {
        self.lambda.powf(self.beta * n as f64)
    }

    /// λ^{(2-β)n}, the critical decay profile for initial data.
    pub fn envelope_profile(&self, n: usize) -> f64 {
        self.lambda.powf((2.0 - self.beta) * n as f64)
    }
}

/// A finite truncation (u_1, …, u_N) of the shell sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ShellVector(Vec<f64>);

impl TryFrom<Vec<f64>> for ShellVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ShellVector::new(v)
    }
}

impl From<ShellVector> for Vec<f64> {
    fn from(v: ShellVector) -> Self {
        v.0
    }
}

impl ShellVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientModes { needed: 1, got: 0 });
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidState(format!(
                "mode {} is not finite ({})",
                i + 1,
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(n_modes: usize) -> Result<Self> {
        Self::new(vec![0.0; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    /// Value of mode `n` (1-based); modes outside `1..=N` read as zero.
    pub fn mode(&self, n: usize) -> f64 {
        if n == 0 || n > self.0.len() {
            0.0
        } else {
            self.0[n - 1]
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Closed-form constants attached to a parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperConstants {
    /// Smallness constant of the strong-solution uniqueness criterion.
    pub eps1: f64,
    /// Largest admissible ε₂ for the lower bound, λ⁻².
    pub eps2_max: f64,
    /// Largest admissible ε₃ for the absolute-value envelope.
    pub eps3_max: f64,
    /// Initial-data smallness threshold, min(eps1, eps3_max).
    pub eps_init: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Growth rate ϰ of the backward recurrence deviations (upper bound).
    pub kappa_rate: f64,
    /// Growth rate ν of the backward recurrence deviations (lower bound).
    pub nu_rate: f64,
}

pub fn compute_constants(params: &ModelParams) -> PaperConstants {
    let l = params.lambda;
    let b = params.beta;
    let eps1 = 1.0 / (l * l + l.powf(b - 1.0));
    let eps2_max = 1.0 / (l * l);
    let eps3_max = 1.0 / (l * l + l.powf(2.0 * b - 4.0));
    let c1 = (1.0 / (2.0 * l * l)).min(1.0 / (64.0 * l.powf(2.0 * b)));
    let c2 = 4.0 * (3.0 + c1) / (3.0 * c1) * (1.0 / (l * l)).max(1.0 / (2.0 * l.powf(2.0 * b)));
    let c3 = c2 / (1.0 - l.powf(-2.0 * b));
    let u = params.u();
    PaperConstants {
        eps1,
        eps2_max,
        eps3_max,
        eps_init: eps1.min(eps3_max),
        c1,
        c2,
        c3,
        kappa_rate: 0.5 + (0.25 + 1.0 / u).sqrt(),
        nu_rate: 0.25 * (1.0 + (1.0 + 8.0 / u).sqrt()),
    }
}

/// Nonlinear transfer term λ^{βn}u_{n-1}² − λ^{β(n+1)}u_n u_{n+1} for every
/// mode, with u_0 = u_{N+1} = 0. `coupling[k]` must hold λ^{β(k+1)} for
/// k = 0..=N.
pub(crate) fn nonlinear_into(coupling: &[f64], u: &[f64], out: &mut [f64]) {
    let n = u.len();
    debug_assert!(coupling.len() > n && out.len() == n);
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { u[i - 1] };
        let next = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = coupling[i] * prev * prev - coupling[i + 1] * u[i] * next;
    }
}

fn coupling_table(params: &ModelParams, n_modes: usize) -> Vec<f64> {
    (1..=n_modes + 1).map(|n| params.coupling(n)).collect()
}

pub fn rhs_viscous(params: &ModelParams, state: &ShellVector) -> Result<ShellVector> {
    let coupling = coupling_table(params, state.n_modes());
    let mut out = vec![0.0; state.n_modes()];
    nonlinear_into(&coupling, state.as_slice(), &mut out);
    for (i, (o, x)) in out.iter_mut().zip(state.as_slice()).enumerate() {
        *o -= params.dissipation_rate(i + 1) * x;
    }
    ShellVector::new(out)
}

pub fn rhs_inviscid(params: &ModelParams, state: &ShellVector) -> Result<ShellVector> {
    let coupling = coupling_table(params, state.n_modes());
    let mut out = vec![0.0; state.n_modes()];
    nonlinear_into(&coupling, state.as_slice(), &mut out);
    ShellVector::new(out)
}

/// Residuals of the stationary equations for modes 1..N-1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryResidual {
    /// |r_n| for n = 1..N-1.
    pub absolute: Vec<f64>,
    /// |r_n| divided by the largest of the three terms' magnitudes (0 when all vanish).
    pub relative: Vec<f64>,
}

impl StationaryResidual {
    pub fn max_absolute(&self) -> f64 {
        self.absolute.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_relative(&self) -> f64 {
        self.relative.iter().copied().fold(0.0, f64::max)
    }

    /// Largest relative residual over modes `from..=N-1`.
    pub fn max_relative_from(&self, from: usize) -> f64 {
        self.relative
            .iter()
            .skip(from.saturating_sub(1))
            .copied()
            .fold(0.0, f64::max)
    }
}

/// r_n = λ^{2n}a_n − λ^{βn}a_{n−1}² + λ^{β(n+1)}a_n a_{n+1} for n = 1..N−1.
/// The last mode is skipped because a_{N+1} is unknown.
pub fn stationary_residual(params: &ModelParams, a: &ShellVector) -> Result<StationaryResidual> {
    let n_modes = a.n_modes();
    if n_modes < 2 {
        return Err(Error::InsufficientModes {
            needed: 2,
            got: n_modes,
        });
    }
    let mut absolute = Vec::with_capacity(n_modes - 1);
    let mut relative = Vec::with_capacity(n_modes - 1);
    for n in 1..n_modes {
        let linear = params.dissipation_rate(n) * a.mode(n);
        let feed = params.coupling(n) * a.mode(n - 1) * a.mode(n - 1);
        let drain = params.coupling(n + 1) * a.mode(n) * a.mode(n + 1);
        let r = (linear - feed + drain).abs();
        let scale = linear.abs().max(feed.abs()).max(drain.abs());
        absolute.push(r);
        relative.push(if scale > 0.0 { r / scale } else { 0.0 });
    }
    Ok(StationaryResidual { absolute, relative })
}

/// Energy Σu_n² and enstrophy-like dissipation rate Σλ^{2n}u_n².
pub fn energy_and_dissipation(params: &ModelParams, state: &ShellVector) -> (f64, f64) {
    state
        .as_slice()
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(e, d), (i, x)| {
            (e + x * x, d + params.dissipation_rate(i + 1) * x * x)
        })
}

/// Partial energies E_n = Σ_{k≤n} u_k², one entry per mode.
pub fn partial_energies(state: &ShellVector) -> Vec<f64> {
    state
        .as_slice()
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x * x;
            Some(*acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(lambda: f64, beta: f64) -> ModelParams {
        ModelParams::new(lambda, beta).unwrap()
    }

    fn sv(v: &[f64]) -> ShellVector {
        ShellVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 2.0).is_err());
        assert!(ModelParams::new(2.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 2.0).is_err());
        let q = p(2.0, 2.5);
        assert_eq!(q.kappa(), 2f64.powf(2.5));
        assert_eq!(q.u(), 0.5);
    }

    #[test]
    fn params_serde_rejects_invalid() {
        let ok: ModelParams = serde_json::from_str(r#"{"lambda":2.0,"beta":2.5}"#).unwrap();
        assert_eq!(ok, p(2.0, 2.5));
        assert!(serde_json::from_str::<ModelParams>(r#"{"lambda":0.5,"beta":2.5}"#).is_err());
    }

    #[test]
    fn shell_vector_rejects_non_finite() {
        assert!(matches!(
            ShellVector::new(vec![1.0, f64::INFINITY]),
            Err(Error::InvalidState(_))
        ));
        assert!(ShellVector::new(vec![]).is_err());
    }

    #[test]
    fn rhs_viscous_examples() {
        let q = p(2.0, 2.5);
        assert_eq!(rhs_viscous(&q, &sv(&[0.0; 3])).unwrap(), sv(&[0.0; 3]));
        assert_eq!(rhs_viscous(&q, &sv(&[1.0])).unwrap(), sv(&[-4.0]));
        // du1 = -4 - 2^5, du2 = -16 + 2^5
        assert_eq!(rhs_viscous(&q, &sv(&[1.0, 1.0])).unwrap(), sv(&[-36.0, 16.0]));
    }

    #[test]
    fn rhs_inviscid_examples() {
        // ϰ = 2 with λ = 2, β = 1
        let q = p(2.0, 1.0);
        assert_eq!(rhs_inviscid(&q, &sv(&[0.0; 4])).unwrap(), sv(&[0.0; 4]));
        assert_eq!(rhs_inviscid(&q, &sv(&[1.0])).unwrap(), sv(&[0.0]));
        assert_eq!(rhs_inviscid(&q, &sv(&[1.0, 1.0])).unwrap(), sv(&[-4.0, 4.0]));
    }

    #[test]
    fn constants_at_reference_point() {
        let c = compute_constants(&p(2.0, 2.5));
        assert_relative_eq!(c.eps1, 1.0 / (4.0 + 2f64.powf(1.5)), max_relative = 1e-15);
        assert_relative_eq!(c.eps1, 0.146447, epsilon = 1e-6);
        assert_relative_eq!(c.eps3_max, 1.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(c.eps_init, c.eps1);
        assert_eq!(c.eps2_max, 0.25);
        assert_relative_eq!(c.kappa_rate, 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.nu_rate, (1.0 + 17f64.sqrt()) / 4.0, max_relative = 1e-15);
        assert_relative_eq!(c.c1, 1.0 / 2048.0, max_relative = 1e-15);
        // c2 = 4(3 + c1)/(3 c1) * 1/4, c3 = c2 / (1 - 2^-5)
        let c2 = 4.0 * (3.0 + 1.0 / 2048.0) / (3.0 / 2048.0) / 4.0;
        assert_relative_eq!(c.c2, c2, max_relative = 1e-14);
        assert_relative_eq!(c.c2, 2048.33, epsilon = 0.01);
        assert_relative_eq!(c.c3, c2 * 32.0 / 31.0, max_relative = 1e-14);
        assert_relative_eq!(c.c3, 2114.41, epsilon = 0.01);
    }

    #[test]
    fn energy_examples() {
        let q = p(2.0, 2.5);
        assert_eq!(energy_and_dissipation(&q, &sv(&[0.0, 0.0])), (0.0, 0.0));
        assert_eq!(energy_and_dissipation(&q, &sv(&[1.0, 1.0])), (2.0, 20.0));
        let (e, d) = energy_and_dissipation(&q, &sv(&[0.5, 0.25, 0.125]));
        assert_relative_eq!(e, 0.328125, max_relative = 1e-15);
        // 4·0.25 + 16·0.0625 + 64·0.015625, each term equal to 1
        assert_relative_eq!(d, 3.0, max_relative = 1e-15);
        assert_eq!(partial_energies(&sv(&[0.5, 0.25, 0.125])), vec![0.25, 0.3125, 0.328125]);
    }

    #[test]
    fn stationary_residual_needs_two_modes() {
        assert!(matches!(
            stationary_residual(&p(2.0, 2.5), &sv(&[1.0])),
            Err(Error::InsufficientModes { needed: 2, got: 1 })
        ));
        let r = stationary_residual(&p(2.0, 2.5), &sv(&[0.0; 5])).unwrap();
        assert_eq!(r.max_absolute(), 0.0);
        assert_eq!(r.relative.len(), 4);
    }

    #[test]
    fn stationary_residual_of_fixed_point() {
        // constant b = 1/(1-u) mapped through a_n = -λ^{(2-β)n-2} b_n
        let q = p(2.0, 2.5);
        let b = 1.0 / (1.0 - q.u());
        let a: Vec<f64> = (1..=12)
            .map(|n| -q.lambda().powf((2.0 - q.beta()) * n as f64 - 2.0) * b)
            .collect();
        let r = stationary_residual(&q, &sv(&a)).unwrap();
        assert!(r.relative[0] > 1e-3, "mode 1 needs b_2 = 1");
        assert!(r.max_relative_from(2) < 1e-14, "{:?}", r.relative);
    }
}
