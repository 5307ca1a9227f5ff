//! Stationary solutions through the substitution a_n = −λ^{(2−β)n−2}·b_n,
//! which turns the stationary equations into
//!
//! ```text
//! b_n b_{n+1} = b_n + u·b_{n−1}²,    u = λ^{2β−6}.
//! ```
//!
//! Finite solutions are built backwards: c_{k+1} = √(c_k(c_{k−1} − 1)/u)
//! runs until some c_{k−1} ≤ 1, and the free starting parameter is shot so
//! that the target entry lands exactly on 1. Reversing the shot gives a
//! prefix b_1 … b_{n+2} with b_2 = 1.
//!
//! For u < 1 the recurrence is iterated in deviation form e_k = 1/(1−u) − c_k,
//! which keeps the tiny shooting parameter from being swamped by the fixed
//! point.

use rayon::prelude::*;
use serde::Serialize;

use crate::csv::{fmt_f64, CsvBuf};
use crate::error::{Error, Result};
use crate::model::{compute_constants, ModelParams, ShellVector};

/// |c_n − 1| accepted as a hit.
pub const HIT_TOL: f64 = 1e-12;
/// Bracket collapse threshold (relative width).
const COLLAPSE: f64 = 1e-15;
const MAX_BISECTIONS: usize = 400;
const MAX_EXPANSIONS: usize = 200;
/// Default upper limit on the shooting depth searched by `conditioning_cap`.
pub const DEFAULT_CAP_SEARCH_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// u < 1 (β < 3)
    Subcritical,
    /// u = 1 (β = 3)
    Critical,
    /// u > 1 (β > 3)
    Supercritical,
}

impl Regime {
    /// Classifies `u`; values within 1e-12 of 1 are routed to the critical
    /// branch with a warning.
    pub fn classify(u: f64) -> Regime {
        if u == 1.0 {
            Regime::Critical
        } else if (u - 1.0).abs() < 1e-12 {
            log::warn!("u = {u} is numerically marginal; treating it as critical");
            Regime::Critical
        } else if u < 1.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Metadata of a successful shot.
#[derive(Debug, Clone, Serialize)]
pub struct ShotInfo {
    pub target_len: usize,
    /// δ for u < 1, A otherwise.
    pub parameter: f64,
    pub iterations: usize,
    /// c_n − 1 at the accepted parameter.
    pub hit_error: f64,
    /// Bracket (lo, hi) after each bisection step.
    pub bracket_history: Vec<(f64, f64)>,
}

/// Finite backward sequence c_0, c_1, … of the recurrence.
#[derive(Debug, Clone, Serialize)]
pub struct AuxSequence {
    pub u_param: f64,
    pub regime: Regime,
    pub c: Vec<f64>,
    /// First index k with c_k ≤ 1, if the run stopped.
    pub stopped_at: Option<usize>,
    pub shot: Option<ShotInfo>,
}

/// c_{k+1} from (c_{k−1}, c_k); `None` once c_{k−1} ≤ 1.
pub fn backward_step(u: f64, c_prev: f64, c_cur: f64) -> Option<f64> {
    if c_prev <= 1.0 {
        return None;
    }
    Some((c_cur * (c_prev - 1.0) / u).sqrt())
}

/// d_{k+1} = 1 + u·d_{k−1}²/d_k, the exact inverse of `backward_step`.
pub fn forward_step(u: f64, d_prev: f64, d_cur: f64) -> f64 {
    1.0 + u * d_prev * d_prev / d_cur
}

/// Iterates the backward recurrence from (c0, c1) until it stops or holds
/// `max_len` entries.
pub fn backward_run(u: f64, c0: f64, c1: f64, max_len: usize) -> Result<AuxSequence> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Precondition(format!("u must be positive, got {u}")));
    }
    if !(c0 > 1.0 && c1 > 1.0) {
        return Err(Error::Precondition(format!(
            "starting values must exceed 1, got ({c0}, {c1})"
        )));
    }
    let (c, stopped_at) = naive_run(u, c0, c1, max_len);
    Ok(AuxSequence {
        u_param: u,
        regime: Regime::classify(u),
        c,
        stopped_at,
        shot: None,
    })
}

fn first_stop(c: &[f64]) -> Option<usize> {
    c.iter().position(|&x| x <= 1.0)
}

fn naive_run(u: f64, c0: f64, c1: f64, max_len: usize) -> (Vec<f64>, Option<usize>) {
    let mut c = vec![c0, c1];
    c.truncate(max_len.max(1));
    while c.len() < max_len {
        let k = c.len() - 1;
        match backward_step(u, c[k - 1], c[k]) {
            Some(x) => c.push(x),
            None => break,
        }
    }
    let stop = first_stop(&c);
    (c, stop)
}

/// Deviation form for u < 1: c_k = c* − e_k with c* = 1/(1−u).
fn deviation_run(u: f64, e0: f64, e1: f64, max_len: usize) -> (Vec<f64>, Option<usize>) {
    let cs = 1.0 / (1.0 - u);
    let mut e = vec![e0, e1];
    let mut c = vec![cs - e0, cs - e1];
    while c.len() < max_len {
        let k = c.len() - 1;
        if c[k - 1] <= 1.0 {
            break;
        }
        let s = (e[k] * u * cs + cs * e[k - 1] - e[k] * e[k - 1]) / u;
        let next = s / (cs + (cs * cs - s).max(0.0).sqrt());
        e.push(next);
        c.push(cs - next);
    }
    let stop = first_stop(&c);
    (c, stop)
}

/// Shooting family for one regime.
struct Family {
    u: f64,
    regime: Regime,
    nu: f64,
    r: f64,
}

impl Family {
    fn new(u: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Precondition(format!("u must be positive, got {u}")));
        }
        let regime = Regime::classify(u);
        Ok(Self {
            u,
            regime,
            nu: 0.25 * (1.0 + (1.0 + 8.0 / u).sqrt()),
            r: u.cbrt(),
        })
    }

    fn run(&self, p: f64, len: usize) -> (Vec<f64>, Option<usize>) {
        match self.regime {
            Regime::Subcritical => deviation_run(self.u, p, self.nu * p, len),
            Regime::Critical => naive_run(self.u, p, p - 1.0 / 3.0, len),
            Regime::Supercritical => naive_run(self.u, p, p / self.r, len),
        }
    }

    /// c_n − 1, or −1 if the sequence stopped before index n. Increasing
    /// in the parameter for u ≥ 1, decreasing for u < 1.
    fn miss(&self, p: f64, n: usize) -> f64 {
        let (c, _) = self.run(p, n + 1);
        if c.len() <= n || c[..n].iter().any(|&x| x <= 1.0) {
            -1.0
        } else {
            c[n] - 1.0
        }
    }

    /// Oriented so that `sign · miss` is increasing in the parameter.
    fn orientation(&self) -> f64 {
        if self.regime == Regime::Subcritical {
            -1.0
        } else {
            1.0
        }
    }

    fn seed_bracket(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        match self.regime {
            Regime::Subcritical => {
                let cs = 1.0 / (1.0 - self.u);
                let kappa = 0.5 + (0.25 + 1.0 / self.u).sqrt();
                let lo = self.u / (1.0 - self.u) / kappa.powf(nf) / 2.0;
                let hi = (2.0 * self.u / ((1.0 - self.u) * self.nu.powf(nf)))
                    .min((cs - 1.0) / self.nu * 0.999);
                (lo, hi)
            }
            Regime::Critical => (nf / 3.0 + 1.0, nf + 2.0),
            Regime::Supercritical => {
                let g = self.u.powf(nf / 3.0);
                (g, 1.0 + g * (1.0 + 1.0 / (self.r - 1.0)))
            }
        }
    }

    /// Largest admissible parameter (both starting values must exceed 1).
    fn param_ceiling(&self) -> f64 {
        match self.regime {
            Regime::Subcritical => (1.0 / (1.0 - self.u) - 1.0) / self.nu * (1.0 - 1e-12),
            _ => f64::MAX,
        }
    }

    fn param_floor(&self) -> f64 {
        match self.regime {
            Regime::Subcritical => f64::MIN_POSITIVE,
            Regime::Critical => 4.0 / 3.0 + 1e-12,
            Regime::Supercritical => self.r * (1.0 + 1e-12),
        }
    }
}

enum ShootFailure {
    Bracket(String),
    Collapsed,
}

fn shoot_core(fam: &Family, n: usize) -> std::result::Result<(Vec<f64>, ShotInfo), ShootFailure> {
    let s = fam.orientation();
    let g = |p: f64| s * fam.miss(p, n);
    let (mut lo, mut hi) = fam.seed_bracket(n);
    let mut expansions = 0;
    while g(lo) > 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS || lo <= fam.param_floor() {
            return Err(ShootFailure::Bracket(format!(
                "no parameter below {lo:e} gives a sequence that stops before index {n}"
            )));
        }
        lo = match fam.regime {
            Regime::Subcritical => lo * 0.5,
            _ => (lo - (hi - lo)).max(fam.param_floor()),
        };
    }
    while g(hi) < 0.0 {
        expansions += 1;
        if expansions > MAX_EXPANSIONS || hi >= fam.param_ceiling() {
            return Err(ShootFailure::Bracket(format!(
                "no parameter above {hi:e} keeps the sequence alive to index {n}"
            )));
        }
        hi = (hi * 2.0).min(fam.param_ceiling());
    }
    // with the orientation applied g(lo) ≤ 0 ≤ g(hi)
    let mut history = Vec::new();
    for it in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= COLLAPSE * hi.abs() {
            return Err(ShootFailure::Collapsed);
        }
        let v = fam.miss(mid, n);
        if v.abs() <= HIT_TOL {
            let (c, _) = fam.run(mid, n + 1);
            return Ok((
                c,
                ShotInfo {
                    target_len: n,
                    parameter: mid,
                    iterations: it,
                    hit_error: v,
                    bracket_history: history,
                },
            ));
        }
        if s * v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        history.push((lo, hi));
    }
    Err(ShootFailure::Collapsed)
}

fn shoot_u_inner(u: f64, target_len: usize) -> Result<AuxSequence> {
    if target_len < 3 {
        return Err(Error::Precondition(format!(
            "target length must be at least 3, got {target_len}"
        )));
    }
    let fam = Family::new(u)?;
    match shoot_core(&fam, target_len) {
        Ok((c, shot)) => Ok(AuxSequence {
            u_param: u,
            regime: fam.regime,
            stopped_at: first_stop(&c),
            c,
            shot: Some(shot),
        }),
        Err(ShootFailure::Bracket(msg)) => Err(Error::ShootingBracket(msg)),
        Err(ShootFailure::Collapsed) => Err(Error::PrecisionExhausted {
            requested: target_len,
            achievable: 0,
        }),
    }
}

/// Shoots the backward recurrence with parameter `u` so that c_n = 1 at
/// n = `target_len`.
pub fn shoot_u(u: f64, target_len: usize) -> Result<AuxSequence> {
    match shoot_u_inner(u, target_len) {
        Err(Error::PrecisionExhausted { requested, .. }) => {
            let achievable = largest_ok(u, 3, requested).unwrap_or(0);
            Err(Error::PrecisionExhausted {
                requested,
                achievable,
            })
        }
        other => other,
    }
}

pub fn shoot(params: &ModelParams, target_len: usize) -> Result<AuxSequence> {
    shoot_u(params.u(), target_len)
}

/// Largest n in [lo, hi) for which the shot succeeds, assuming success is
/// monotone in n.
fn largest_ok(u: f64, lo: usize, hi: usize) -> Option<usize> {
    if hi <= lo || shoot_u_inner(u, lo).is_err() {
        return None;
    }
    let (mut good, mut bad) = (lo, hi);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if shoot_u_inner(u, mid).is_ok() {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditioningCap {
    pub u_param: f64,
    /// Largest target length shot successfully.
    pub cap: usize,
    /// True if the search stopped at `search_limit` without a failure.
    pub limit_reached: bool,
    pub search_limit: usize,
}

/// Measures the largest achievable shooting depth by doubling and then
/// bisecting on the target length.
pub fn conditioning_cap_u(u: f64, search_limit: usize) -> Result<ConditioningCap> {
    let search_limit = search_limit.max(3);
    shoot_u_inner(u, 3)?;
    let mut good = 3;
    let mut n = 4;
    loop {
        if n >= search_limit {
            if shoot_u_inner(u, search_limit).is_ok() {
                return Ok(ConditioningCap {
                    u_param: u,
                    cap: search_limit,
                    limit_reached: true,
                    search_limit,
                });
            }
            n = search_limit;
            break;
        }
        if shoot_u_inner(u, n).is_err() {
            break;
        }
        good = n;
        n *= 2;
    }
    let cap = largest_ok(u, good, n).unwrap_or(good);
    Ok(ConditioningCap {
        u_param: u,
        cap,
        limit_reached: false,
        search_limit,
    })
}

pub fn conditioning_cap(params: &ModelParams, search_limit: usize) -> Result<ConditioningCap> {
    conditioning_cap_u(params.u(), search_limit)
}

/// A finite stationary prefix: b solves the recurrence exactly up to
/// rounding, a is its physical image.
#[derive(Debug, Clone, Serialize)]
pub struct StationarySolution {
    pub params: ModelParams,
    pub u_param: f64,
    pub regime: Regime,
    /// b_1 … b_K with b_2 = 1.
    pub b: Vec<f64>,
    /// a_n = −λ^{(2−β)n−2}·b_n
    pub a: Vec<f64>,
    /// 1/(1−u), 1 or 1/(u^{1/3}−1) by regime; see `envelope`.
    pub envelope_constant: f64,
    pub prefix_length_exact: usize,
    /// max relative residual of b_k b_{k+1} = b_k + u b_{k−1}² over k = 2..K−1.
    pub recurrence_residual: f64,
    pub shot: Option<ShotInfo>,
}

impl StationarySolution {
    /// Regime bound for b_k (1-based); infinite where none applies.
    pub fn envelope(&self, k: usize) -> f64 {
        envelope_bound(self.regime, self.u_param, k)
    }

    pub fn a_vector(&self) -> Result<ShellVector> {
        ShellVector::new(self.a.clone())
    }

    /// e_n = −a_n·λ^{βn/3}, the normalization in which supercritical
    /// prefixes approach a constant.
    pub fn scaled_decay(&self) -> Vec<f64> {
        let p = &self.params;
        self.a
            .iter()
            .enumerate()
            .map(|(i, a)| -a * p.lambda().powf(p.beta() * (i + 1) as f64 / 3.0))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut c = CsvBuf::new(&["k", "b_k", "a_k", "envelope_k", "e_k"]);
        let e = self.scaled_decay();
        for k in 1..=self.b.len() {
            let env = self.envelope(k);
            c.row([
                k.to_string(),
                fmt_f64(self.b[k - 1]),
                fmt_f64(self.a[k - 1]),
                if env.is_finite() { fmt_f64(env) } else { "inf".into() },
                fmt_f64(e[k - 1]),
            ]);
        }
        c.finish()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn envelope_bound(regime: Regime, u: f64, k: usize) -> f64 {
    match regime {
        Regime::Subcritical => 1.0 / (1.0 - u),
        Regime::Critical => k as f64,
        Regime::Supercritical => {
            if k < 2 {
                f64::INFINITY
            } else {
                let r = u.cbrt();
                (u.powf((k - 1) as f64 / 3.0) - 1.0) / (r - 1.0)
            }
        }
    }
}

fn envelope_constant(regime: Regime, u: f64) -> f64 {
    match regime {
        Regime::Subcritical => 1.0 / (1.0 - u),
        Regime::Critical => 1.0,
        Regime::Supercritical => 1.0 / (u.cbrt() - 1.0),
    }
}

/// Relative residual of b_k b_{k+1} = b_k + u·b_{k−1}² for k = 2..K−1.
pub fn recurrence_residual(u: f64, b: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..b.len().saturating_sub(1) {
        let lhs = b[k] * b[k + 1];
        let t2 = u * b[k - 1] * b[k - 1];
        let scale = lhs.abs().max(b[k].abs()).max(t2);
        if scale > 0.0 {
            worst = worst.max((lhs - b[k] - t2).abs() / scale);
        }
    }
    worst
}

/// Reverses a terminated shot into b_1 … b_{n+2}: b_k = c_{n+2−k} for
/// k ≥ 3, b_2 = 1, and b_1 from one more backward step.
pub fn reverse_to_solution(aux: &AuxSequence, params: &ModelParams) -> Result<StationarySolution> {
    reverse_with(aux, params, params.u())
}

pub(crate) fn reverse_with(aux: &AuxSequence, params: &ModelParams, u: f64) -> Result<StationarySolution> {
    let c = &aux.c;
    if c.len() < 3 {
        return Err(Error::InvalidAux(format!("only {} entries", c.len())));
    }
    if (aux.u_param - u).abs() > 1e-12 * u {
        return Err(Error::InvalidAux(format!(
            "sequence was built for u = {}, parameters give u = {u}",
            aux.u_param
        )));
    }
    let n = c.len() - 1;
    if (c[n] - 1.0).abs() > HIT_TOL {
        return Err(Error::InvalidAux(format!("last entry is {} instead of 1", c[n])));
    }
    if let Some(k) = c[..n].iter().position(|&x| x <= 1.0) {
        return Err(Error::InvalidAux(format!("stopped early at index {k}")));
    }
    let mut b = Vec::with_capacity(n + 2);
    b.push(0.0);
    b.push(1.0);
    b.extend(c[..n].iter().rev());
    b[0] = backward_step(u, b[2], b[1]).expect("b_3 > 1");
    let residual = recurrence_residual(u, &b);
    for k in 1..b.len() - 1 {
        let f = forward_step(u, b[k - 1], b[k]);
        if (f - b[k + 1]).abs() > 1e-10 * b[k + 1] {
            return Err(Error::InvalidAux(format!(
                "forward recurrence fails at k = {}: {} vs {}",
                k + 1,
                f,
                b[k + 1]
            )));
        }
    }
    let a = b
        .iter()
        .enumerate()
        .map(|(i, bk)| -params.lambda().powf((2.0 - params.beta()) * (i + 1) as f64 - 2.0) * bk)
        .collect();
    Ok(StationarySolution {
        params: *params,
        u_param: u,
        regime: aux.regime,
        envelope_constant: envelope_constant(aux.regime, u),
        prefix_length_exact: b.len(),
        recurrence_residual: residual,
        b,
        a,
        shot: aux.shot.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeCheck {
    pub regime: Regime,
    /// 1-based indices where the regime envelope fails.
    pub envelope_violations: Vec<usize>,
    /// b_k ≥ 1 for k ≥ 2, i.e. a_k ≤ −λ^{(2−β)k−2}.
    pub lower_bound_holds: bool,
    /// b_2 ≤ b_3 ≤ … (strictness is tracked separately).
    pub nondecreasing: bool,
    pub strictly_increasing: bool,
    /// max_k b_k / k (critical regime).
    pub max_ratio_to_index: f64,
    /// min and max of b_k·u^{−k/3} over the last half of the prefix.
    pub tail_scaled_range: (f64, f64),
    pub passed: bool,
}

impl EnvelopeCheck {
    /// max/min − 1 of the scaled tail.
    pub fn tail_variation(&self) -> f64 {
        self.tail_scaled_range.1 / self.tail_scaled_range.0 - 1.0
    }
}

pub fn envelope_check(sol: &StationarySolution) -> EnvelopeCheck {
    let b = &sol.b;
    let slack = 1.0 + 1e-12;
    let envelope_violations: Vec<usize> = (1..=b.len())
        .filter(|&k| b[k - 1] > sol.envelope(k) * slack)
        .collect();
    let lower_bound_holds = b.iter().skip(1).all(|&x| x >= 1.0 - 1e-12);
    let nondecreasing = b[1..].windows(2).all(|w| w[1] >= w[0]);
    let strictly_increasing = b.windows(2).all(|w| w[1] > w[0]);
    let max_ratio_to_index = b
        .iter()
        .enumerate()
        .map(|(i, x)| x / (i + 1) as f64)
        .fold(0.0, f64::max);
    let scaled: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, x)| x * sol.u_param.powf(-((i + 1) as f64) / 3.0))
        .collect();
    let tail = &scaled[scaled.len() / 2..];
    let tail_scaled_range = (
        tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail.iter().copied().fold(0.0, f64::max),
    );
    let regime_ok = match sol.regime {
        Regime::Subcritical => nondecreasing,
        Regime::Critical => strictly_increasing,
        Regime::Supercritical => tail_scaled_range.0 > 0.0,
    };
    EnvelopeCheck {
        regime: sol.regime,
        passed: envelope_violations.is_empty() && lower_bound_holds && regime_ok,
        envelope_violations,
        lower_bound_holds,
        nondecreasing,
        strictly_increasing,
        max_ratio_to_index,
        tail_scaled_range,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub target_len: usize,
    pub b1: f64,
    /// |b1 − previous b1|
    pub increment: Option<f64>,
    /// b_K·u^{−K/3} at the last entry of the prefix.
    pub last_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitTable {
    pub regime: Regime,
    pub rows: Vec<LimitRow>,
    /// Aitken extrapolation of the last three b1 values (the last value
    /// when fewer rows exist).
    pub extrapolated_b1: f64,
}

impl LimitTable {
    pub fn increments_decreasing(&self) -> bool {
        let inc: Vec<f64> = self.rows.iter().filter_map(|r| r.increment).collect();
        inc.windows(2).all(|w| w[1] < w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut c = CsvBuf::new(&["target_len", "b1", "increment", "last_scaled"]);
        for r in &self.rows {
            c.row([
                r.target_len.to_string(),
                fmt_f64(r.b1),
                r.increment.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.last_scaled),
            ]);
        }
        c.finish()
    }
}

pub fn limit_study(params: &ModelParams, lengths: &[usize]) -> Result<LimitTable> {
    if lengths.is_empty() || lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("lengths must be nonempty and increasing".into()));
    }
    let sols = lengths
        .par_iter()
        .map(|&n| shoot(params, n).and_then(|aux| reverse_to_solution(&aux, params)))
        .collect::<Result<Vec<_>>>()?;
    let u = params.u();
    let mut rows: Vec<LimitRow> = Vec::with_capacity(sols.len());
    for (sol, &n) in sols.iter().zip(lengths) {
        let b1 = sol.b[0];
        let k = sol.b.len();
        rows.push(LimitRow {
            target_len: n,
            b1,
            increment: rows.last().map(|r| (b1 - r.b1).abs()),
            last_scaled: sol.b[k - 1] * u.powf(-(k as f64) / 3.0),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.b1).collect();
    let extrapolated_b1 = match x.len() {
        0..=2 => x[x.len() - 1],
        m => {
            let (x0, x1, x2) = (x[m - 3], x[m - 2], x[m - 1]);
            let denom = (x2 - x1) - (x1 - x0);
            if denom == 0.0 {
                x2
            } else {
                x2 - (x2 - x1).powi(2) / denom
            }
        }
    };
    Ok(LimitTable {
        regime: Regime::classify(u),
        rows,
        extrapolated_b1,
    })
}

/// Growth rates (ϰ, ν) of the deviations for u < 1.
pub fn deviation_rates(params: &ModelParams) -> (f64, f64) {
    let c = compute_constants(params);
    (c.kappa_rate, c.nu_rate)
}
