//! The JSON experiment configuration.

use std::path::{Path, PathBuf};

use dyadic_core::{compute_constants, IntegratorConfig, ModelParams, ShellVector, SystemKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Verify,
    Estimate,
    Stationary,
    Selfsimilar,
    NonuniquenessDemo,
    Sweep,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Estimate => "estimate",
            Command::Stationary => "stationary",
            Command::Selfsimilar => "selfsimilar",
            Command::NonuniquenessDemo => "nonuniqueness-demo",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedSigns {
    Positive,
    Negative,
    Alternating,
}

/// Either a named pattern or one sign per mode (any negative entry flips
/// the mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignPattern {
    Named(NamedSigns),
    PerMode(Vec<f64>),
}

impl Default for SignPattern {
    fn default() -> Self {
        SignPattern::Named(NamedSigns::Positive)
    }
}

impl SignPattern {
    fn sign(&self, n: usize) -> CliResult<f64> {
        Ok(match self {
            SignPattern::Named(NamedSigns::Positive) => 1.0,
            SignPattern::Named(NamedSigns::Negative) => -1.0,
            SignPattern::Named(NamedSigns::Alternating) => {
                if n % 2 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            SignPattern::PerMode(v) => {
                let s = v.get(n - 1).ok_or_else(|| {
                    CliError::Config(format!("sign pattern has {} entries, mode {n} requested", v.len()))
                })?;
                if *s < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        })
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// How the initial vector is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    Explicit {
        values: Vec<f64>,
    },
    /// a_n = amplitude·ratio^n
    Geometric {
        amplitude: f64,
        ratio: f64,
        n_modes: usize,
    },
    /// a_n = sign_n·scale·eps·λ^{(2−β)n}; eps defaults to the smallness
    /// threshold of the parameters.
    Envelope {
        n_modes: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        signs: SignPattern,
    },
    /// a_n = amplitude·ξ_n·min(1, λ^{(2−β)n}) with ξ_n uniform in [0, 1)
    /// (or [−1, 1) when `nonnegative` is false).
    Random {
        n_modes: usize,
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "yes")]
        nonnegative: bool,
        /// Rescale to unit ℓ₂ norm.
        #[serde(default)]
        normalize: bool,
    },
}

impl DataSpec {
    pub fn n_modes(&self) -> usize {
        match self {
            DataSpec::Explicit { values } => values.len(),
            DataSpec::Geometric { n_modes, .. }
            | DataSpec::Envelope { n_modes, .. }
            | DataSpec::Random { n_modes, .. } => *n_modes,
        }
    }

    /// Same spec with a different truncation size; explicit data cannot be
    /// resized.
    pub fn resized(&self, n: usize) -> CliResult<DataSpec> {
        let mut s = self.clone();
        match &mut s {
            DataSpec::Explicit { .. } => {
                return Err(CliError::Config("explicit data cannot be regenerated at another size".into()))
            }
            DataSpec::Geometric { n_modes, .. }
            | DataSpec::Envelope { n_modes, .. }
            | DataSpec::Random { n_modes, .. } => *n_modes = n,
        }
        Ok(s)
    }

    pub fn set_seed(&mut self, new_seed: u64) -> bool {
        match self {
            DataSpec::Random { seed, .. } => {
                *seed = new_seed;
                true
            }
            _ => false,
        }
    }

    pub fn generate(&self, params: &ModelParams) -> CliResult<ShellVector> {
        let values = match self {
            DataSpec::Explicit { values } => values.clone(),
            DataSpec::Geometric {
                amplitude,
                ratio,
                n_modes,
            } => (1..=*n_modes).map(|n| amplitude * ratio.powi(n as i32)).collect(),
            DataSpec::Envelope {
                n_modes,
                scale,
                eps,
                signs,
            } => {
                let eps = eps.unwrap_or_else(|| compute_constants(params).eps_init);
                (1..=*n_modes)
                    .map(|n| Ok(signs.sign(n)? * scale * eps * params.envelope_profile(n)))
                    .collect::<CliResult<Vec<f64>>>()?
            }
            DataSpec::Random {
                n_modes,
                seed,
                amplitude,
                nonnegative,
                normalize,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let lo = if *nonnegative { 0.0 } else { -1.0 };
                let mut v: Vec<f64> = (1..=*n_modes)
                    .map(|n| amplitude * rng.gen_range(lo..1.0) * params.envelope_profile(n).min(1.0))
                    .collect();
                if *normalize {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        v.iter_mut().for_each(|x| *x /= norm);
                    }
                }
                v
            }
        };
        Ok(ShellVector::new(values)?)
    }
}

fn default_first_mode() -> usize {
    1
}

fn default_energy_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Runs the lower-bound check with this ε₂ when set.
    pub eps2: Option<f64>,
    /// Runs the envelope check with this ε₃ when set.
    pub eps3: Option<f64>,
    #[serde(default = "default_first_mode")]
    pub first_mode: usize,
    /// Truncation sizes for the convergence study (at least two).
    pub convergence_modes: Vec<usize>,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            eps2: None,
            eps3: None,
            first_mode: 1,
            convergence_modes: Vec::new(),
            energy_tolerance: default_energy_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    /// Modes and levels of the level-set grid.
    pub modes: Vec<usize>,
    pub levels: Vec<f64>,
    pub cube_modes: Vec<usize>,
    pub blowup_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySection {
    pub target_len: usize,
    pub limit_lengths: Vec<usize>,
    /// Measures the conditioning cap up to `cap_search_limit` when true.
    pub measure_cap: bool,
    pub cap_search_limit: usize,
    pub residual_tolerance: f64,
}

impl Default for StationarySection {
    fn default() -> Self {
        Self {
            target_len: 40,
            limit_lengths: Vec::new(),
            measure_cap: false,
            cap_search_limit: dyadic_core::stationary::DEFAULT_CAP_SEARCH_LIMIT,
            residual_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfSimilarSection {
    pub prefix_len: usize,
    /// Times at which the Galerkin run is compared with the analytic form.
    pub times: Vec<f64>,
    /// Number of evenly spaced times in [0, 0.99] for the ODE residual.
    pub residual_samples: usize,
    pub residual_tolerance: f64,
    pub agreement_tolerance: f64,
}

impl Default for SelfSimilarSection {
    fn default() -> Self {
        Self {
            prefix_len: 20,
            times: vec![0.0, 0.25, 0.5],
            residual_samples: 100,
            residual_tolerance: 1e-10,
            agreement_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonuniquenessSection {
    /// Number of modes of the stationary prefix and of the Galerkin run.
    pub prefix_len: usize,
    pub t_end: f64,
    /// Modes entering ψ; defaults to the prefix length.
    pub psi_modes: Option<usize>,
    pub residual_tolerance: f64,
    pub min_energy_loss: f64,
    pub min_psi: f64,
}

impl Default for NonuniquenessSection {
    fn default() -> Self {
        Self {
            prefix_len: 30,
            t_end: 1.0,
            psi_modes: None,
            residual_tolerance: 1e-9,
            min_energy_loss: 0.01,
            min_psi: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Pipeline run at every grid point.
    pub command: Command,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: ModelParams,
    #[serde(default)]
    pub system: SystemKind,
    #[serde(default)]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub stationary: StationarySection,
    #[serde(default)]
    pub selfsimilar: SelfSimilarSection,
    #[serde(default)]
    pub nonuniqueness: NonuniquenessSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.integrator.validate()?;
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be positive".into()));
        }
        let needs_data = matches!(
            self.command,
            Command::Simulate | Command::Verify | Command::Estimate
        );
        if needs_data && self.data.is_none() {
            return Err(CliError::Config(format!(
                "command {} needs a data section",
                self.command.as_str()
            )));
        }
        match (&self.command, &self.sweep) {
            (Command::Sweep, None) => {
                return Err(CliError::Config("command sweep needs a sweep section".into()))
            }
            (Command::Sweep, Some(s)) if s.command == Command::Sweep => {
                return Err(CliError::Config("a sweep cannot run nested sweeps".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn data_vector(&self) -> CliResult<ShellVector> {
        match &self.data {
            Some(d) => d.generate(&self.params),
            None => Err(CliError::Config("no data section".into())),
        }
    }

    /// Replaces the seed of a random data spec; false if there is none.
    pub fn override_seed(&mut self, seed: u64) -> bool {
        self.data.as_mut().is_some_and(|d| d.set_seed(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(2.0, 2.5).unwrap()
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"command":"stationary","params":{"lambda":2,"beta":2.5}}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Command::Stationary);
        assert_eq!(cfg.stationary.target_len, 40);
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn unknown_fields_and_bad_params_are_rejected() {
        assert!(ExperimentConfig::from_json(
            r#"{"command":"stationary","params":{"lambda":2,"beta":2.5},"bogus":1}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"command":"stationary","params":{"lambda":0.5,"beta":2.5}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"simulate","params":{"lambda":2,"beta":2.5}}"#).is_err());
    }

    #[test]
    fn random_spec_requires_a_seed() {
        let r: Result<DataSpec, _> = serde_json::from_str(r#"{"kind":"random","n_modes":4}"#);
        assert!(r.is_err());
    }

    #[test]
    fn random_data_is_reproducible() {
        let spec: DataSpec = serde_json::from_str(r#"{"kind":"random","n_modes":6,"seed":42}"#).unwrap();
        let a = spec.generate(&params()).unwrap();
        let b = spec.generate(&params()).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&x| x >= 0.0));
        let mut other = spec.clone();
        other.set_seed(43);
        assert_ne!(other.generate(&params()).unwrap(), a);
    }

    #[test]
    fn generators_follow_their_formulas() {
        let g = DataSpec::Geometric {
            amplitude: 2.0,
            ratio: 0.5,
            n_modes: 3,
        };
        assert_eq!(g.generate(&params()).unwrap().as_slice(), &[1.0, 0.5, 0.25]);
        let e: DataSpec =
            serde_json::from_str(r#"{"kind":"envelope","n_modes":3,"scale":0.9,"eps":0.25,"signs":"alternating"}"#)
                .unwrap();
        let v = e.generate(&params()).unwrap();
        for n in 1..=3 {
            let expected = 0.9 * 0.25 * 2f64.powf(-0.5 * n as f64) * if n % 2 == 1 { 1.0 } else { -1.0 };
            assert!((v.mode(n) - expected).abs() < 1e-16);
        }
        let per: DataSpec =
            serde_json::from_str(r#"{"kind":"envelope","n_modes":2,"signs":[1,-1]}"#).unwrap();
        assert!(per.generate(&params()).unwrap().mode(2) < 0.0);
    }

    #[test]
    fn explicit_data_cannot_be_resized() {
        let e = DataSpec::Explicit { values: vec![1.0] };
        assert!(e.resized(4).is_err());
        let g = DataSpec::Geometric {
            amplitude: 1.0,
            ratio: 0.5,
            n_modes: 3,
        };
        assert_eq!(g.resized(5).unwrap().n_modes(), 5);
    }
}
