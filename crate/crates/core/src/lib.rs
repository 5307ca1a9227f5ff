//! Numerical toolkit for the dyadic shell model: Galerkin simulation of the
//! viscous and inviscid systems, trajectory-level estimates, stationary
//! solutions by backward shooting and the associated self-similar profiles.

pub mod error;
pub mod estimates;
pub mod galerkin;
pub mod model;
pub mod phi;
pub mod quadrature;
pub mod selfsimilar;
pub mod stationary;

mod bracket;
pub mod csv;

pub use error::{Error, ErrorClass, Result};
pub use estimates::{
    blowup_functional, cube_integral, level_set_measure, psi_metric, CubeIntegralReport,
    LevelSetStats, PsiSeries,
};
pub use galerkin::{
    check_envelope, check_lower_bound, check_sign_structure, convergence_study, energy_report,
    integrate, ConvergenceTable, EnergyReport, EnvelopeReport, IntegratorConfig,
    LowerBoundReport, Scheme, SignReport, SystemKind, Trajectory,
};
pub use model::{
    compute_constants, energy_and_dissipation, partial_energies, rhs_inviscid, rhs_viscous,
    stationary_residual, ModelParams, PaperConstants, ShellVector, StationaryResidual,
};
pub use selfsimilar::{build_selfsimilar, verify_blowup, BlowupReport, SelfSimilarSolution};
pub use stationary::{
    backward_run, conditioning_cap, envelope_check, limit_study, reverse_to_solution, shoot,
    AuxSequence, EnvelopeCheck, LimitTable, Regime, StationarySolution,
};
