//! Workloads shared by the benchmarks.

use dyadic_core::{ModelParams, ShellVector};

/// Nonnegative data on the critical decay profile, scaled to unit norm.
pub fn envelope_data(params: &ModelParams, n_modes: usize) -> ShellVector {
    let raw: Vec<f64> = (1..=n_modes).map(|n| params.envelope_profile(n)).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    ShellVector::new(raw.into_iter().map(|x| x / norm).collect()).expect("finite data")
}
