use std::time::Instant;

use dyadic_core::estimates::psi_at;
use dyadic_core::galerkin::SignVerdict;
use dyadic_core::{
    check_sign_structure, cube_integral, energy_report, integrate, level_set_measure,
    partial_energies, psi_metric, IntegratorConfig, ModelParams, Scheme, ShellVector, SystemKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(rng: &mut ChaCha8Rng, p: &ModelParams, n: usize, lo: f64) -> ShellVector {
    let v = (1..=n)
        .map(|k| rng.gen_range(lo..1.0) * p.envelope_profile(k).min(1.0))
        .collect();
    ShellVector::new(v).unwrap()
}

#[test]
fn energy_identity_and_l2_bound_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for _ in 0..6 {
        let lambda = [2.0, 1.5][rng.gen_range(0..2)];
        let beta = [2.0, 2.5, 3.0][rng.gen_range(0..3)];
        let p = ModelParams::new(lambda, beta).unwrap();
        let n = rng.gen_range(2..=12);
        let a = random_data(&mut rng, &p, n, -1.0);
        let traj = integrate(&p, &a, &IntegratorConfig::with_t_end(2.0), SystemKind::Viscous).unwrap();
        let r = energy_report(&traj).unwrap();
        assert!(r.max_identity_residual < 1e-6, "residual {}", r.max_identity_residual);
        assert!(r.dissipation_nondecreasing);
        let e0 = a.norm_sq();
        assert!(r.energy.iter().all(|&e| e <= e0 * (1.0 + 1e-9)));
    }
    eprintln!("energy checks: {:?}", start.elapsed());
}

#[test]
fn partial_energies_never_grow_for_nonnegative_data() {
    let p = ModelParams::new(2.0, 2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_data(&mut rng, &p, 8, 0.0);
    let traj = integrate(&p, &a, &IntegratorConfig::with_t_end(1.0), SystemKind::Viscous).unwrap();
    let (_, states) = traj.samples();
    let sums: Vec<Vec<f64>> = states
        .iter()
        .map(|s| partial_energies(&ShellVector::new(s.clone()).unwrap()))
        .collect();
    for w in sums.windows(2) {
        for (before, after) in w[0].iter().zip(&w[1]) {
            assert!(after <= &(before + 1e-12));
        }
    }
}

#[test]
fn schemes_agree_on_small_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=6 {
        let p = ModelParams::new(2.0, 2.5).unwrap();
        let a = random_data(&mut rng, &p, n, -1.0);
        let cfg = IntegratorConfig::with_t_end(1.0);
        let dp = IntegratorConfig {
            scheme: Scheme::DormandPrince,
            ..cfg.clone()
        };
        let x = integrate(&p, &a, &cfg, SystemKind::Viscous).unwrap();
        let y = integrate(&p, &a, &dp, SystemKind::Viscous).unwrap();
        let tol = 10.0 * cfg.rel_tol.max(cfg.abs_tol);
        for j in 0..=50 {
            let t = j as f64 / 50.0;
            for (u, v) in x.eval(t).iter().zip(y.eval(t)) {
                assert!((u - v).abs() <= tol, "n={n} t={t}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn nonnegative_data_stay_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = ModelParams::new(2.0, 2.5).unwrap();
    let start = Instant::now();
    for _ in 0..100 {
        let n = rng.gen_range(2..=10);
        let a = random_data(&mut rng, &p, n, 0.0);
        let traj = integrate(&p, &a, &IntegratorConfig::with_t_end(1.0), SystemKind::Viscous).unwrap();
        let r = check_sign_structure(&traj);
        assert!(r.passed(), "{r:?}");
        assert!(r.modes.iter().all(|m| m.verdict == SignVerdict::NonnegativePreserved));
    }
    eprintln!("100 sign runs: {:?}", start.elapsed());
}

#[test]
fn negative_modes_cross_at_most_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = ModelParams::new(2.0, 2.5).unwrap();
    for _ in 0..20 {
        let n = rng.gen_range(3..=10);
        let mut v = random_data(&mut rng, &p, n, 0.0).into_vec();
        let k = rng.gen_range(1..n);
        v[k] = -v[k];
        let traj = integrate(&p, &ShellVector::new(v).unwrap(), &IntegratorConfig::with_t_end(1.0), SystemKind::Viscous).unwrap();
        let r = check_sign_structure(&traj);
        assert!(r.passed(), "{r:?}");
        assert!(matches!(
            r.modes[k].verdict,
            SignVerdict::NoCrossing | SignVerdict::CrossedOnce { .. }
        ));
    }
}

#[test]
fn level_set_measures_shrink_with_the_level() {
    let p = ModelParams::new(2.0, 2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_data(&mut rng, &p, 8, 0.0);
    let a = ShellVector::new(a.as_slice().iter().map(|x| x / a.norm()).collect()).unwrap();
    let traj = integrate(&p, &a, &IntegratorConfig::with_t_end(2.0), SystemKind::Viscous).unwrap();
    for n in 1..=6 {
        let mut prev: Option<(f64, f64)> = None;
        for j in 1..=10 {
            let y = 1e-3 * 2f64.powi(j);
            let s = level_set_measure(&traj, n, y).unwrap();
            assert!(s.within_bounds(), "{s:?}");
            if let Some((ma, mb)) = prev {
                assert!(s.measure_a <= ma + 1e-12, "n={n} y={y}: {} after {ma}", s.measure_a);
                assert!(s.measure_b <= mb + 1e-12);
            }
            prev = Some((s.measure_a, s.measure_b));
        }
    }
}

#[test]
fn cube_integrals_are_nonnegative_and_bounded() {
    let p = ModelParams::new(2.0, 2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_data(&mut rng, &p, 12, 0.0);
    let a = ShellVector::new(a.as_slice().iter().map(|x| x / a.norm()).collect()).unwrap();
    let traj = integrate(&p, &a, &IntegratorConfig::with_t_end(4.0), SystemKind::Viscous).unwrap();
    for n in 4..=10 {
        let r = cube_integral(&traj, n).unwrap();
        assert!(r.integral_value >= 0.0);
        assert!(r.holds(), "{r:?}");
    }
}

#[test]
fn psi_distance_respects_the_uniform_bound() {
    let p = ModelParams::new(2.0, 2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let a = random_data(&mut rng, &p, 10, -1.0);
        let cfg = IntegratorConfig::with_t_end(1.0);
        let x = integrate(&p, &a, &cfg, SystemKind::Viscous).unwrap();
        let frozen = dyadic_core::Trajectory::constant(p, SystemKind::Viscous, a.clone(), 1.0).unwrap();
        let psi = psi_metric(&x, &frozen, 10).unwrap();
        assert!(psi.max() <= 4.0 * a.norm_sq() * (1.0 + 1e-12));
        assert_eq!(psi_at(&x, &x, 10, 0.5), 0.0);
    }
}
