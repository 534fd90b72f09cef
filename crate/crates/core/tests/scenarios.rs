//! End-to-end checks of the experiment drivers on the reference cocycles.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

use lyalab::cocycle::{scalar_split, FiniteCocycle};
use lyalab::experiments::{
    jitter_support, run_continuity_sweep, run_support_jitter, Budgets, PerturbationSpec,
};
use lyalab::exponents::estimate_extremal_mc;
use lyalab::holder::{
    build_construction, diagonal_base, induced_return_experiment, kifer_crossover, kifer_family,
    vanishing_exponent_check, InducedTarget,
};
use lyalab::oseledets::angle_convergence_experiment;
use lyalab::projective::{angle_between, Mat2C, ProjPoint};
use lyalab::stationary::{directional_mass, solve_stationary, ParticleMeasure};
use lyalab::{Cocycle, Error};
use num_complex::Complex64;

const P: [f64; 2] = [0.7, 0.3];

fn target() -> f64 {
    0.4 * LN_2
}

fn solve(c: &FiniteCocycle, budget: usize, seed: u64) -> ParticleMeasure {
    match solve_stationary(c, budget, 256, 1e-4, seed) {
        Ok(s) => s.measure,
        Err(Error::NotConverged { best, .. }) => *best,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn scalar_split_shifts_exponents_by_mean_log_scale() {
    let c = |re, im| Complex64::new(re, im);
    let a = FiniteCocycle::new(
        vec![
            Mat2C::new(c(1.5, 0.2), c(0.3, 0.0), c(-0.4, 1.0), c(0.8, 0.0)),
            Mat2C::new(c(0.2, 0.0), c(2.0, -0.5), c(-1.0, 0.0), c(0.6, 0.3)),
        ],
        vec![0.4, 0.6],
    )
    .unwrap();
    let (b, scales) = scalar_split(&a).unwrap();
    let shift: f64 = a
        .weights()
        .iter()
        .zip(&scales)
        .map(|(p, s)| p * s.norm().ln())
        .sum();
    let ea = estimate_extremal_mc(&a, 50_000, 32, 21).unwrap();
    let eb = estimate_extremal_mc(&b, 50_000, 32, 22).unwrap();
    let ci = 3.0 * (ea.stderr_plus + eb.stderr_plus);
    assert!((ea.lambda_plus - eb.lambda_plus - shift).abs() <= ci);
}

#[test]
fn extremal_exponents_are_ordered() {
    for c in [
        diagonal_base(2.0, P).unwrap(),
        kifer_family(2.0, 0.5).unwrap(),
        PerturbationSpec::default_matrix(2)
            .apply(&diagonal_base(2.0, P).unwrap(), 0.1)
            .unwrap(),
    ] {
        let e = estimate_extremal_mc(&c, 10_000, 16, 3).unwrap();
        assert!(e.stderr_plus >= 0.0 && e.stderr_minus >= 0.0);
        assert!(e.lambda_plus >= e.lambda_minus - 2.0 * (e.stderr_plus + e.stderr_minus));
    }
}

#[test]
fn perturbed_window_applies_shear_on_the_cylinder() {
    for k in 1..=3 {
        let c = build_construction(2.0, k, P).unwrap();
        let mut word = vec![0; 4 * k + 1];
        word[2 * k..].copy_from_slice(&c.cylinder_word);
        let shear = Mat2C::real(1.0, 0.0, c.eps, 1.0);
        let expected = c.base().matrices()[word[2 * k]] * shear;
        assert_eq!(*c.perturbed.field().eval_word(&word), expected);
    }
}

#[test]
fn kifer_stationary_measure_is_swap_symmetric() {
    let c = kifer_family(2.0, 0.5).unwrap();
    let eta = solve(&c, 10_000, 5);
    let h = directional_mass(&eta, &ProjPoint::real(1.0, 0.0).unwrap(), FRAC_PI_4 - 1e-9);
    let v = directional_mass(&eta, &ProjPoint::real(0.0, 1.0).unwrap(), FRAC_PI_4 - 1e-9);
    assert!((h - v).abs() <= 0.05, "H mass {h}, V mass {v}");
}

#[test]
fn vertical_mass_shrinks_with_the_perturbation() {
    let base = diagonal_base(2.0, P).unwrap();
    let vertical = ProjPoint::real(0.0, 1.0).unwrap();
    let masses: Vec<f64> = [0.2, 0.1, 0.05, 0.02]
        .iter()
        .map(|&g| {
            let c = PerturbationSpec::default_matrix(2).apply(&base, g).unwrap();
            directional_mass(&solve(&c, 10_000, 6), &vertical, FRAC_PI_4)
        })
        .collect();
    assert!(masses.windows(2).all(|w| w[1] < w[0]), "{masses:?}");
}

#[test]
fn angle_experiment_trivial_cases() {
    let base = diagonal_base(2.0, P).unwrap();
    let other = PerturbationSpec::default_matrix(2)
        .apply(&base, 0.2)
        .unwrap();
    let wide = angle_convergence_experiment(&base, &other, FRAC_PI_2, 50, 200, 1).unwrap();
    assert_eq!(wide.fraction, 1.0);
    let same = angle_convergence_experiment(&other, &other, 1e-12, 50, 200, 1).unwrap();
    assert_eq!(same.fraction, 1.0);
}

#[test]
fn unstable_directions_agree_with_the_frame_of_the_unperturbed_cocycle() {
    let base = diagonal_base(2.0, P).unwrap();
    let close = PerturbationSpec::default_matrix(2)
        .apply(&base, 1e-4)
        .unwrap();
    let e = angle_convergence_experiment(&base, &close, 0.2, 100, 500, 4).unwrap();
    assert!(e.fraction > 0.9, "fraction {}", e.fraction);
}

#[test]
fn construction_exponents_collapse() {
    let lambda_a = build_construction(2.0, 1, P).unwrap().unperturbed_lambda();
    assert!((lambda_a - target()).abs() < 1e-15);
    let a = estimate_extremal_mc(&diagonal_base(2.0, P).unwrap(), 100_000, 32, 8).unwrap();
    assert!((a.lambda_plus - lambda_a).abs() <= 3.0 * a.stderr_plus);
    for k in [1, 2] {
        let c = build_construction(2.0, k, P).unwrap();
        let e = vanishing_exponent_check(&c, 200_000, 8, 8).unwrap();
        assert!(e.lambda_plus < 0.5 * lambda_a, "k = {k}: {}", e.lambda_plus);
    }
}

#[test]
fn induced_exponent_of_the_perturbed_cocycle_vanishes() {
    let c = build_construction(2.0, 1, P).unwrap();
    let r = induced_return_experiment(&c, InducedTarget::Perturbed, 1_000_000, 9).unwrap();
    assert!(r.induced_lambda.abs() <= 3.0 * r.induced_stderr, "{r:?}");
    assert!((r.mean_return - 1.0 / c.cylinder_measure()).abs() < 0.1);
}

#[test]
fn kifer_crossover_decays_with_length() {
    let rows = kifer_crossover(2.0, 0.99, &[1_000, 100_000, 10_000_000], 8, 10).unwrap();
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda_plus).collect();
    assert!(
        lambdas[1..]
            .iter()
            .all(|&l| l < 0.02 && 5.0 * l < lambdas[0]),
        "{lambdas:?}"
    );
}

#[test]
fn rotation_perturbation_of_kifer_tends_to_zero() {
    let base = kifer_family(2.0, 0.5).unwrap();
    let budgets = Budgets {
        n_steps: 100_000,
        n_trials: 16,
    };
    let sweep = run_continuity_sweep(
        &base,
        &PerturbationSpec::rotation(2),
        &[0.2, 0.1, 0.05],
        budgets,
        11,
    )
    .unwrap();
    let lambdas: Vec<f64> = sweep.rows.iter().map(|r| r.lambda_plus.abs()).collect();
    assert!(lambdas.windows(2).all(|w| w[1] < w[0]), "{lambdas:?}");
    assert!(lambdas[3] < 0.02, "{lambdas:?}");
}

#[test]
fn support_jitter_approaches_the_base_exponent() {
    let base = diagonal_base(2.0, P).unwrap();
    let budgets = Budgets {
        n_steps: 100_000,
        n_trials: 32,
    };
    let third = 1.0 / 3.0;
    let sweep = run_support_jitter(
        &base,
        &[0.1, 0.05, 0.01],
        &[third, third, third],
        budgets,
        12,
    )
    .unwrap();
    let dev: Vec<f64> = sweep
        .rows
        .iter()
        .map(|r| (r.lambda_plus - target()).abs())
        .collect();
    let last = sweep.rows.last().unwrap();
    assert!(dev[2] <= dev[0] + 2.0 * last.stderr_plus, "{dev:?}");
    assert!(dev[2] <= 3.0 * last.stderr_plus + 1e-2, "{dev:?}");
}

#[test]
fn uneven_split_without_jitter_keeps_the_exponent() {
    let base = diagonal_base(2.0, P).unwrap();
    let split = jitter_support(&base, 0.0, &[0.5, 0.3, 0.2]).unwrap();
    assert_eq!(split.len(), 6);
    let a = estimate_extremal_mc(&base, 100_000, 32, 13).unwrap();
    let b = estimate_extremal_mc(&split, 100_000, 32, 14).unwrap();
    assert!((a.lambda_plus - b.lambda_plus).abs() <= 3.0 * (a.stderr_plus + b.stderr_plus));
}

#[test]
fn stationary_measure_of_hyperbolic_matrix_sits_at_eigendirection() {
    let c = FiniteCocycle::constant(Mat2C::real(2.0, 1.0, 0.0, 0.5)).unwrap();
    let eta = solve(&c, 1_000, 15);
    let h = ProjPoint::real(1.0, 0.0).unwrap();
    let mean_angle = eta.integrate(|p| angle_between(p, &h));
    assert!(mean_angle < 1e-3, "{mean_angle}");
}
