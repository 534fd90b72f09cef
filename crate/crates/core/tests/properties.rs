use lyalab::cocycle::{cocycle_distance, FiniteCocycle};
use lyalab::exponents::{enumeration_upper_bound, estimate_extremal_mc, furstenberg_integral};
use lyalab::projective::{
    angle_between, mobius_apply, operator_norm, proj_apply, smallest_singular, ExtComplex, Mat2C,
    ProjPoint,
};
use lyalab::stationary::{solve_stationary, transfer_step, ParticleMeasure};
use lyalab::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix() -> impl Strategy<Value = Mat2C> {
    [complex(), complex(), complex(), complex()]
        .prop_map(|[a, b, c, d]| Mat2C::new(a, b, c, d))
        .prop_filter("well conditioned", |m| {
            m.det().norm() > 0.1 && m.det().norm() > 1e-3 * m.frobenius_sq()
        })
}

fn point() -> impl Strategy<Value = ProjPoint> {
    (complex(), complex()).prop_filter_map("nonzero", |(a, b)| ProjPoint::from_vector([a, b]))
}

fn weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0f64, m).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    })
}

fn cocycle(m: usize) -> impl Strategy<Value = FiniteCocycle> {
    (prop::collection::vec(matrix(), m), weights(m))
        .prop_map(|(ms, w)| FiniteCocycle::new(ms, w).unwrap())
}

fn close(a: &ProjPoint, b: &ProjPoint, tol: f64) -> bool {
    angle_between(a, b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mobius_matches_projective_action(m in matrix(), z in complex()) {
        let v = ProjPoint::from_chart(ExtComplex::Finite(z));
        let via_proj = proj_apply(&m, &v).unwrap().chart();
        let via_mobius = mobius_apply(&m, ExtComplex::Finite(z)).unwrap();
        prop_assert!(via_proj.chordal_distance(&via_mobius) <= 1e-9);
    }

    #[test]
    fn mobius_at_infinity(m in matrix()) {
        let via_proj = proj_apply(&m, &ProjPoint::from_chart(ExtComplex::Infinity)).unwrap().chart();
        let via_mobius = mobius_apply(&m, ExtComplex::Infinity).unwrap();
        prop_assert!(via_proj.chordal_distance(&via_mobius) <= 1e-9);
    }

    #[test]
    fn operator_norm_is_submultiplicative(a in matrix(), b in matrix()) {
        prop_assert!(operator_norm(&(a * b)) <= operator_norm(&a) * operator_norm(&b) * (1.0 + 1e-12));
    }

    #[test]
    fn singular_values_multiply_to_det(m in matrix()) {
        let product = operator_norm(&m) * smallest_singular(&m);
        prop_assert!((product - m.det().norm()).abs() <= 1e-10 * m.frobenius_sq());
    }

    #[test]
    fn angle_is_a_metric(u in point(), v in point(), w in point()) {
        let (uv, vw, uw) = (angle_between(&u, &v), angle_between(&v, &w), angle_between(&u, &w));
        prop_assert!(uw <= uv + vw + 1e-12);
        prop_assert!((uv - angle_between(&v, &u)).abs() <= 1e-12);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&uv));
        prop_assert!(angle_between(&u, &u) <= 1e-7);
    }

    #[test]
    fn action_composes(a in matrix(), b in matrix(), v in point()) {
        let stepwise = proj_apply(&a, &proj_apply(&b, &v).unwrap()).unwrap();
        let joint = proj_apply(&(a * b), &v).unwrap();
        prop_assert!(close(&stepwise, &joint, 1e-7));
    }

    #[test]
    fn sphere_chart_round_trip(v in point()) {
        prop_assert!(close(&ProjPoint::from_sphere(v.sphere()), &v, 1e-7));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cocycle_distance_is_a_pseudometric(a in cocycle(3), b in cocycle(3), c in cocycle(3)) {
        let d = |x: &FiniteCocycle, y: &FiniteCocycle| cocycle_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn transfer_conserves_mass(c in cocycle(3), seed in any::<u64>()) {
        let eta = ParticleMeasure::random(64, seed);
        let pushed = transfer_step(&c, &eta).unwrap();
        prop_assert!((pushed.total_mass() - 1.0).abs() <= 1e-10);
        prop_assert_eq!(pushed.len(), 3 * 64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn upper_bounds_are_subadditive(c in cocycle(2)) {
        let a: Vec<f64> = (1..=8).map(|n| n as f64 * enumeration_upper_bound(&c, n).unwrap()).collect();
        for m in 1..8 {
            for n in 1..=8 - m {
                prop_assert!(a[m + n - 1] <= a[m - 1] + a[n - 1] + 1e-10);
            }
        }
    }

    #[test]
    fn conjugation_preserves_exponents(c in cocycle(2), p in matrix(), seed in any::<u64>()) {
        const N: usize = 4000;
        let conj = c.conjugate(&p).unwrap();
        let e = estimate_extremal_mc(&c, N, 4, seed).unwrap();
        let f = estimate_extremal_mc(&conj, N, 4, seed).unwrap();
        let kappa = (operator_norm(&p) / smallest_singular(&p)).ln();
        prop_assert!((e.lambda_plus - f.lambda_plus).abs() <= 2.0 * kappa / N as f64 + 1e-9);
        prop_assert!((e.lambda_minus - f.lambda_minus).abs() <= 2.0 * kappa / N as f64 + 1e-9);
    }

    #[test]
    fn scaling_shifts_exponents(c in cocycle(2), s in complex(), seed in any::<u64>()) {
        prop_assume!(s.norm() > 0.1);
        let scaled = FiniteCocycle::new(
            c.matrices().iter().map(|m| m.scale(s)).collect(),
            lyalab::Cocycle::weights(&c).to_vec(),
        ).unwrap();
        let e = estimate_extremal_mc(&c, 2000, 4, seed).unwrap();
        let f = estimate_extremal_mc(&scaled, 2000, 4, seed).unwrap();
        prop_assert!((f.lambda_plus - e.lambda_plus - s.norm().ln()).abs() <= 1e-9);
        prop_assert!((f.lambda_minus - e.lambda_minus - s.norm().ln()).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn furstenberg_lies_between_exponents(c in cocycle(2), seed in any::<u64>()) {
        let eta = match solve_stationary(&c, 1000, 64, 1e-4, seed) {
            Ok(s) => s.measure,
            Err(Error::NotConverged { best, .. }) => *best,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let f = furstenberg_integral(&c, &eta).unwrap();
        let e = estimate_extremal_mc(&c, 20_000, 16, seed).unwrap();
        let tol = 0.02 + 3.0 * (e.stderr_plus + e.stderr_minus);
        prop_assert!(f >= e.lambda_minus - tol && f <= e.lambda_plus + tol,
            "F = {f}, λ₋ = {}, λ₊ = {}", e.lambda_minus, e.lambda_plus);
    }
}
