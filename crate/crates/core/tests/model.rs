use std::f64::consts::PI;

use inls_core::field::{hdot1_norm_sq, make_grid, FieldState, GridSpec};
use inls_core::model::{
    b_ceiling, b_ceiling_exact, derive_alpha, exponent_set, is_admissible_pair, scaling_transform, ModelParams, Number,
    Sign,
};
use inls_core::InlsError;
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian(grid: std::sync::Arc<inls_core::field::Grid>, s: f64) -> FieldState {
    FieldState::from_fn(grid, move |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::new((-r2 / (2.0 * s * s)).exp(), 0.0)
    })
}

proptest! {
    #[test]
    fn critical_index_is_one_in_range(n in 3u32..=5, num in 1i64..=48) {
        // b = num/36 covers the rational grid below every ceiling
        let b = Number::ratio(num, 36);
        prop_assume!(b.value() <= b_ceiling(n).unwrap() + 1e-15);
        let p = ModelParams::critical(n, b, Sign::Focusing).unwrap();
        prop_assert!((p.critical_index() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(p.critical_index_exact(), Number::int(1));
        prop_assert!((p.alpha() - derive_alpha(n, b.value()).unwrap()).abs() <= 1e-15);
    }

    #[test]
    fn critical_index_float_b(n in 3u32..=5, frac in 0.001f64..1.0) {
        let b = frac * b_ceiling(n).unwrap();
        let p = ModelParams::critical(n, Number::float(b), Sign::Defocusing).unwrap();
        prop_assert!((p.critical_index() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exponent_pair_is_admissible(n in 3u32..=5, num in 1i64..=48) {
        let b = Number::ratio(num, 36);
        prop_assume!(b.value() <= b_ceiling(n).unwrap() + 1e-15);
        let p = ModelParams::critical(n, b, Sign::Focusing).unwrap();
        let e = exponent_set(&p).unwrap();
        prop_assert!(is_admissible_pair(e.q0, e.r0, n));
        // exact identity, not just within tolerance
        let lhs = Number::int(2).div(e.q0).unwrap().add(Number::int(n as i64).div(e.r0).unwrap());
        prop_assert_eq!(lhs, Number::ratio(n as i64, 2));
    }
}

#[test]
fn ceilings_are_exact() {
    assert_eq!(b_ceiling_exact(3).unwrap(), Number::ratio(4, 3));
    assert_eq!(b_ceiling_exact(4).unwrap(), Number::int(1));
    assert_eq!(b_ceiling_exact(5).unwrap(), Number::ratio(1, 2));
    assert!(matches!(b_ceiling(6), Err(InlsError::Range { .. })));
}

#[test]
fn three_one_exponents() {
    let p = ModelParams::critical(3, 1, Sign::Focusing).unwrap();
    let e = exponent_set(&p).unwrap();
    assert_eq!(e.q0, Number::int(5));
    assert_eq!(e.r0, Number::ratio(30, 11));
    assert_eq!(e.rbar, Number::int(10));
    // independent float check of 2/5 + 3·11/30 = 3/2
    assert!((2.0f64 / 5.0 + 3.0 * 11.0 / 30.0 - 1.5).abs() < 1e-15);
    assert!(is_admissible_pair(f64::INFINITY, Number::int(2), 3));
    assert!(!is_admissible_pair(2.0, Number::int(7), 3));
}

#[test]
fn hdot1_norm_is_scale_invariant() {
    let grid = make_grid(GridSpec::cartesian(3, 128, 16.0)).unwrap();
    let p = ModelParams::critical(3, 1, Sign::Focusing).unwrap();
    assert_eq!(p.scaling_exponent(), 0.5);
    for lambda in [0.25f64, 0.5, 1.0, 2.0, 4.0] {
        // input width √λ keeps both input and output resolved in the box
        let s = lambda.sqrt();
        let u = gaussian(grid.clone(), s);
        let before = hdot1_norm_sq(&u);
        let analytic = 1.5 * PI.powf(1.5) * s;
        assert!(
            (before - analytic).abs() <= 1e-9 * analytic,
            "λ = {lambda}: {before} vs {analytic}"
        );
        let v = scaling_transform(&u, lambda, &p).unwrap();
        let after = hdot1_norm_sq(&v);
        assert!(
            (after.sqrt() - before.sqrt()).abs() <= 1e-8 * before.sqrt(),
            "λ = {lambda}: {before} → {after}"
        );
        // the output is the Gaussian of width s/λ, up to the amplitude λ^{1/2}
        let expected = gaussian(grid.clone(), s / lambda);
        let mut scaled = expected.clone();
        scaled.scale(lambda.sqrt());
        let dist = v.l2_distance(&scaled).unwrap();
        assert!(
            dist <= 1e-8 * inls_core::field::mass(&scaled).sqrt(),
            "λ = {lambda}: L² distance {dist}"
        );
    }
}

#[test]
fn scaling_identity_and_zero() {
    let grid = make_grid(GridSpec::cartesian(3, 32, 8.0)).unwrap();
    let p = ModelParams::critical(3, 1, Sign::Focusing).unwrap();
    let u = gaussian(grid.clone(), 1.0);
    let v = scaling_transform(&u, 1.0, &p).unwrap();
    assert!(u.l2_distance(&v).unwrap() < 1e-12);
    let z = FieldState::zeros(grid);
    let zs = scaling_transform(&z, 2.0, &p).unwrap();
    assert!(zs.samples().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn scaling_flags_truncation() {
    let grid = make_grid(GridSpec::cartesian(3, 32, 8.0)).unwrap();
    let p = ModelParams::critical(3, 1, Sign::Focusing).unwrap();
    let u = gaussian(grid, 2.0);
    assert!(matches!(
        scaling_transform(&u, 0.25, &p),
        Err(InlsError::Truncation { .. })
    ));
}
