use std::f64::consts::PI;

use inls_core::field::{make_grid, sphere_area, FieldState, GridSpec};
use inls_core::groundstate::{
    compute_constants, constants_for, sharp_inequality_check, trapping_bound, trapping_function, GroundStateProfile,
};
use inls_core::model::Number;
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::beta::beta;

/// c and P(W) reduced to Beta integrals by s = r^{2−b}/((N−b)(N−2)).
fn beta_oracle(n: u32, b: f64) -> (f64, f64) {
    let nf = n as f64;
    let k = (nf - b) * (nf - 2.0);
    let p = (nf + 2.0 - 2.0 * b) / (2.0 - b);
    let q = (nf - b) / (2.0 - b);
    let sigma = sphere_area(n);
    let c = sigma * k.powf(p) / ((nf - b).powi(2) * (2.0 - b)) * beta(p, (nf - 2.0) / (2.0 - b));
    let pot = sigma * k.powf(q) / (2.0 - b) * beta(q, q);
    (c, pot)
}

fn validated_grid() -> Vec<(u32, Number)> {
    let mut out = Vec::new();
    for n in 3..=5u32 {
        for b in [
            Number::ratio(1, 4),
            Number::ratio(1, 2),
            Number::ratio(3, 4),
            Number::int(1),
        ] {
            let ceiling = inls_core::model::b_ceiling_exact(n).unwrap();
            if b.compare(&ceiling).is_le() {
                out.push((n, b));
            }
        }
    }
    out.push((3, Number::ratio(4, 3)));
    out
}

#[test]
fn three_one_matches_eight_pi_over_three() {
    let k = compute_constants(3, 1).unwrap();
    let (oracle, _) = beta_oracle(3, 1.0);
    assert!((oracle - 8.0 * PI / 3.0).abs() < 1e-12);
    assert!((k.c - oracle).abs() <= 1e-10 * oracle);
    assert!((k.e_w - 2.094395).abs() < 1e-6);
    assert!((k.c1 - 0.1193662).abs() < 1e-7);
}

#[test]
fn constants_agree_across_validated_grid() {
    for (n, b) in validated_grid() {
        let k = compute_constants(n, b).unwrap();
        let (c_oracle, p_oracle) = beta_oracle(n, b.value());
        assert!((k.c - c_oracle).abs() <= 1e-9 * c_oracle, "c at ({n}, {b})");
        assert!((k.potential - p_oracle).abs() <= 1e-9 * p_oracle, "P at ({n}, {b})");
        assert!((k.c - k.potential).abs() <= 1e-8 * k.c, "c vs P at ({n}, {b})");
        let direct = 0.5 * k.c - k.potential / (k.alpha + 2.0);
        assert!((direct - k.e_w).abs() <= 1e-10 * k.e_w, "E(W) at ({n}, {b})");
        assert!((k.c1 - k.c.powf(-k.alpha / 2.0)).abs() <= 1e-10 * k.c1);
        assert!(k.quadrature_error <= 1e-9);
    }
}

#[test]
fn elliptic_residual_on_log_grid() {
    for (n, b) in validated_grid() {
        let w = GroundStateProfile::new(n, b.value()).unwrap();
        for i in 0..=600 {
            let r = 10f64.powf(-3.0 + i as f64 / 100.0);
            let tol = 1e-8 * (1.0 + r.powf(-b.value()));
            assert!(w.residual(r) <= tol, "({n}, {b}) r = {r}: {}", w.residual(r));
        }
    }
}

#[test]
fn trapping_bound_at_half_energy_matches_dense_scan() {
    let k = compute_constants(3, 1).unwrap();
    let e0 = 0.5 * k.e_w;
    let y = trapping_bound(e0, &k, 2.0).unwrap();
    assert!(y > 0.0 && y < k.c);
    assert!((trapping_function(y, &k, 2.0) - e0).abs() <= 1e-12);
    let m = 1_000_000;
    let scan = (0..=m)
        .map(|i| k.c * i as f64 / m as f64)
        .find(|&s| trapping_function(s, &k, 2.0) >= e0)
        .unwrap();
    assert!((scan - y).abs() <= k.c / m as f64);
}

#[test]
fn sampled_w_nearly_saturates_sharp_inequality() {
    // W ~ 2/r, so the box must be wide for the truncation to be harmless
    let k = compute_constants(3, 1).unwrap();
    let grid = make_grid(GridSpec::radial(3, 1 << 20, 20_000.0)).unwrap();
    let w = GroundStateProfile::new(3, 1.0).unwrap();
    let u = w.sample_truncated(grid, 5_000.0, 10_000.0).unwrap();
    let report = sharp_inequality_check(&u, &k).unwrap();
    let ratio = report.ratio.unwrap();
    assert!((0.99..=1.0 + 1e-6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn off_center_gaussian_is_strictly_below() {
    let k = compute_constants(3, 1).unwrap();
    let grid = make_grid(GridSpec::cartesian(3, 64, 10.0)).unwrap();
    let u = FieldState::from_fn(grid, |x| {
        let d = (x[0] - 1.5).powi(2) + (x[1] + 0.5).powi(2) + x[2] * x[2];
        Complex64::new((-d / 2.0).exp(), 0.0)
    });
    let ratio = sharp_inequality_check(&u, &k).unwrap().ratio.unwrap();
    assert!(ratio < 1.0, "ratio {ratio}");
}

#[test]
fn constants_for_accepts_unvalidated_b() {
    // outside the validated range but still a legitimate ground state
    let k = constants_for(4, 1.5).unwrap();
    let (c, _) = beta_oracle(4, 1.5);
    assert!((k.c - c).abs() <= 1e-9 * c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trapping_bound_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let k = compute_constants(3, 1).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let y_lo = trapping_bound(lo * k.e_w, &k, 2.0).unwrap();
        let y_hi = trapping_bound(hi * k.e_w, &k, 2.0).unwrap();
        prop_assert!(y_lo <= y_hi);
        prop_assert!((0.0..=k.c).contains(&y_hi));
    }

    #[test]
    fn gaussians_never_beat_the_sharp_constant(
        width in 0.6f64..2.0,
        shift in -1.5f64..1.5,
        phase in 0.0f64..3.0,
    ) {
        let k = compute_constants(3, 1).unwrap();
        let grid = make_grid(GridSpec::cartesian(3, 32, 8.0)).unwrap();
        let u = FieldState::from_fn(grid, |x| {
            let d = (x[0] - shift).powi(2) + x[1] * x[1] + x[2] * x[2];
            Complex64::from_polar((-d / (2.0 * width * width)).exp(), phase * x[1])
        });
        let ratio = sharp_inequality_check(&u, &k).unwrap().ratio.unwrap();
        prop_assert!(ratio < 1.0);
    }
}
