use std::sync::Arc;

use inls_core::diagnostics::{
    gn_functional, scattering_proxy, snorm_accumulate, v_r_series, virial_ma, virial_rhs, virial_rhs_shortcut,
    BumpProfile, DiagnosticsProbe, VirialWeight,
};
use inls_core::evolve::{evolve, linear_substep, EvolveConfig, HaltStatus};
use inls_core::field::{
    gradient_sq_integral, make_grid, mass, weighted_potential_integral, FieldState, Grid, GridSpec, SingularWeight,
};
use inls_core::groundstate::GroundStateProfile;
use inls_core::model::{ModelParams, Sign};
use inls_core::quadrature::integrate;
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian_at(grid: Arc<Grid>, amplitude: f64, width: f64, center: [f64; 3], xi: [f64; 3]) -> FieldState {
    FieldState::from_fn(grid, move |x| {
        let d2: f64 = (0..3).map(|j| (x[j] - center[j]).powi(2)).sum();
        let phase: f64 = (0..3).map(|j| xi[j] * x[j]).sum();
        Complex64::from_polar(amplitude * (-d2 / (2.0 * width * width)).exp(), phase)
    })
}

fn focusing() -> ModelParams {
    ModelParams::critical(3, 1, Sign::Focusing).unwrap()
}

#[test]
fn quadratic_weight_invariants() {
    let grid = make_grid(GridSpec::cartesian(3, 32, 12.0)).unwrap();
    let radius = 5.0;
    let w = VirialWeight::quadratic(radius, grid.clone()).unwrap();
    let plateau = 16.0 * radius * radius / 7.0;
    for i in 0..grid.len() {
        let r2 = grid.radius_sq(i);
        let r = r2.sqrt();
        if r <= radius {
            assert_eq!(w.a()[i], r2);
            assert_eq!(w.laplacian()[i], 6.0);
            assert_eq!(w.bilaplacian()[i], 0.0);
        } else if r >= 2.0 * radius {
            assert!((w.a()[i] - plateau).abs() <= 1e-12 * plateau);
            assert_eq!(w.gradient_at(i), [0.0; 3]);
        }
        assert!(w.radial_second(i) <= 2.0 + 1e-12);
        assert!(w.a()[i] <= plateau * (1.0 + 1e-12));
    }
}

#[test]
fn quadratic_weight_derivatives_scale_with_radius() {
    // max |∂^m a| · R^{m−2} is the same constant for every R
    let grid = make_grid(GridSpec::cartesian(3, 64, 12.0)).unwrap();
    let scaled = |radius: f64| {
        let w = VirialWeight::quadratic(radius, grid.clone()).unwrap();
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (
            sup(w.a()) / radius.powi(2),
            sup(w.laplacian()),
            sup(w.bilaplacian()) * radius.powi(2),
        )
    };
    let (a2, l2, b2) = scaled(2.5);
    let (a5, l5, b5) = scaled(5.0);
    assert!((a2 - a5).abs() <= 1e-12);
    assert!((l2 - l5).abs() <= 1e-12);
    // the bilaplacian peaks inside the annulus, so sampling moves it a little
    assert!((b2 / b5 - 1.0).abs() < 0.2, "{b2} vs {b5}");
}

#[test]
fn bump_weight_invariants() {
    let grid = make_grid(GridSpec::cartesian(3, 64, 12.0)).unwrap();
    let w = VirialWeight::bump(1.0, grid.clone()).unwrap();
    for i in 0..grid.len() {
        let r2 = grid.radius_sq(i);
        if r2 <= 1.0 {
            assert_eq!(w.a()[i], 0.5 * r2);
        }
        if r2 >= 100.0 {
            assert_eq!(w.a()[i], 0.0);
        }
        assert!(w.radial_second(i) <= 1.0 + 1e-10);
    }
}

#[test]
fn bump_profile_on_fine_mesh() {
    let phi = BumpProfile::new();
    assert_eq!(phi.phi(0.5), 0.125);
    let max_slope = (0..=120_000)
        .map(|k| {
            let r = k as f64 * 1e-4;
            let d = phi.derivs(r);
            assert!(d[2] <= 1.0 + 1e-10, "φ''({r}) = {}", d[2]);
            if r >= 10.0 {
                assert_eq!(d, [0.0; 5]);
            }
            d[1]
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max_slope > 1.0 && max_slope <= 1.5 + 1e-12);
}

#[test]
fn bump_lobes_solve_the_closure_conditions() {
    // φ'(10) = 0 and φ(10) = 0 give two linear equations for the lobe heights;
    // set them up by quadrature of the shapes and solve directly
    let step = |r: f64| {
        let t: f64 = r - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    };
    let lobe = |c: f64| move |r: f64| (1.0 - ((r - c) / 1.5).powi(2)).powi(3);
    let q = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| integrate(f, a, b, 1e-14, 1e-14).unwrap().value;
    // φ'(10) = 1 + ∫ψ,  φ(10) = 1/2 + 9·1 + ∫(10 − r)ψ  with ψ = φ'' on [1, 10]
    let s0 = q(&step, 1.0, 2.0);
    let s1 = q(&|r| (10.0 - r) * step(r), 1.0, 2.0);
    let (n0, n1) = (q(&lobe(3.5), 2.0, 5.0), q(&|r| (10.0 - r) * lobe(3.5)(r), 2.0, 5.0));
    let (p0, p1) = (q(&lobe(7.5), 6.0, 9.0), q(&|r| (10.0 - r) * lobe(7.5)(r), 6.0, 9.0));
    // 1 + s0 − A n0 + B p0 = 0 ;  1/2 + 9 + s1 − A n1 + B p1 = 0
    let (r0, r1) = (-(1.0 + s0), -(9.5 + s1));
    let det = -n0 * p1 + n1 * p0;
    let a = (r0 * p1 - r1 * p0) / det;
    let b = (-n0 * r1 + n1 * r0) / det;
    let phi = BumpProfile::new();
    assert!((phi.lobes.0 - a).abs() < 1e-10, "{} vs {a}", phi.lobes.0);
    assert!((phi.lobes.1 - b).abs() < 1e-10, "{} vs {b}", phi.lobes.1);
}

#[test]
fn ma_examples() {
    let grid = make_grid(GridSpec::cartesian(3, 64, 12.0)).unwrap();
    let w = VirialWeight::quadratic(5.0, grid.clone()).unwrap();
    let real = gaussian_at(grid.clone(), 1.0, 1.0, [0.0; 3], [0.0; 3]);
    assert!(virial_ma(&real, &w).unwrap().abs() < 1e-12);
    let boosted = gaussian_at(grid.clone(), 1.0, 1.0, [0.0; 3], [0.5, -0.3, 0.2]);
    assert!(virial_ma(&boosted, &w).unwrap().abs() < 1e-10);
    // off-centre boost: M_a = 2∫ξ g²·2x = 4 ξ·x0 ‖g‖²
    let moved = gaussian_at(grid, 1.0, 1.0, [1.0, 0.5, 0.0], [0.5, 0.0, -0.4]);
    let expected = 4.0 * (0.5 * 1.0) * mass(&moved);
    let got = virial_ma(&moved, &w).unwrap();
    assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
}

#[test]
fn four_term_sum_equals_shortcut_in_quadratic_region() {
    let grid = make_grid(GridSpec::cartesian(3, 64, 12.0)).unwrap();
    let sw = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
    let w = VirialWeight::quadratic(5.0, grid.clone()).unwrap();
    for sign in [Sign::Focusing, Sign::Defocusing] {
        let p = ModelParams::critical(3, 1, sign).unwrap();
        for u in [
            gaussian_at(grid.clone(), 0.7, 0.5f64.sqrt(), [0.0; 3], [0.0; 3]),
            gaussian_at(grid.clone(), 0.5, 0.8, [0.5, 0.0, -0.3], [0.4, 0.2, 0.0]),
        ] {
            let rhs = virial_rhs(&u, &w, &sw, &p).unwrap();
            let k = gradient_sq_integral(&u);
            let pot = weighted_potential_integral(&u, &sw, p.alpha()).unwrap();
            let short = virial_rhs_shortcut(k, pot, &p);
            assert!((rhs - short).abs() <= 1e-10 * short.abs(), "{rhs} vs {short}");
            // for (3,1) the shortcut is 8(K − μP)
            assert!((short - 8.0 * (k - p.mu() * pot)).abs() <= 1e-12 * short.abs());
        }
    }
}

/// |ΔM_a/Δt − virial_rhs| at t* = 0.2 by central difference with δ = dt.
fn virial_residual(points: usize, dt: f64) -> f64 {
    let grid = make_grid(GridSpec::cartesian(3, points, 12.0)).unwrap();
    let sw = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
    let w = VirialWeight::quadratic(5.0, grid.clone()).unwrap();
    let p = focusing();
    let u0 = gaussian_at(grid, 0.7, 0.5f64.sqrt(), [0.0; 3], [0.0; 3]);
    let t_star = 0.2;
    let cfg = EvolveConfig::new(dt, t_star + dt);
    let mut probe = DiagnosticsProbe::new(&p, &sw, Some(&w), None);
    let out = evolve(u0, &cfg, &sw, &p, &mut probe).unwrap();
    assert_eq!(out.status, HaltStatus::Completed);
    let s = &probe.samples;
    let n = s.len();
    let dma = (s[n - 1].ma - s[n - 3].ma) / (2.0 * dt);
    (dma - s[n - 2].virial_rhs).abs()
}

#[test]
fn virial_residual_shrinks_under_refinement() {
    let coarse = virial_residual(32, 4e-3);
    let fine = virial_residual(64, 2e-3);
    assert!(coarse / fine >= 3.0, "{coarse:e} → {fine:e}");
}

#[test]
fn samples_satisfy_energy_identity() {
    let grid = make_grid(GridSpec::cartesian(3, 32, 10.0)).unwrap();
    let sw = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
    for sign in [Sign::Focusing, Sign::Defocusing] {
        let p = ModelParams::critical(3, 1, sign).unwrap();
        let mut cfg = EvolveConfig::new(1e-2, 0.5);
        cfg.checkpoint_stride = 5;
        let mut probe = DiagnosticsProbe::new(&p, &sw, None, None);
        evolve(
            gaussian_at(grid.clone(), 1.0, 1.0, [0.0; 3], [0.0; 3]),
            &cfg,
            &sw,
            &p,
            &mut probe,
        )
        .unwrap();
        assert_eq!(probe.samples.len(), 11);
        for s in &probe.samples {
            let e = 0.5 * s.kinetic - p.mu() * s.potential / 4.0;
            assert!((s.energy - e).abs() <= 1e-14 * e.abs().max(1.0));
        }
        let snorm: Vec<f64> = probe.samples.iter().map(|s| s.snorm_cum).collect();
        assert!(snorm.windows(2).all(|p| p[1] >= p[0]));
    }
}

#[test]
fn zero_trajectory_has_zero_vr() {
    let grid = make_grid(GridSpec::cartesian(3, 16, 12.0)).unwrap();
    let sw = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
    let bump = VirialWeight::bump(1.0, grid.clone()).unwrap();
    let p = focusing();
    let mut probe = DiagnosticsProbe::new(&p, &sw, None, Some(&bump));
    evolve(
        FieldState::zeros(grid),
        &EvolveConfig::new(0.1, 1.0),
        &sw,
        &p,
        &mut probe,
    )
    .unwrap();
    let series = v_r_series(&probe.samples, 1.0, &p).unwrap();
    assert!(series.vr.iter().all(|&v| v == 0.0));
    assert!(series.second_derivative.iter().all(|&v| v == 0.0));
    assert_eq!(series.calibrated_c, 0.0);
}

#[test]
fn negative_energy_run_has_concave_vr() {
    // E < 0 forces K − P < −K, so d²V_R/dt² starts negative
    let grid = make_grid(GridSpec::cartesian(3, 64, 12.0)).unwrap();
    let sw = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
    let bump = VirialWeight::bump(1.0, grid.clone()).unwrap();
    let p = focusing();
    let u0 = gaussian_at(grid, 2.5, 1.0, [0.0; 3], [0.0; 3]);
    let mut cfg = EvolveConfig::new(2e-3, 0.3);
    cfg.checkpoint_stride = 2;
    cfg.caps.kinetic_ratio = 5.0;
    let mut probe = DiagnosticsProbe::new(&p, &sw, None, Some(&bump));
    let out = evolve(u0, &cfg, &sw, &p, &mut probe).unwrap();
    assert!(out.status.is_blowup());
    assert!(probe.samples[0].energy < 0.0);
    let series = v_r_series(&probe.samples, 1.0, &p).unwrap();
    // once K grows the R^{-b}K^{3/2} error term of the localized identity takes over
    let k0 = probe.samples[0].kinetic;
    let early: Vec<f64> = series
        .second_derivative
        .iter()
        .zip(&probe.samples[1..])
        .filter(|(_, s)| s.kinetic <= 2.0 * k0)
        .map(|(d, _)| *d)
        .collect();
    assert!(early.len() >= 10);
    assert!(early.iter().all(|&d| d < 0.0), "{early:?}");
    assert!(series.second_derivative.iter().zip(&series.bound).all(|(d, b)| d <= b));
}

#[test]
fn stationary_ground_state_keeps_vr() {
    let grid = make_grid(GridSpec::cartesian(3, 64, 12.0)).unwrap();
    let sw = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
    let bump = VirialWeight::bump(1.0, grid.clone()).unwrap();
    let p = focusing();
    let u0 = GroundStateProfile::new(3, 1.0)
        .unwrap()
        .sample_truncated(grid, 6.0, 11.0)
        .unwrap();
    let mut cfg = EvolveConfig::new(5e-3, 0.5);
    cfg.checkpoint_stride = 10;
    let mut probe = DiagnosticsProbe::new(&p, &sw, None, Some(&bump));
    evolve(u0, &cfg, &sw, &p, &mut probe).unwrap();
    let v0 = probe.samples[0].vr;
    let drift = probe.samples.iter().map(|s| (s.vr - v0).abs() / v0).fold(0.0, f64::max);
    assert!(drift < 1e-2, "V_R drift {drift:e}");
}

#[test]
fn plane_wave_snorm_rate() {
    // free flow only, so |u| stays at the amplitude
    let grid = make_grid(GridSpec::cartesian(3, 16, 4.0)).unwrap();
    let amp: f64 = 0.8;
    let mut u = FieldState::from_fn(grid, move |x| {
        Complex64::from_polar(amp, std::f64::consts::PI / 4.0 * x[0])
    });
    let mut times = vec![0.0];
    let mut values = vec![inls_core::field::lp_integral(&u, 10.0)];
    for k in 1..=10 {
        linear_substep(&mut u, 0.1).unwrap();
        times.push(0.1 * k as f64);
        values.push(inls_core::field::lp_integral(&u, 10.0));
    }
    let series = snorm_accumulate(&times, &values).unwrap();
    let rate = amp.powi(10) * 8.0f64.powi(3);
    for inc in &series.increments {
        assert!((inc / 0.1 - rate).abs() <= 1e-10 * rate);
    }
}

#[test]
fn proxy_vanishes_on_free_flow() {
    let grid = make_grid(GridSpec::cartesian(3, 32, 10.0)).unwrap();
    let u1 = gaussian_at(grid, 1.0, 1.0, [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]);
    assert_eq!(scattering_proxy(&u1, &u1).unwrap(), 0.0);
    let mut u2 = u1.clone();
    linear_substep(&mut u2, 0.7).unwrap();
    u2.set_time(u1.time() + 0.7);
    let scale = gradient_sq_integral(&u1).sqrt();
    assert!(scattering_proxy(&u1, &u2).unwrap() <= 1e-12 * scale);
}

#[test]
fn gn_ratio_is_scale_invariant() {
    let grid = make_grid(GridSpec::cartesian(3, 128, 16.0)).unwrap();
    let ratio = |lambda: f64| {
        // u_λ = λ^{3/2} u(λx) sampled directly
        let u = gaussian_at(grid.clone(), lambda.powf(1.5), 1.2 / lambda, [0.0; 3], [0.0; 3]);
        gn_functional(&u, 3, 2.0).unwrap().ratio.unwrap()
    };
    let base = ratio(1.0);
    for lambda in [0.5, 2.0] {
        let r = ratio(lambda);
        assert!((r - base).abs() <= 1e-8 * base, "λ = {lambda}: {r} vs {base}");
    }
    let zero = gn_functional(&FieldState::zeros(grid), 3, 2.0).unwrap();
    assert_eq!((zero.lhs, zero.rhs, zero.ratio), (0.0, 0.0, None));
}

proptest! {
    #[test]
    fn snorm_is_monotone(values in prop::collection::vec(0.0f64..1e3, 2..40), step in 1e-3f64..1.0) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * step).collect();
        let s = snorm_accumulate(&times, &values).unwrap();
        prop_assert!(s.cumulative.windows(2).all(|p| p[1] >= p[0]));
        prop_assert_eq!(s.increments.len(), values.len() - 1);
    }
}
