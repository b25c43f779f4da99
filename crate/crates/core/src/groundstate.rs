//! The explicit ground state
//!
//! ```text
//! W(r) = (1 + r^{2−b} / ((N−b)(N−2)))^{−(N−2)/(2−b)},   ΔW + r^{−b} W^{α+1} = 0,
//! ```
//!
//! its variational constants `c = ‖∇W‖²`, `C₁ = c^{−α/2}`, `E(W) = αc/(2(α+2))`,
//! and the energy-trapping and coercivity functionals built on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{InlsError, Result};
use crate::field::{gradient_sq_integral, sphere_area, weighted_potential_integral, FieldState, Grid, SingularWeight};
use crate::model::{ModelParams, Number, Regime, Sign};
use crate::quadrature::{integrate, integrate_to_infinity};

use std::sync::Arc;

/// Largest accepted quadrature error estimate.
pub const QUADRATURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundStateProfile {
    dimension: u32,
    b: f64,
    alpha: f64,
    // (N − b)(N − 2)
    k: f64,
}

impl GroundStateProfile {
    pub fn new(dimension: u32, b: f64) -> Result<Self> {
        if dimension < 3 {
            return Err(InlsError::DimensionUnsupported(
                dimension,
                "the ground state needs N >= 3",
            ));
        }
        if !(0.0..2.0).contains(&b) {
            return Err(InlsError::range("groundstate", format!("b = {b} outside [0, 2)")));
        }
        let n = dimension as f64;
        Ok(Self {
            dimension,
            b,
            alpha: (4.0 - 2.0 * b) / (n - 2.0),
            k: (n - b) * (n - 2.0),
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn s(&self, r: f64) -> f64 {
        r.powf(2.0 - self.b) / self.k
    }

    // q = (N − b)/(2 − b)
    fn q(&self) -> f64 {
        (self.dimension as f64 - self.b) / (2.0 - self.b)
    }

    pub fn w(&self, r: f64) -> f64 {
        let n = self.dimension as f64;
        (1.0 + self.s(r)).powf(-(n - 2.0) / (2.0 - self.b))
    }

    /// W'(r) = −r^{1−b}(1+s)^{−q}/(N−b).
    pub fn dw(&self, r: f64) -> f64 {
        let n = self.dimension as f64;
        -r.powf(1.0 - self.b) * (1.0 + self.s(r)).powf(-self.q()) / (n - self.b)
    }

    /// W''(r), differentiated from the closed form of W'.
    pub fn d2w(&self, r: f64) -> f64 {
        let n = self.dimension as f64;
        let b = self.b;
        let base = 1.0 + self.s(r);
        let q = self.q();
        -(1.0 - b) * r.powf(-b) * base.powf(-q) / (n - b) + r.powf(2.0 - 2.0 * b) * base.powf(-q - 1.0) / self.k
    }

    /// W'' + (N−1)W'/r.
    pub fn laplacian(&self, r: f64) -> f64 {
        self.d2w(r) + (self.dimension as f64 - 1.0) * self.dw(r) / r
    }

    /// |ΔW + r^{−b} W^{α+1}|.
    pub fn residual(&self, r: f64) -> f64 {
        (self.laplacian(r) + r.powf(-self.b) * self.w(r).powf(self.alpha + 1.0)).abs()
    }

    /// W sampled on a grid, without any cutoff.
    pub fn sample(&self, grid: Arc<Grid>) -> Result<FieldState> {
        if grid.ambient_dimension() != self.dimension {
            return Err(InlsError::Grid(format!(
                "grid lives in dimension {}, W in {}",
                grid.ambient_dimension(),
                self.dimension
            )));
        }
        Ok(FieldState::from_fn(grid, |x| {
            Complex64::new(self.w((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()), 0.0)
        }))
    }

    /// W·χ, where χ = 1 on |x| ≤ inner, falls to 0 on [inner, outer] along a
    /// quintic smoothstep, and vanishes beyond.
    pub fn sample_truncated(&self, grid: Arc<Grid>, inner: f64, outer: f64) -> Result<FieldState> {
        if !(0.0 < inner && inner < outer) {
            return Err(InlsError::Domain(format!(
                "cutoff radii {inner}, {outer} must satisfy 0 < inner < outer"
            )));
        }
        let mut u = self.sample(grid)?;
        let grid = u.grid().clone();
        for (i, z) in u.samples_mut().iter_mut().enumerate() {
            let r = grid.radius_sq(i).sqrt();
            *z *= 1.0 - smoothstep((r - inner) / (outer - inner));
        }
        Ok(u)
    }
}

/// 6t⁵ − 15t⁴ + 10t³ on [0, 1], clamped outside.
pub(crate) fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Evaluates W(r) for the profile.
pub fn eval_w(profile: &GroundStateProfile, r: f64) -> f64 {
    profile.w(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalConstants {
    pub dimension: u32,
    pub b: f64,
    pub alpha: f64,
    /// ‖∇W‖².
    pub c: f64,
    /// Sharp constant of P(u) ≤ C₁‖∇u‖^{α+2}.
    pub c1: f64,
    /// E(W).
    pub e_w: f64,
    /// P(W), an independent quadrature that must reproduce `c`.
    pub potential: f64,
    pub quadrature_error: f64,
}

fn half_line(f: impl Fn(f64) -> f64 + Copy, split: f64) -> Result<(f64, f64)> {
    let inner = integrate(f, 0.0, split, 1e-15, 1e-14)?;
    let outer = integrate_to_infinity(f, split, 1e-15, 1e-14)?;
    Ok((inner.value + outer.value, inner.error + outer.error))
}

/// c, C₁ and E(W) for `(N, b)` in the validated range `N ∈ {3,4,5}`,
/// `0 < b ≤ min{(6−N)/2, 4/N}`.
pub fn compute_constants(dimension: u32, b: impl Into<Number>) -> Result<VariationalConstants> {
    let b = b.into();
    let params = ModelParams::critical(dimension, b, Sign::Focusing)?;
    params.validate(Regime::Scattering)?;
    constants_for(dimension, b.value())
}

/// Same quadratures without the range check; N ≥ 3 and 0 ≤ b < 2.
pub fn constants_for(dimension: u32, b: f64) -> Result<VariationalConstants> {
    let profile = GroundStateProfile::new(dimension, b)?;
    let n = dimension as f64;
    let alpha = profile.alpha;
    let sigma = sphere_area(dimension);
    // s = 1 separates the core from the algebraic tail
    let split = profile.k.powf(1.0 / (2.0 - b));

    let (kin, kin_err) = half_line(
        |r| {
            let d = profile.dw(r);
            d * d * r.powf(n - 1.0)
        },
        split,
    )?;
    let (pot, pot_err) = half_line(|r| r.powf(n - 1.0 - b) * profile.w(r).powf(alpha + 2.0), split)?;

    let c = sigma * kin;
    let potential = sigma * pot;
    let quadrature_error = sigma * kin_err.max(pot_err);
    if quadrature_error > QUADRATURE_TOL {
        return Err(InlsError::Quadrature {
            estimate: quadrature_error,
            tolerance: QUADRATURE_TOL,
        });
    }
    Ok(VariationalConstants {
        dimension,
        b,
        alpha,
        c,
        c1: c.powf(-alpha / 2.0),
        e_w: alpha * c / (2.0 * (alpha + 2.0)),
        potential,
        quadrature_error,
    })
}

/// F(y) = y/2 − c^{−α/2} y^{(α+2)/2}/(α+2), the energy lower bound in terms
/// of y = ‖∇u‖².
pub fn trapping_function(y: f64, consts: &VariationalConstants, alpha: f64) -> f64 {
    0.5 * y - consts.c.powf(-alpha / 2.0) * y.powf((alpha + 2.0) / 2.0) / (alpha + 2.0)
}

/// The root y* ∈ [0, c] of F(y) = E0.
pub fn trapping_bound(e0: f64, consts: &VariationalConstants, alpha: f64) -> Result<f64> {
    if e0.is_nan() || e0 < 0.0 {
        return Err(InlsError::Domain(format!("trapping bound needs E0 >= 0, got {e0}")));
    }
    if e0 > consts.e_w {
        return Err(InlsError::ThresholdExceeded {
            energy: e0,
            limit: consts.e_w,
        });
    }
    if e0 == 0.0 {
        return Ok(0.0);
    }
    let f = |y| trapping_function(y, consts, alpha);
    if e0 >= f(consts.c) {
        return Ok(consts.c);
    }
    let (mut lo, mut hi) = (0.0, consts.c);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < e0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if (f(hi) - e0).abs() < (f(lo) - e0).abs() {
        hi
    } else {
        lo
    })
}

/// δ = 1 − (1 − δ₀)^α.
pub fn coercivity_gap(delta0: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta0) {
        return Err(InlsError::Domain(format!("delta0 = {delta0} outside [0, 1]")));
    }
    Ok(1.0 - (1.0 - delta0).powf(alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpInequalityReport {
    /// P(u).
    pub potential: f64,
    /// C₁‖∇u‖^{α+2}.
    pub bound: f64,
    /// `None` for the zero field.
    pub ratio: Option<f64>,
}

/// Compares P(u) against C₁‖∇u‖^{α+2}, using the unregularized weight.
pub fn sharp_inequality_check(u: &FieldState, consts: &VariationalConstants) -> Result<SharpInequalityReport> {
    let weight = SingularWeight::new(u.grid().clone(), consts.b, 0.0)?;
    sharp_inequality_with(u, &weight, consts)
}

pub fn sharp_inequality_with(
    u: &FieldState,
    weight: &SingularWeight,
    consts: &VariationalConstants,
) -> Result<SharpInequalityReport> {
    let potential = weighted_potential_integral(u, weight, consts.alpha)?;
    let kinetic = gradient_sq_integral(u);
    let bound = consts.c1 * kinetic.powf((consts.alpha + 2.0) / 2.0);
    let ratio = (bound > 0.0).then(|| potential / bound);
    Ok(SharpInequalityReport {
        potential,
        bound,
        ratio,
    })
}
