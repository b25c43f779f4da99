//! Radial fields `u(r)` on the offset grid `r_i = (i + ½)h`, `h = L/n`.
//!
//! The Laplacian is the conservative second-order stencil
//! `(Δu)_i = [r_{i+½}^{N−1}(u_{i+1} − u_i) − r_{i−½}^{N−1}(u_i − u_{i−1})] / (r_i^{N−1} h²)`
//! with no flux through `r = 0` and `u(L) = 0`. It is self-adjoint for the
//! weights `r_i^{N−1} h`, which is what makes Crank–Nicolson unitary.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FieldState, Grid};
use crate::error::{InlsError, Result};

/// Surface area of the unit sphere in ℝ^N, `2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(dimension: u32) -> f64 {
    match dimension {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        n => {
            // σ_N = 2π σ_{N−2} / (N − 2)
            2.0 * PI * sphere_area(n - 2) / (n - 2) as f64
        }
    }
}

fn ambient(grid: &Grid) -> i32 {
    grid.ambient_dimension() as i32
}

/// Tridiagonal coefficients `(sub, diag, sup)` of the radial Laplacian.
pub fn tridiagonal_laplacian(grid: &Grid) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let h = grid.spacing();
    let p = ambient(grid) - 1;
    let r = grid.axis();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        let scale = 1.0 / (r[i].powi(p) * h * h);
        let lower = if i == 0 { 0.0 } else { (i as f64 * h).powi(p) * scale };
        let outer = ((i + 1) as f64 * h).powi(p) * scale;
        sub[i] = lower;
        if i + 1 < n {
            sup[i] = outer;
            diag[i] = -(lower + outer);
        } else {
            // u(L) = 0 half a cell beyond the last sample
            diag[i] = -(lower + 2.0 * outer);
        }
    }
    (sub, diag, sup)
}

/// ∫|∇u|² as the discrete Dirichlet form `−⟨u, Δ_h u⟩`.
pub(super) fn kinetic(u: &FieldState) -> f64 {
    let grid = u.grid();
    let n = grid.len();
    let h = grid.spacing();
    let p = ambient(grid) - 1;
    let s = u.samples();
    let mut sum = 0.0;
    for i in 0..n - 1 {
        sum += ((i + 1) as f64 * h).powi(p) * (s[i + 1] - s[i]).norm_sqr();
    }
    sum += 2.0 * (n as f64 * h).powi(p) * s[n - 1].norm_sqr();
    super::sphere_area(grid.ambient_dimension()) * sum / h
}

/// Central-difference `u_r` at the samples (even reflection at the origin,
/// odd reflection at `r = L`).
pub(super) fn node_gradient(u: &FieldState) -> Vec<Complex64> {
    let n = u.grid().len();
    let h = u.grid().spacing();
    let s = u.samples();
    (0..n)
        .map(|i| {
            let left = if i == 0 { s[0] } else { s[i - 1] };
            let right = if i + 1 == n { -s[n - 1] } else { s[i + 1] };
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// Complex tridiagonal solver (Thomas algorithm), pre-factorized.
#[derive(Clone, Debug)]
struct Thomas {
    sub: Vec<Complex64>,
    c_prime: Vec<Complex64>,
    denom: Vec<Complex64>,
}

impl Thomas {
    fn new(sub: Vec<Complex64>, diag: Vec<Complex64>, sup: Vec<Complex64>) -> Self {
        let n = diag.len();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let d = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i] * c_prime[i - 1]
            };
            denom[i] = d;
            c_prime[i] = sup[i] / d;
        }
        Self { sub, c_prime, denom }
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        for i in 0..n {
            let prev = if i == 0 { Complex64::new(0.0, 0.0) } else { rhs[i - 1] };
            rhs[i] = (rhs[i] - self.sub[i] * prev) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

/// Crank–Nicolson propagator for `i u_t + Δu = 0` over a fixed step `tau`.
#[derive(Clone, Debug)]
pub struct RadialLaplacian {
    tau: f64,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    solver: Thomas,
}

impl RadialLaplacian {
    pub fn new(grid: &Grid, tau: f64) -> Result<Self> {
        if !grid.is_radial() {
            return Err(InlsError::Unsupported("Crank-Nicolson needs a radial grid"));
        }
        let (sub, diag, sup) = tridiagonal_laplacian(grid);
        // (I − iτ/2 Δ) u⁺ = (I + iτ/2 Δ) u
        let half = Complex64::new(0.0, 0.5 * tau);
        let one = Complex64::new(1.0, 0.0);
        let a_sub = sub.iter().map(|&s| -half * s).collect();
        let a_diag = diag.iter().map(|&d| one - half * d).collect();
        let a_sup = sup.iter().map(|&s| -half * s).collect();
        Ok(Self {
            tau,
            sub,
            diag,
            sup,
            solver: Thomas::new(a_sub, a_diag, a_sup),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn apply(&self, u: &mut [Complex64]) {
        let n = u.len();
        let half = Complex64::new(0.0, 0.5 * self.tau);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut lap = self.diag[i] * u[i];
            if i > 0 {
                lap += self.sub[i] * u[i - 1];
            }
            if i + 1 < n {
                lap += self.sup[i] * u[i + 1];
            }
            rhs[i] = u[i] + half * lap;
        }
        self.solver.solve(&mut rhs);
        u.copy_from_slice(&rhs);
    }
}

/// Cubic Lagrange interpolation of `u(λr)`; even reflection across `r = 0`
/// and zero beyond `r = L`.
pub(super) fn resample_dilated(u: &FieldState, lambda: f64) -> Result<FieldState> {
    let grid = u.grid().clone();
    let n = grid.len();
    let h = grid.spacing();
    let s = u.samples();
    let total = super::mass(u);
    if total > 0.0 && lambda < 1.0 {
        let cut = lambda * grid.half_width();
        let outside = grid.integrate(|i| if grid.axis()[i] > cut { s[i].norm_sqr() } else { 0.0 });
        if outside / total > super::spectral::TRUNCATION_TOL {
            return Err(InlsError::Truncation {
                lost_fraction: outside / total,
            });
        }
    }
    let sample = |j: i64| -> Complex64 {
        if j < 0 {
            s[(-j - 1) as usize]
        } else if (j as usize) < n {
            s[j as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let out = grid
        .axis()
        .iter()
        .map(|&r| {
            let y = lambda * r;
            if y >= grid.half_width() {
                return Complex64::new(0.0, 0.0);
            }
            // position in index units
            let t = y / h - 0.5;
            let j0 = t.floor() as i64;
            let f = t - j0 as f64;
            let (xm, x0, x1, x2) = (-1.0 - f, -f, 1.0 - f, 2.0 - f);
            let wm = x0 * x1 * x2 / -6.0;
            let w0 = xm * x1 * x2 / 2.0;
            let w1 = xm * x0 * x2 / -2.0;
            let w2 = xm * x0 * x1 / 6.0;
            sample(j0 - 1) * wm + sample(j0) * w0 + sample(j0 + 1) * w1 + sample(j0 + 2) * w2
        })
        .collect();
    FieldState::new(grid, out, u.time())
}
