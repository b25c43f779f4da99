//! Functionals evaluated along a trajectory: conserved quantities, the
//! localized virial `M_a = 2 Im ∫ ū ∇u·∇a` and its time derivative,
//! `V_R = ∫ a |u|²`, the scattering size and the interaction-picture
//! scattering proxy.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{InlsError, Result};
use crate::evolve::{Probe, ProbeAction};
use crate::field::{
    abs_pow, forward, gradient, gradient_sq_integral, lp_integral, mass, ordered_sum, sup_abs,
    weighted_potential_integral, FieldState, Grid, SingularWeight,
};
use crate::groundstate::smoothstep;
use crate::model::ModelParams;

/// Column header of the diagnostics CSV.
pub const CSV_HEADER: &str = "t,mass,kinetic,potential,energy,Ma,virial_rhs,VR,snorm_cum,sup_abs,proxy";

// Dense polynomial in a local variable, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// Antiderivative vanishing at t = 0, plus `constant`.
    fn integral(&self, constant: f64) -> Poly {
        let mut out = vec![constant];
        out.extend(self.0.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
        Poly(out)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&0.0) + other.0.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }
}

// 1 − S(t), S the quintic smoothstep
fn falling_step() -> Poly {
    Poly(vec![1.0, 0.0, 0.0, -10.0, 15.0, -6.0])
}

// (1 − ((t − c)/w)²)³ in the local variable t
fn bump(c: f64, w: f64) -> Poly {
    let u = Poly(vec![-c / w, 1.0 / w]);
    let inner = Poly(vec![1.0]).add(&u.mul(&u).scale(-1.0));
    inner.mul(&inner).mul(&inner)
}

/// Piecewise-polynomial radial profile given by its second derivative on
/// each piece; `f` and `f'` are integrated exactly with continuity.
#[derive(Clone, Debug)]
struct Profile {
    knots: Vec<f64>,
    // derivatives 0..=4 per piece, in t = r − knot
    pieces: Vec<[Poly; 5]>,
    tail: f64,
}

impl Profile {
    fn from_second_derivative(start: f64, f0: f64, df0: f64, knots: Vec<f64>, d2: Vec<Poly>) -> Self {
        let mut pieces = Vec::with_capacity(d2.len());
        let (mut f, mut df) = (f0, df0);
        let mut left = start;
        for (p, &right) in d2.into_iter().zip(&knots) {
            let d1 = p.integral(df);
            let d0 = d1.integral(f);
            let d3 = p.derivative();
            let d4 = d3.derivative();
            let h = right - left;
            f = d0.eval(h);
            df = d1.eval(h);
            pieces.push([d0, d1, p, d3, d4]);
            left = right;
        }
        let mut all = vec![start];
        all.extend(knots);
        Self {
            knots: all,
            pieces,
            tail: f,
        }
    }

    /// (f, f', f'', f''', f'''') at r; beyond the last knot f is the tail constant.
    fn derivs(&self, r: f64) -> [f64; 5] {
        let last = *self.knots.last().expect("knots");
        if r >= last {
            return [self.tail, 0.0, 0.0, 0.0, 0.0];
        }
        let k = self.knots.partition_point(|&x| x <= r).max(1) - 1;
        let t = r - self.knots[k];
        let p = &self.pieces[k];
        [p[0].eval(t), p[1].eval(t), p[2].eval(t), p[3].eval(t), p[4].eval(t)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// a = |x|² on |x| ≤ R, constant 16R²/7 beyond 2R.
    QuadraticPlateau,
    /// a = R²φ(|x|/R) with φ = r²/2 on r ≤ 1 and φ = 0 on r ≥ 10 (already on r ≥ 9).
    CompactBump,
}

/// Unit-scale profile of the bump weight (R = 1).
#[derive(Clone, Debug)]
pub struct BumpProfile {
    profile: Profile,
    /// Amplitudes of the negative and positive lobes of φ''.
    pub lobes: (f64, f64),
}

impl BumpProfile {
    /// φ'' = 1 on [0, 1], falls to 0 on [1, 2] along a smoothstep, then a
    /// negative lobe on [2, 5] and a positive one on [6, 9]. The lobe heights
    /// are fixed by φ'(10) = 0 and φ(10) = 0.
    pub fn new() -> Self {
        // ∫(1 − t²)³ over [−1, 1] scaled to half width 1.5
        let m = 48.0 / 35.0;
        // ∫₁² ψ = 1/2 and ∫₁² rψ = 9/14 for the falling step
        // lobes: 1/2 − A m + B m = −1, 9/14 − 3.5 A m + 7.5 B m = −1/2
        let y = (5.25 - 8.0 / 7.0) / 4.0;
        let x = y + 1.5;
        let (a, b) = (x / m, y / m);
        let d2 = vec![
            falling_step(),
            bump(1.5, 1.5).scale(-a),
            Poly(vec![0.0]),
            bump(1.5, 1.5).scale(b),
        ];
        let profile = Profile::from_second_derivative(1.0, 0.5, 1.0, vec![2.0, 5.0, 6.0, 9.0], d2);
        Self { profile, lobes: (a, b) }
    }

    /// (φ, φ', φ'', φ''', φ'''') at r.
    pub fn derivs(&self, r: f64) -> [f64; 5] {
        if r <= 1.0 {
            return [0.5 * r * r, r, 1.0, 0.0, 0.0];
        }
        if r >= 9.0 {
            return [0.0; 5];
        }
        self.profile.derivs(r)
    }

    /// φ(9⁻) as integrated; zero up to rounding.
    pub fn closure_residual(&self) -> f64 {
        self.profile.tail
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.derivs(r)[0]
    }
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self::new()
    }
}

/// Quadratic-plateau profile in units of R: (a, a', a'', a''', a'''')/R^{2−m}.
fn plateau_derivs(s: f64) -> [f64; 5] {
    if s <= 1.0 {
        return [s * s, 2.0 * s, 2.0, 0.0, 0.0];
    }
    if s >= 2.0 {
        return [16.0 / 7.0, 0.0, 0.0, 0.0, 0.0];
    }
    let t = s - 1.0;
    let st = smoothstep(t);
    let s1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let s2 = 60.0 * t - 180.0 * t * t + 120.0 * t * t * t;
    let s3 = 60.0 - 360.0 * t + 360.0 * t * t;
    let t2 = t * t;
    let a =
        1.0 + 2.0 * (t + t2 / 2.0 - 2.5 * t2 * t2 + t2 * t2 * t + 1.5 * t2 * t2 * t2 - 6.0 / 7.0 * t2 * t2 * t2 * t);
    [
        a,
        2.0 * s * (1.0 - st),
        2.0 * (1.0 - st) - 2.0 * s * s1,
        -4.0 * s1 - 2.0 * s * s2,
        -6.0 * s2 - 2.0 * s * s3,
    ]
}

/// Localized virial weight with its derivative fields sampled on a grid.
#[derive(Clone, Debug)]
pub struct VirialWeight {
    kind: WeightKind,
    radius: f64,
    grid: Arc<Grid>,
    a: Vec<f64>,
    // a'(r)/r
    a1: Vec<f64>,
    // a''(r)
    a2: Vec<f64>,
    laplacian: Vec<f64>,
    bilaplacian: Vec<f64>,
    // x·∇a = r a'(r)
    x_dot_grad: Vec<f64>,
}

impl VirialWeight {
    pub fn quadratic(radius: f64, grid: Arc<Grid>) -> Result<Self> {
        Self::build(WeightKind::QuadraticPlateau, radius, grid)
    }

    pub fn bump(radius: f64, grid: Arc<Grid>) -> Result<Self> {
        Self::build(WeightKind::CompactBump, radius, grid)
    }

    fn build(kind: WeightKind, radius: f64, grid: Arc<Grid>) -> Result<Self> {
        let reach = match kind {
            WeightKind::QuadraticPlateau => 2.0,
            WeightKind::CompactBump => 10.0,
        };
        if !(radius > 0.0) || reach * radius >= grid.half_width() {
            return Err(InlsError::Domain(format!(
                "weight of radius {radius} reaches {} but the box half width is {}",
                reach * radius,
                grid.half_width()
            )));
        }
        let n = grid.ambient_dimension() as f64;
        let bump = BumpProfile::new();
        let len = grid.len();
        let mut w = Self {
            kind,
            radius,
            grid: grid.clone(),
            a: vec![0.0; len],
            a1: vec![0.0; len],
            a2: vec![0.0; len],
            laplacian: vec![0.0; len],
            bilaplacian: vec![0.0; len],
            x_dot_grad: vec![0.0; len],
        };
        for i in 0..len {
            let r2 = grid.radius_sq(i);
            let r = r2.sqrt();
            let s = r / radius;
            // (scale of a, inner core value of a1) per kind
            let (d, inner, c) = match kind {
                WeightKind::QuadraticPlateau => (plateau_derivs(s), s <= 1.0, 2.0),
                WeightKind::CompactBump => (bump.derivs(s), s <= 1.0, 1.0),
            };
            if inner {
                // exact on samples: a = c|x|²/2·(2/c)... a = |x|² or |x|²/2
                w.a[i] = 0.5 * c * r2;
                w.a1[i] = c;
                w.a2[i] = c;
                w.laplacian[i] = c * n;
                w.bilaplacian[i] = 0.0;
                w.x_dot_grad[i] = c * r2;
                continue;
            }
            let rr = radius;
            let (f, f1, f2, f3, f4) = (d[0] * rr * rr, d[1] * rr, d[2], d[3] / rr, d[4] / (rr * rr));
            w.a[i] = f;
            w.a1[i] = f1 / r;
            w.a2[i] = f2;
            w.laplacian[i] = f2 + (n - 1.0) * f1 / r;
            w.bilaplacian[i] = f4 + 2.0 * (n - 1.0) * f3 / r + (n - 1.0) * (n - 3.0) * (f2 / r2 - f1 / (r2 * r));
            w.x_dot_grad[i] = r * f1;
        }
        Ok(w)
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Samples of a(x).
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn bilaplacian(&self) -> &[f64] {
        &self.bilaplacian
    }

    pub fn x_dot_grad(&self) -> &[f64] {
        &self.x_dot_grad
    }

    /// a''(|x|) at sample `idx`.
    pub fn radial_second(&self, idx: usize) -> f64 {
        self.a2[idx]
    }

    /// ∇a at sample `idx` (Cartesian components; `[a'(r), 0, 0]` on radial grids).
    pub fn gradient_at(&self, idx: usize) -> [f64; 3] {
        let x = self.grid.coords(idx);
        [self.a1[idx] * x[0], self.a1[idx] * x[1], self.a1[idx] * x[2]]
    }

    /// Hessian a_{jk} = a₁δ_{jk} + (a'' − a₁) x_j x_k/|x|² at sample `idx`.
    pub fn hessian_at(&self, idx: usize) -> [[f64; 3]; 3] {
        let x = self.grid.coords(idx);
        let r2 = self.grid.radius_sq(idx);
        let d = self.grid.dims();
        let mut h = [[0.0; 3]; 3];
        for j in 0..d {
            for k in 0..d {
                let delta = if j == k { self.a1[idx] } else { 0.0 };
                h[j][k] = delta + (self.a2[idx] - self.a1[idx]) * x[j] * x[k] / r2;
            }
        }
        h
    }
}

fn check_weight(u: &FieldState, w: &VirialWeight) -> Result<()> {
    u.check_same_grid(&w.grid)
}

/// x·∇u at every sample (r u_r on radial grids).
fn radial_derivative(u: &FieldState, grads: &[Vec<Complex64>]) -> Vec<Complex64> {
    let grid = u.grid();
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            grads
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (a, g)| acc + g[i] * x[a])
        })
        .collect()
}

/// M_a = 2 Im ∫ ū ∇u·∇a.
pub fn virial_ma(u: &FieldState, w: &VirialWeight) -> Result<f64> {
    check_weight(u, w)?;
    let grads = gradient(u)?;
    Ok(ma_from_gradient(u, w, &radial_derivative(u, &grads)))
}

fn ma_from_gradient(u: &FieldState, w: &VirialWeight, xgrad: &[Complex64]) -> f64 {
    let s = u.samples();
    2.0 * u.grid().integrate(|i| w.a1[i] * (s[i].conj() * xgrad[i]).im)
}

/// The four-term right side of dM_a/dt:
/// ∫ 4Re a_{jk}ū_j u_k − |u|²Δ²a − μ(2 − 4/(α+2)) w|u|^{α+2}Δa
/// − μ(4b/(α+2)) (|x|²+ε²)^{−(b+2)/2}|u|^{α+2} x·∇a.
pub fn virial_rhs(u: &FieldState, w: &VirialWeight, sw: &SingularWeight, params: &ModelParams) -> Result<f64> {
    check_weight(u, w)?;
    u.check_same_grid(sw.grid())?;
    let grads = gradient(u)?;
    Ok(rhs_from_gradient(
        u,
        w,
        sw,
        params,
        &grads,
        &radial_derivative(u, &grads),
    ))
}

fn rhs_from_gradient(
    u: &FieldState,
    w: &VirialWeight,
    sw: &SingularWeight,
    params: &ModelParams,
    grads: &[Vec<Complex64>],
    xgrad: &[Complex64],
) -> f64 {
    let grid = u.grid();
    let s = u.samples();
    let alpha = params.alpha();
    let mu = params.mu();
    let c3 = mu * (2.0 - 4.0 / (alpha + 2.0));
    let c4 = mu * 4.0 * sw.b() / (alpha + 2.0);
    let ws = sw.samples();
    grid.integrate(|i| {
        let grad_sq: f64 = grads.iter().map(|g| g[i].norm_sqr()).sum();
        let r2 = grid.radius_sq(i);
        let radial_sq = xgrad[i].norm_sqr() / r2;
        let t1 = 4.0 * (w.a1[i] * grad_sq + (w.a2[i] - w.a1[i]) * radial_sq);
        let t2 = -s[i].norm_sqr() * w.bilaplacian[i];
        let nonlinear = abs_pow(s[i], alpha + 2.0);
        let t3 = -c3 * ws[i] * nonlinear * w.laplacian[i];
        let t4 = -c4 * sw.shifted(i) * nonlinear * w.x_dot_grad[i];
        t1 + t2 + t3 + t4
    })
}

/// The same right side for a = |x|²: 8K − μ·4(Nα + 2b)/(α+2)·P, which is
/// 8(K − μP) in the energy-critical case.
pub fn virial_rhs_shortcut(kinetic: f64, potential: f64, params: &ModelParams) -> f64 {
    let n = params.dimension() as f64;
    let alpha = params.alpha();
    8.0 * kinetic - params.mu() * 4.0 * (n * alpha + 2.0 * params.b()) / (alpha + 2.0) * potential
}

/// V_R = ∫ a |u|².
pub fn v_r(u: &FieldState, w: &VirialWeight) -> Result<f64> {
    check_weight(u, w)?;
    let s = u.samples();
    Ok(u.grid().integrate(|i| w.a[i] * s[i].norm_sqr()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VrSeries {
    pub t: Vec<f64>,
    pub vr: Vec<f64>,
    /// Central second differences at interior checkpoints `t[1..n−1]`.
    pub second_derivative: Vec<f64>,
    /// `4(K − P) + C R^{−b} K^{Nα/4} + C R^{−2}` at the same interior points.
    pub bound: Vec<f64>,
    /// Smallest C that makes the bound hold at every interior point.
    pub calibrated_c: f64,
    /// `calibrated_c` divided by the initial mass.
    pub c_over_mass: f64,
}

/// V_R(t) with its discrete second derivative and the calibrated bound.
/// Needs at least three uniformly spaced samples.
pub fn v_r_series(samples: &[DiagnosticsSample], radius: f64, params: &ModelParams) -> Result<VrSeries> {
    if samples.len() < 3 {
        return Err(InlsError::InsufficientData(format!(
            "V_R needs 3 checkpoints, got {}",
            samples.len()
        )));
    }
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let vr: Vec<f64> = samples.iter().map(|s| s.vr).collect();
    let dt = t[1] - t[0];
    if t.windows(2)
        .any(|p| ((p[1] - p[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0))
    {
        return Err(InlsError::Precondition("V_R checkpoints must be uniform".into()));
    }
    let n = params.dimension() as f64;
    let alpha = params.alpha();
    let mut second = Vec::new();
    let mut main = Vec::new();
    let mut shape = Vec::new();
    for i in 1..samples.len() - 1 {
        second.push((vr[i + 1] - 2.0 * vr[i] + vr[i - 1]) / (dt * dt));
        let s = &samples[i];
        main.push(4.0 * (s.kinetic - params.mu() * s.potential));
        shape.push(radius.powf(-params.b()) * s.kinetic.powf(n * alpha / 4.0) + radius.powi(-2));
    }
    let calibrated_c = second
        .iter()
        .zip(&main)
        .zip(&shape)
        .map(|((d2, m), sh)| ((d2 - m) / sh).max(0.0))
        .fold(0.0, f64::max);
    let bound = main.iter().zip(&shape).map(|(m, sh)| m + calibrated_c * sh).collect();
    let m0 = samples[0].mass;
    Ok(VrSeries {
        t: t[1..t.len() - 1].to_vec(),
        vr,
        second_derivative: second,
        bound,
        calibrated_c,
        c_over_mass: if m0 > 0.0 { calibrated_c / m0 } else { f64::NAN },
    })
}

/// Scattering-size exponent 2(N+2)/(N−2); NaN for N ≤ 2.
pub fn scattering_exponent(dimension: u32) -> f64 {
    if dimension <= 2 {
        f64::NAN
    } else {
        let n = dimension as f64;
        2.0 * (n + 2.0) / (n - 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnormSeries {
    /// Cumulative ∫∫|u|^{2(N+2)/(N−2)} dx dt at every checkpoint.
    pub cumulative: Vec<f64>,
    /// Trapezoid increment of each window `[t_{i−1}, t_i]`.
    pub increments: Vec<f64>,
}

/// Trapezoid accumulation of spatial integrals `values[i] = ∫|u(t_i)|^p dx`.
pub fn snorm_accumulate(times: &[f64], values: &[f64]) -> Result<SnormSeries> {
    if times.len() != values.len() {
        return Err(InlsError::InsufficientData("times and values differ in length".into()));
    }
    let mut cumulative = Vec::with_capacity(times.len());
    let mut increments = Vec::with_capacity(times.len().saturating_sub(1));
    let mut total = 0.0;
    if !times.is_empty() {
        cumulative.push(0.0);
    }
    for i in 1..times.len() {
        let inc = 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]).abs();
        increments.push(inc);
        total += inc;
        cumulative.push(total);
    }
    Ok(SnormSeries { cumulative, increments })
}

/// e^{−itΔ}u(t) in Fourier space: û(k)·e^{+i|k|²t}.
fn pulled_back_hat(u: &FieldState) -> Result<Vec<Complex64>> {
    let grid = u.grid();
    grid.require_cartesian("the scattering proxy")?;
    let mut hat = u.samples().to_vec();
    forward(grid, &mut hat);
    let t = u.time();
    for (z, &k2) in hat.iter_mut().zip(grid.k_squared()) {
        *z *= Complex64::cis(k2 * t);
    }
    Ok(hat)
}

fn hdot1_distance_hat(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    let k2 = grid.k_squared();
    let sum = ordered_sum(a.len(), |i| k2[i] * (a[i] - b[i]).norm_sqr());
    (sum * grid.cell_volume() / grid.len() as f64).sqrt()
}

/// ‖e^{−it₂Δ}u(t₂) − e^{−it₁Δ}u(t₁)‖_{Ḣ¹}.
pub fn scattering_proxy(u1: &FieldState, u2: &FieldState) -> Result<f64> {
    if !u1.grid().same_as(u2.grid()) {
        return Err(InlsError::MismatchedGrids);
    }
    let a = pulled_back_hat(u1)?;
    let b = pulled_back_hat(u2)?;
    Ok(hdot1_distance_hat(u1.grid(), &a, &b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnReport {
    /// ‖u‖^{α+2}_{L^{α+2}}.
    pub lhs: f64,
    /// ‖u‖_{L²}^{(N+2−(N−2)(α+1))/2}·‖∇u‖_{L²}^{Nα/2}.
    pub rhs: f64,
    /// `None` when rhs vanishes.
    pub ratio: Option<f64>,
}

pub fn gn_exponents(dimension: u32, alpha: f64) -> (f64, f64) {
    let n = dimension as f64;
    ((n + 2.0 - (n - 2.0) * (alpha + 1.0)) / 2.0, n * alpha / 2.0)
}

pub fn gn_functional(u: &FieldState, dimension: u32, alpha: f64) -> Result<GnReport> {
    let (p_mass, p_grad) = gn_exponents(dimension, alpha);
    if p_mass < 0.0 {
        return Err(InlsError::Domain(format!(
            "Gagliardo-Nirenberg L2 exponent {p_mass} is negative for N = {dimension}, alpha = {alpha}"
        )));
    }
    let lhs = lp_integral(u, alpha + 2.0);
    let rhs = mass(u).sqrt().powf(p_mass) * gradient_sq_integral(u).sqrt().powf(p_grad);
    Ok(GnReport {
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
    })
}

/// One diagnostics row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub ma: f64,
    pub virial_rhs: f64,
    pub vr: f64,
    pub snorm_cum: f64,
    pub sup_abs: f64,
    /// Proxy increment since the previous checkpoint; absent at the first row
    /// and on radial grids.
    pub proxy: Option<f64>,
}

impl DiagnosticsSample {
    pub fn csv_row(&self) -> String {
        let proxy = self.proxy.map(|p| p.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.mass,
            self.kinetic,
            self.potential,
            self.energy,
            self.ma,
            self.virial_rhs,
            self.vr,
            self.snorm_cum,
            self.sup_abs,
            proxy
        )
    }

    pub fn parse_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 11 {
            return Err(InlsError::Format(format!("expected 11 columns, got {}", cols.len())));
        }
        let num = |k: usize| -> Result<f64> {
            cols[k]
                .parse::<f64>()
                .map_err(|_| InlsError::Format(format!("column {k} holds {:?}", cols[k])))
        };
        Ok(Self {
            t: num(0)?,
            mass: num(1)?,
            kinetic: num(2)?,
            potential: num(3)?,
            energy: num(4)?,
            ma: num(5)?,
            virial_rhs: num(6)?,
            vr: num(7)?,
            snorm_cum: num(8)?,
            sup_abs: num(9)?,
            proxy: if cols[10].is_empty() { None } else { Some(num(10)?) },
        })
    }
}

pub fn write_csv(out: &mut impl Write, samples: &[DiagnosticsSample]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        writeln!(out, "{}", s.csv_row())?;
    }
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<DiagnosticsSample>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        other => return Err(InlsError::Format(format!("diagnostics header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(DiagnosticsSample::parse_row)
        .collect()
}

/// Records a [`DiagnosticsSample`] at every checkpoint.
pub struct DiagnosticsProbe<'a> {
    params: ModelParams,
    weight: &'a SingularWeight,
    virial: Option<&'a VirialWeight>,
    localized: Option<&'a VirialWeight>,
    exponent: f64,
    previous: Option<(f64, f64, Option<Vec<Complex64>>)>,
    snorm: f64,
    pub samples: Vec<DiagnosticsSample>,
}

impl<'a> DiagnosticsProbe<'a> {
    /// `virial` feeds the M_a and virial_rhs columns, `localized` the V_R
    /// column; missing weights leave NaN.
    pub fn new(
        params: &ModelParams,
        weight: &'a SingularWeight,
        virial: Option<&'a VirialWeight>,
        localized: Option<&'a VirialWeight>,
    ) -> Self {
        Self {
            params: *params,
            weight,
            virial,
            localized,
            exponent: scattering_exponent(params.dimension()),
            previous: None,
            snorm: 0.0,
            samples: Vec::new(),
        }
    }

    pub fn sample(&mut self, u: &FieldState) -> Result<DiagnosticsSample> {
        let kinetic = gradient_sq_integral(u);
        let potential = weighted_potential_integral(u, self.weight, self.params.alpha())?;
        let energy = crate::field::energy_from_parts(kinetic, potential, &self.params);
        let (ma, rhs) = match self.virial {
            Some(w) => {
                check_weight(u, w)?;
                let grads = gradient(u)?;
                let xgrad = radial_derivative(u, &grads);
                (
                    ma_from_gradient(u, w, &xgrad),
                    rhs_from_gradient(u, w, self.weight, &self.params, &grads, &xgrad),
                )
            }
            None => (f64::NAN, f64::NAN),
        };
        let vr = match self.localized {
            Some(w) => v_r(u, w)?,
            None => f64::NAN,
        };
        let s_value = if self.exponent.is_nan() {
            f64::NAN
        } else {
            lp_integral(u, self.exponent)
        };
        let hat = if u.grid().is_radial() {
            None
        } else {
            Some(pulled_back_hat(u)?)
        };
        let mut proxy = None;
        if let Some((t_prev, s_prev, hat_prev)) = &self.previous {
            self.snorm += 0.5 * (s_value + s_prev) * (u.time() - t_prev).abs();
            if let (Some(a), Some(b)) = (hat_prev, &hat) {
                proxy = Some(hdot1_distance_hat(u.grid(), a, b));
            }
        }
        self.previous = Some((u.time(), s_value, hat));
        Ok(DiagnosticsSample {
            t: u.time(),
            mass: mass(u),
            kinetic,
            potential,
            energy,
            ma,
            virial_rhs: rhs,
            vr,
            snorm_cum: self.snorm,
            sup_abs: sup_abs(u),
            proxy,
        })
    }
}

impl Probe for DiagnosticsProbe<'_> {
    fn observe(&mut self, u: &FieldState) -> Result<ProbeAction> {
        let s = self.sample(u)?;
        self.samples.push(s);
        Ok(ProbeAction::Continue)
    }
}
