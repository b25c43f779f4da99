//! Grids, complex fields and the discrete integrals used everywhere else.
//!
//! Cartesian grids are periodic boxes `[-L, L)^d` with spectral derivatives.
//! Radial grids hold `u(r)` on `r ∈ (0, L]` for an ambient dimension `N` and
//! use second-order conservative finite differences; they are a separate
//! accuracy class.
//!
//! All reductions go through [`ordered_sum`], so results do not depend on the
//! rayon thread count.

mod radial;
mod snapshot;
mod spectral;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{InlsError, Result};
use crate::model::ModelParams;

pub use radial::{sphere_area, tridiagonal_laplacian, RadialLaplacian};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC};
pub use spectral::resample_dilated;

/// Upper bound on the number of samples a grid may hold.
pub const DEFAULT_MAX_POINTS: usize = 1 << 24;

const SUM_CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Periodic box in `dims` (1–3) Cartesian directions.
    Cartesian { dims: usize },
    /// Radially symmetric field in ambient dimension `ambient` (1–5).
    Radial { ambient: u32 },
}

impl Geometry {
    /// Dimension of the physical space the integrals live in.
    pub fn ambient_dimension(&self) -> u32 {
        match *self {
            Geometry::Cartesian { dims } => dims as u32,
            Geometry::Radial { ambient } => ambient,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub geometry: Geometry,
    pub points: usize,
    pub half_width: f64,
    pub offset: bool,
}

impl GridSpec {
    pub fn cartesian(dims: usize, points: usize, half_width: f64) -> Self {
        Self {
            geometry: Geometry::Cartesian { dims },
            points,
            half_width,
            offset: true,
        }
    }

    pub fn radial(ambient: u32, points: usize, radius: f64) -> Self {
        Self {
            geometry: Geometry::Radial { ambient },
            points,
            half_width: radius,
            offset: true,
        }
    }

    pub fn with_offset(mut self, offset: bool) -> Self {
        self.offset = offset;
        self
    }
}

/// A validated grid with coordinates, wavenumbers and FFT plans.
pub struct Grid {
    spec: GridSpec,
    spacing: f64,
    axis: Vec<f64>,
    wavenumbers: Vec<f64>,
    total: usize,
    k_squared: Vec<f64>,
    fft_forward: Option<Arc<dyn Fft<f64>>>,
    fft_inverse: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.spec)
            .field("spacing", &self.spacing)
            .finish()
    }
}

pub fn make_grid(spec: GridSpec) -> Result<Arc<Grid>> {
    make_grid_capped(spec, DEFAULT_MAX_POINTS)
}

pub fn make_grid_capped(spec: GridSpec, max_points: usize) -> Result<Arc<Grid>> {
    let n = spec.points;
    if n < 2 || !n.is_power_of_two() {
        return Err(InlsError::Grid(format!(
            "points per axis {n} is not a power of two >= 2"
        )));
    }
    if !(spec.half_width > 0.0) || !spec.half_width.is_finite() {
        return Err(InlsError::Grid(format!(
            "half width {} must be positive",
            spec.half_width
        )));
    }
    match spec.geometry {
        Geometry::Cartesian { dims } => {
            if !(1..=3).contains(&dims) {
                return Err(InlsError::Grid(format!("{dims} Cartesian dimensions (1-3 supported)")));
            }
            let total = n
                .checked_pow(dims as u32)
                .filter(|&t| t <= max_points)
                .ok_or_else(|| InlsError::Grid(format!("{n}^{dims} samples exceed the cap {max_points}")))?;
            let l = spec.half_width;
            let h = 2.0 * l / n as f64;
            let shift = if spec.offset { 0.5 } else { 0.0 };
            let axis = (0..n).map(|j| -l + (j as f64 + shift) * h).collect();
            let dk = PI / l;
            let wavenumbers: Vec<f64> = (0..n)
                .map(|j| {
                    let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                    dk * m as f64
                })
                .collect();
            let k_squared = (0..total)
                .map(|idx| {
                    let mut rest = idx;
                    let mut k2 = 0.0;
                    for _ in 0..dims {
                        let k = wavenumbers[rest % n];
                        k2 += k * k;
                        rest /= n;
                    }
                    k2
                })
                .collect();
            let mut planner = FftPlanner::new();
            Ok(Arc::new(Grid {
                spec,
                spacing: h,
                axis,
                wavenumbers,
                total,
                k_squared,
                fft_forward: Some(planner.plan_fft_forward(n)),
                fft_inverse: Some(planner.plan_fft_inverse(n)),
            }))
        }
        Geometry::Radial { ambient } => {
            if !(1..=5).contains(&ambient) {
                return Err(InlsError::Grid(format!("ambient dimension {ambient} (1-5 supported)")));
            }
            if !spec.offset {
                return Err(InlsError::Grid(
                    "radial grids must be offset (no sample at r = 0)".into(),
                ));
            }
            if n > max_points {
                return Err(InlsError::Grid(format!("{n} samples exceed the cap {max_points}")));
            }
            let h = spec.half_width / n as f64;
            let axis = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
            Ok(Arc::new(Grid {
                spec,
                spacing: h,
                axis,
                wavenumbers: Vec::new(),
                total: n,
                k_squared: Vec::new(),
                fft_forward: None,
                fft_inverse: None,
            }))
        }
    }
}

impl Grid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn geometry(&self) -> Geometry {
        self.spec.geometry
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.spec.geometry, Geometry::Radial { .. })
    }

    /// Number of Cartesian axes; 1 for radial grids.
    pub fn dims(&self) -> usize {
        match self.spec.geometry {
            Geometry::Cartesian { dims } => dims,
            Geometry::Radial { .. } => 1,
        }
    }

    pub fn ambient_dimension(&self) -> u32 {
        self.spec.geometry.ambient_dimension()
    }

    pub fn points_per_axis(&self) -> usize {
        self.spec.points
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Sample coordinates along one axis (radii for radial grids).
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Angular wavenumbers in FFT order, `(π/L)·{0, 1, …, n/2−1, −n/2, …, −1}`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// |k|² for every Fourier index (Cartesian only).
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    /// Quadrature weight of a single Cartesian cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dims() as i32)
    }

    /// Multi-index of a flat Cartesian index, slowest axis first.
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.spec.points;
        let d = self.dims();
        let mut out = [0usize; 3];
        let mut rest = idx;
        for a in (0..d).rev() {
            out[a] = rest % n;
            rest /= n;
        }
        out
    }

    /// Coordinates of a sample (`[r, 0, 0]` for radial grids).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        if self.is_radial() {
            x[0] = self.axis[idx];
            return x;
        }
        let m = self.unravel(idx);
        for a in 0..self.dims() {
            x[a] = self.axis[m[a]];
        }
        x
    }

    /// |x|² of a sample.
    pub fn radius_sq(&self, idx: usize) -> f64 {
        let x = self.coords(idx);
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    }

    /// Quadrature weight of sample `idx`: `h^d` on Cartesian grids,
    /// `σ_N r^{N−1} h` on radial grids.
    pub fn quadrature_weight(&self, idx: usize) -> f64 {
        match self.spec.geometry {
            Geometry::Cartesian { .. } => self.cell_volume(),
            Geometry::Radial { ambient } => {
                sphere_area(ambient) * self.axis[idx].powi(ambient as i32 - 1) * self.spacing
            }
        }
    }

    /// Deterministic Σ f(i) w_i over all samples.
    pub fn integrate(&self, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        match self.spec.geometry {
            Geometry::Cartesian { .. } => ordered_sum(self.total, f) * self.cell_volume(),
            Geometry::Radial { .. } => ordered_sum(self.total, |i| f(i) * self.quadrature_weight(i)),
        }
    }

    pub(crate) fn require_cartesian(&self, what: &'static str) -> Result<()> {
        if self.is_radial() {
            Err(InlsError::Unsupported(what))
        } else {
            Ok(())
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }
}

/// Σ_{i<len} f(i), summed in fixed-size chunks whose partial sums are added
/// in index order.
pub fn ordered_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks = len.div_ceil(SUM_CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * SUM_CHUNK;
            let end = (start + SUM_CHUNK).min(len);
            (start..end).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

/// The simulated u(t, x): complex samples on a grid plus the current time.
#[derive(Clone, Debug)]
pub struct FieldState {
    samples: Vec<Complex64>,
    grid: Arc<Grid>,
    time: f64,
}

impl FieldState {
    pub fn new(grid: Arc<Grid>, samples: Vec<Complex64>, time: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(InlsError::Grid(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Self { samples, grid, time })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let samples = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            samples,
            grid,
            time: 0.0,
        }
    }

    /// Samples `f(x)` at every grid point (`x = [r, 0, 0]` on radial grids).
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64; 3]) -> Complex64 + Sync) -> Self {
        let samples = (0..grid.len()).into_par_iter().map(|i| f(&grid.coords(i))).collect();
        Self {
            samples,
            grid,
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn scale(&mut self, factor: f64) {
        self.samples.par_iter_mut().for_each(|z| *z *= factor);
    }

    pub fn scale_complex(&mut self, factor: Complex64) {
        self.samples.par_iter_mut().for_each(|z| *z *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Discrete L² distance to another field on the same grid.
    pub fn l2_distance(&self, other: &FieldState) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(InlsError::MismatchedGrids);
        }
        let (a, b) = (&self.samples, &other.samples);
        Ok(self.grid.integrate(|i| (a[i] - b[i]).norm_sqr()).sqrt())
    }

    pub(crate) fn check_same_grid(&self, other: &Grid) -> Result<()> {
        if self.grid.same_as(other) {
            Ok(())
        } else {
            Err(InlsError::MismatchedGrids)
        }
    }
}

/// Samples of `(|x|² + ε²)^{−b/2}` on a grid.
#[derive(Clone, Debug)]
pub struct SingularWeight {
    samples: Vec<f64>,
    b: f64,
    epsilon: f64,
    grid: Arc<Grid>,
}

impl SingularWeight {
    pub fn new(grid: Arc<Grid>, b: f64, epsilon: f64) -> Result<Self> {
        if b < 0.0 || epsilon < 0.0 {
            return Err(InlsError::Domain(format!(
                "weight needs b, epsilon >= 0 (got {b}, {epsilon})"
            )));
        }
        let has_origin = (0..grid.len()).any(|i| grid.radius_sq(i) == 0.0);
        if b > 0.0 && epsilon == 0.0 && has_origin {
            return Err(InlsError::Grid(
                "unregularized |x|^-b needs an offset grid without an origin sample".into(),
            ));
        }
        let eps2 = epsilon * epsilon;
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|i| (grid.radius_sq(i) + eps2).powf(-0.5 * b))
            .collect();
        Ok(Self {
            samples,
            b,
            epsilon,
            grid,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `(|x|² + ε²)^{−(b+2)/2}` at sample `idx`.
    pub fn shifted(&self, idx: usize) -> f64 {
        self.samples[idx] / (self.grid.radius_sq(idx) + self.epsilon * self.epsilon)
    }
}

/// |u|^p with cheap paths for the common integer powers.
#[inline]
pub fn abs_pow(z: Complex64, p: f64) -> f64 {
    let n2 = z.norm_sqr();
    if p == 2.0 {
        n2
    } else if p == 4.0 {
        n2 * n2
    } else if p == 1.0 {
        n2.sqrt()
    } else if p == 3.0 {
        n2 * n2.sqrt()
    } else if n2 == 0.0 {
        0.0
    } else {
        n2.powf(0.5 * p)
    }
}

/// ∫|∇u|² dx: spectral (Plancherel) on Cartesian grids, conservative
/// finite differences on radial ones.
pub fn gradient_sq_integral(u: &FieldState) -> f64 {
    if u.grid.is_radial() {
        radial::kinetic(u)
    } else {
        spectral::kinetic(u)
    }
}

/// ‖u‖²_{Ḣ¹}; the same quantity as [`gradient_sq_integral`].
pub fn hdot1_norm_sq(u: &FieldState) -> f64 {
    gradient_sq_integral(u)
}

pub fn mass(u: &FieldState) -> f64 {
    let s = &u.samples;
    u.grid.integrate(|i| s[i].norm_sqr())
}

pub fn sup_abs(u: &FieldState) -> f64 {
    // NaN samples propagate so callers can detect them
    u.samples
        .iter()
        .map(|z| z.norm_sqr())
        .fold(
            0.0,
            |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) },
        )
        .sqrt()
}

/// (∫|u|^p dx)^{1/p}.
pub fn lp_norm(u: &FieldState, p: f64) -> f64 {
    lp_integral(u, p).powf(1.0 / p)
}

/// ∫|u|^p dx.
pub fn lp_integral(u: &FieldState, p: f64) -> f64 {
    let s = &u.samples;
    u.grid.integrate(|i| abs_pow(s[i], p))
}

/// P(u) = ∫ w(x) |u|^{α+2} dx.
pub fn weighted_potential_integral(u: &FieldState, w: &SingularWeight, alpha: f64) -> Result<f64> {
    u.check_same_grid(&w.grid)?;
    let (s, ws) = (&u.samples, &w.samples);
    let p = alpha + 2.0;
    Ok(u.grid.integrate(|i| ws[i] * abs_pow(s[i], p)))
}

/// E[u] = ½∫|∇u|² − μ/(α+2) ∫ w |u|^{α+2}.
pub fn energy(u: &FieldState, w: &SingularWeight, params: &ModelParams) -> Result<f64> {
    let kinetic = gradient_sq_integral(u);
    let potential = weighted_potential_integral(u, w, params.alpha())?;
    Ok(energy_from_parts(kinetic, potential, params))
}

pub fn energy_from_parts(kinetic: f64, potential: f64, params: &ModelParams) -> f64 {
    0.5 * kinetic - params.mu() * potential / (params.alpha() + 2.0)
}

pub use spectral::gradient;
/// Fourier transform helpers exposed for the evolution and diagnostics code.
pub(crate) use spectral::{forward, inverse};

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_1d(n: usize, l: f64) -> FieldState {
        let grid = make_grid(GridSpec::cartesian(1, n, l)).unwrap();
        FieldState::from_fn(grid, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0))
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(GridSpec::cartesian(1, 8, 4.0)).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis(), &[-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5]);

        let g = make_grid(GridSpec::cartesian(3, 128, 20.0)).unwrap();
        assert_eq!(g.len(), 128 * 128 * 128);
        assert_eq!(g.spacing(), 0.3125);

        assert!(matches!(
            make_grid(GridSpec::cartesian(1, 7, 4.0)),
            Err(InlsError::Grid(_))
        ));
        assert!(make_grid(GridSpec::cartesian(1, 8, 0.0)).is_err());
        assert!(make_grid_capped(GridSpec::cartesian(3, 64, 1.0), 1000).is_err());
    }

    #[test]
    fn wavenumbers_follow_fft_order() {
        let g = make_grid(GridSpec::cartesian(1, 8, PI)).unwrap();
        assert_eq!(g.wavenumbers(), &[0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn offset_grid_keeps_away_from_origin() {
        let g = make_grid(GridSpec::cartesian(2, 16, 3.0)).unwrap();
        let h = g.spacing();
        for x in g.axis() {
            assert!(x.abs() >= 0.5 * h - 1e-15);
        }
    }

    #[test]
    fn kinetic_of_constant_and_plane_wave() {
        let grid = make_grid(GridSpec::cartesian(1, 64, 5.0)).unwrap();
        let c = FieldState::from_fn(grid.clone(), |_| Complex64::new(2.0, -1.0));
        assert!(gradient_sq_integral(&c).abs() < 1e-20);

        let k0 = grid.wavenumbers()[3];
        let pw = FieldState::from_fn(grid, move |x| Complex64::new(0.0, k0 * x[0]).exp());
        assert_relative_eq!(gradient_sq_integral(&pw), k0 * k0 * 10.0, max_relative = 1e-12);
        assert_eq!(hdot1_norm_sq(&pw), gradient_sq_integral(&pw));
    }

    #[test]
    fn gaussian_integrals_match_closed_forms() {
        let u = gaussian_1d(2048, 40.0);
        let sqrt_pi = PI.sqrt();
        // ∫ x² e^{-x²} = √π/2, ∫ e^{-x²} = √π
        assert_relative_eq!(gradient_sq_integral(&u), 0.5 * sqrt_pi, max_relative = 1e-10);
        assert_relative_eq!(mass(&u), sqrt_pi, max_relative = 1e-10);
    }

    #[test]
    fn plane_wave_mass() {
        let grid = make_grid(GridSpec::cartesian(2, 16, 3.0)).unwrap();
        let amp = 1.7;
        let u = FieldState::from_fn(grid, |x| Complex64::from_polar(amp, 0.3 * x[0]));
        assert_relative_eq!(mass(&u), amp * amp * 36.0, max_relative = 1e-13);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let grid = make_grid(GridSpec::cartesian(2, 16, 3.0)).unwrap();
        let w = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
        let u = FieldState::zeros(grid);
        assert_eq!(mass(&u), 0.0);
        assert_eq!(sup_abs(&u), 0.0);
        assert_eq!(gradient_sq_integral(&u), 0.0);
        assert_eq!(lp_norm(&u, 4.0), 0.0);
        assert_eq!(weighted_potential_integral(&u, &w, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn potential_is_gauge_invariant() {
        let grid = make_grid(GridSpec::cartesian(2, 32, 6.0)).unwrap();
        let w = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
        let u = FieldState::from_fn(grid.clone(), |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
        let mut v = u.clone();
        v.scale_complex(Complex64::from_polar(1.0, 0.7));
        let pu = weighted_potential_integral(&u, &w, 2.0).unwrap();
        let pv = weighted_potential_integral(&v, &w, 2.0).unwrap();
        assert_relative_eq!(pu, pv, max_relative = 1e-14);
    }

    #[test]
    fn singular_weight_needs_offset_or_regularization() {
        let grid = make_grid(GridSpec::cartesian(2, 16, 3.0).with_offset(false)).unwrap();
        assert!(SingularWeight::new(grid.clone(), 1.0, 0.0).is_err());
        assert!(SingularWeight::new(grid, 1.0, 0.1).is_ok());
    }

    #[test]
    fn singular_weight_peaks_at_nearest_sample() {
        let grid = make_grid(GridSpec::cartesian(3, 16, 4.0)).unwrap();
        let w = SingularWeight::new(grid.clone(), 1.0, 0.0).unwrap();
        let nearest = (0..grid.len())
            .map(|i| grid.radius_sq(i))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let max = w.samples().iter().cloned().fold(0.0, f64::max);
        assert_relative_eq!(max, nearest.powf(-1.0), max_relative = 1e-15);
        // radially decreasing
        let mut pairs: Vec<(f64, f64)> = (0..grid.len()).map(|i| (grid.radius_sq(i), w.samples()[i])).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(pairs.windows(2).all(|p| p[1].1 <= p[0].1));
    }

    #[test]
    fn defocusing_energy_is_positive() {
        let grid = make_grid(GridSpec::cartesian(1, 64, 8.0)).unwrap();
        let w = SingularWeight::new(grid.clone(), 0.5, 0.0).unwrap();
        let params = ModelParams::exploratory(1, 0.5, 2.0, crate::model::Sign::Defocusing).unwrap();
        let u = FieldState::from_fn(grid, |x| Complex64::new(0.3 * (-x[0] * x[0]).exp(), 0.1));
        assert!(energy(&u, &w, &params).unwrap() > 0.0);
    }

    #[test]
    fn ordered_sum_is_deterministic() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = ordered_sum(100_000, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| ordered_sum(100_000, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
