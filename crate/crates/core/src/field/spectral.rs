use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::Fft;

use super::{ordered_sum, radial, FieldState, Grid};
use crate::error::{InlsError, Result};

/// Relative L² mass allowed to leave the box (or the resolvable band) when
/// a field is dilated.
pub const TRUNCATION_TOL: f64 = 1e-10;

// columns gathered per batch on strided axes
const COLUMN_BATCH: usize = 16;

/// Applies a 1D transform along every axis of a row-major array.
fn transform(grid: &Grid, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let n = grid.points_per_axis();
    let dims = grid.dims();
    let zero = Complex64::new(0.0, 0.0);
    let scratch_len = fft.get_inplace_scratch_len();
    for axis in 0..dims {
        let stride = n.pow((dims - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(n * 64.min(grid.len() / n).max(1)).for_each_init(
                || vec![zero; scratch_len],
                |scratch, lines| fft.process_with_scratch(lines, scratch),
            );
        } else {
            data.par_chunks_mut(n * stride).for_each_init(
                || (vec![zero; n * COLUMN_BATCH], vec![zero; scratch_len]),
                |(buf, scratch), block| {
                    for c0 in (0..stride).step_by(COLUMN_BATCH) {
                        let width = COLUMN_BATCH.min(stride - c0);
                        for i in 0..n {
                            let row = &block[i * stride + c0..i * stride + c0 + width];
                            for (s, z) in row.iter().enumerate() {
                                buf[s * n + i] = *z;
                            }
                        }
                        fft.process_with_scratch(&mut buf[..width * n], scratch);
                        for i in 0..n {
                            let row = &mut block[i * stride + c0..i * stride + c0 + width];
                            for (s, z) in row.iter_mut().enumerate() {
                                *z = buf[s * n + i];
                            }
                        }
                    }
                },
            );
        }
    }
}

/// Unnormalized forward DFT in place.
pub(crate) fn forward(grid: &Grid, data: &mut [Complex64]) {
    let fft = grid.fft_forward.as_ref().expect("Cartesian grid");
    transform(grid, data, fft);
}

/// Inverse DFT in place, normalized so that `inverse(forward(u)) = u`.
pub(crate) fn inverse(grid: &Grid, data: &mut [Complex64]) {
    let fft = grid.fft_inverse.as_ref().expect("Cartesian grid");
    transform(grid, data, fft);
    let norm = 1.0 / grid.len() as f64;
    data.par_iter_mut().for_each(|z| *z *= norm);
}

pub(super) fn kinetic(u: &FieldState) -> f64 {
    let grid = u.grid();
    let mut hat = u.samples().to_vec();
    forward(grid, &mut hat);
    let k2 = grid.k_squared();
    let sum = ordered_sum(hat.len(), |i| k2[i] * hat[i].norm_sqr());
    sum * grid.cell_volume() / grid.len() as f64
}

/// Spectral gradient, one field per Cartesian axis. The Nyquist mode is
/// dropped for first derivatives.
pub fn gradient(u: &FieldState) -> Result<Vec<Vec<Complex64>>> {
    let grid = u.grid();
    if grid.is_radial() {
        return Ok(vec![radial::node_gradient(u)]);
    }
    let n = grid.points_per_axis();
    let mut hat = u.samples().to_vec();
    forward(grid, &mut hat);
    let ks = grid.wavenumbers();
    let out = (0..grid.dims())
        .map(|axis| {
            let mut d: Vec<Complex64> = hat
                .par_iter()
                .enumerate()
                .map(|(idx, z)| {
                    let m = grid.unravel(idx)[axis];
                    let k = if m == n / 2 { 0.0 } else { ks[m] };
                    z * Complex64::new(0.0, k)
                })
                .collect();
            inverse(grid, &mut d);
            d
        })
        .collect();
    Ok(out)
}

/// 1D trigonometric interpolation matrix from the grid samples to the points
/// `lambda * x_j`; rows for points outside `[-L, L)` are zero.
fn dilation_matrix(grid: &Grid, lambda: f64) -> Vec<f64> {
    let n = grid.points_per_axis();
    let l = grid.half_width();
    let axis = grid.axis();
    let ks = grid.wavenumbers();
    let mut m = vec![0.0; n * n];
    for (i, &x) in axis.iter().enumerate() {
        let y = lambda * x;
        if y < -l || y >= l {
            continue;
        }
        for (j, &xj) in axis.iter().enumerate() {
            let d = y - xj;
            // ±k pairs combine to cosines; the lone Nyquist mode is symmetrized to one
            let s: f64 = ks.iter().map(|&k| (k * d).cos()).sum();
            m[i * n + j] = s / n as f64;
        }
    }
    m
}

fn apply_axis(grid: &Grid, data: &[Complex64], matrix: &[f64], axis: usize) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    let dims = grid.dims();
    let stride = n.pow((dims - 1 - axis) as u32);
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(n * stride)
        .zip(data.par_chunks(n * stride))
        .for_each(|(ob, ib)| {
            for i in 0..n {
                let row = &matrix[i * n..(i + 1) * n];
                let dst = &mut ob[i * stride..(i + 1) * stride];
                for (j, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let src = &ib[j * stride..(j + 1) * stride];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += s * w;
                    }
                }
            }
        });
    out
}

/// Fraction of the field's spectral mass beyond `|k_axis| > k_cut` on any axis.
fn spectral_tail_fraction(u: &FieldState, k_cut: f64) -> f64 {
    let grid = u.grid();
    let mut hat = u.samples().to_vec();
    forward(grid, &mut hat);
    let ks = grid.wavenumbers();
    let total = ordered_sum(hat.len(), |i| hat[i].norm_sqr());
    if total == 0.0 {
        return 0.0;
    }
    let tail = ordered_sum(hat.len(), |i| {
        let m = grid.unravel(i);
        let outside = (0..grid.dims()).any(|a| ks[m[a]].abs() > k_cut);
        if outside {
            hat[i].norm_sqr()
        } else {
            0.0
        }
    });
    tail / total
}

/// `v(x) = u(λx)` sampled on the same grid. Periodic trigonometric
/// interpolation on Cartesian grids, cubic Lagrange interpolation on radial
/// ones; the field is taken to vanish outside the box.
pub fn resample_dilated(u: &FieldState, lambda: f64) -> Result<FieldState> {
    let grid = u.grid().clone();
    if grid.is_radial() {
        return radial::resample_dilated(u, lambda);
    }
    let total_mass = super::mass(u);
    if total_mass > 0.0 {
        let lost = if lambda < 1.0 {
            // samples of u outside the sub-box [-λL, λL]^d are discarded
            let inner = lambda * grid.half_width();
            let s = u.samples();
            let outside = grid.integrate(|i| {
                let x = grid.coords(i);
                if x[..grid.dims()].iter().any(|c| c.abs() > inner) {
                    s[i].norm_sqr()
                } else {
                    0.0
                }
            });
            outside / total_mass
        } else {
            // compression pushes wavenumbers beyond the grid's band
            let k_max = PI / grid.spacing();
            spectral_tail_fraction(u, k_max / lambda)
        };
        if lost > TRUNCATION_TOL {
            return Err(InlsError::Truncation { lost_fraction: lost });
        }
    }
    let matrix = dilation_matrix(&grid, lambda);
    let mut data = u.samples().to_vec();
    for axis in 0..grid.dims() {
        data = apply_axis(&grid, &data, &matrix, axis);
    }
    FieldState::new(grid, data, u.time())
}
