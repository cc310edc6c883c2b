//! Unitary 2D discrete Fourier transform backed by `rustfft`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::TransverseField;
use crate::grid::Grid2D;
use crate::par;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub(crate) struct FftPlan {
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    fwd_z: Arc<dyn Fft<f64>>,
    inv_z: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    pub(crate) fn new(n_y: usize, n_z: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd_y: planner.plan_fft_forward(n_y),
            inv_y: planner.plan_fft_inverse(n_y),
            fwd_z: planner.plan_fft_forward(n_z),
            inv_z: planner.plan_fft_inverse(n_z),
        }
    }
}

/// Unitary transform of a field. The result lives on the same grid, indexed
/// by wavenumber (`Grid2D::ky`, `Grid2D::kz`).
pub fn spectral_transform(field: &TransverseField, direction: Direction) -> Result<TransverseField> {
    let grid = field.grid();
    if field.values().len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", grid.len()),
            found: format!("{} values", field.values().len()),
        });
    }
    let mut values = field.values().to_vec();
    fft2(grid, &mut values, direction);
    let scale = 1.0 / (grid.len() as f64).sqrt();
    par::for_each_chunk_mut(&mut values, par::CHUNK, |_, c| {
        c.iter_mut().for_each(|v| *v *= scale)
    });
    TransverseField::from_values(field.grid_ref().clone(), values)
}

/// Unnormalized in-place 2D FFT.
pub(crate) fn fft2(grid: &Grid2D, data: &mut [Complex64], direction: Direction) {
    let (n_y, n_z) = (grid.n_y(), grid.n_z());
    let plan = &grid.plan;
    let (fy, fz) = match direction {
        Direction::Forward => (&plan.fwd_y, &plan.fwd_z),
        Direction::Inverse => (&plan.inv_y, &plan.inv_z),
    };
    rows(fy.as_ref(), data, n_y);
    let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
    transpose(data, &mut t, n_y, n_z);
    rows(fz.as_ref(), &mut t, n_z);
    transpose(&t, data, n_z, n_y);
}

/// Forward FFT, multiply by `factors` (which must include the `1/N`), inverse FFT.
pub(crate) fn apply_diagonal_in_k(grid: &Grid2D, data: &mut [Complex64], factors: &[Complex64]) {
    fft2(grid, data, Direction::Forward);
    par::for_each_chunk_mut(data, par::CHUNK, |off, c| {
        let n = c.len();
        for (v, f) in c.iter_mut().zip(&factors[off..off + n]) {
            *v *= f;
        }
    });
    fft2(grid, data, Direction::Inverse);
}

/// `exp(−τ·k²)/N` for every grid wavenumber: `τ = i·h` is a real-time kinetic
/// step of length `h`, real `τ` an imaginary-time one.
pub(crate) fn kinetic_factors(grid: &Grid2D, tau: Complex64) -> Vec<Complex64> {
    let inv_n = 1.0 / grid.len() as f64;
    grid.k_squared().iter().map(|k2| (-tau * k2).exp() * inv_n).collect()
}

/// `∫ψ*(−∇²)ψ dA`, evaluated spectrally.
pub(crate) fn kinetic_energy(grid: &Grid2D, values: &[Complex64]) -> f64 {
    let mut hat = values.to_vec();
    fft2(grid, &mut hat, Direction::Forward);
    let k2 = grid.k_squared();
    let sum = par::sum_chunks(&hat, |off, c| {
        c.iter().zip(&k2[off..off + c.len()]).map(|(v, k)| k * v.norm_sqr()).sum()
    });
    sum * grid.cell_area() / grid.len() as f64
}

fn rows(fft: &dyn Fft<f64>, data: &mut [Complex64], len: usize) {
    let per_task = (par::CHUNK / len).max(1) * len;
    par::for_each_chunk_mut(data, per_task, |_, c| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(c, &mut scratch);
    });
}

/// `src` has `rows` rows of length `cols`; `dst` receives the transpose.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    let per_task = (par::CHUNK / rows).max(1) * rows;
    par::for_each_chunk_mut(dst, per_task, |off, c| {
        let first = off / rows;
        for (r, out_row) in c.chunks_mut(rows).enumerate() {
            let col = first + r;
            for (i, v) in out_row.iter_mut().enumerate() {
                *v = src[i * cols + col];
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_maps_to_zero_wavenumber() {
        let g = Grid2D::new(16, 8, 4.0, 2.0).unwrap();
        let f = TransverseField::from_fn(g.clone(), |_, _| Complex64::new(1.0, 0.0));
        let k = spectral_transform(&f, Direction::Forward).unwrap();
        let expect = (g.len() as f64).sqrt();
        assert!((k.values()[0].re - expect).abs() < 1e-12);
        assert!(k.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_maps_to_single_mode() {
        let g = Grid2D::new(32, 32, 10.0, 10.0).unwrap();
        let (qy, qz) = (3, 29); // kz index 29 is -3
        let f = TransverseField::from_fn(g.clone(), |y, z| {
            Complex64::from_polar(1.0, g.ky(qy) * y + g.kz(qz) * z)
        });
        let k = spectral_transform(&f, Direction::Forward).unwrap();
        let peak = qz * 32 + qy;
        for (i, v) in k.values().iter().enumerate() {
            if i == peak {
                assert!((v.norm() - 32.0).abs() < 1e-10);
            } else {
                assert!(v.norm() < 1e-10, "leak at {i}: {v}");
            }
        }
        assert!((g.kz(qz) + 3.0 * 2.0 * PI / 10.0).abs() < 1e-12);
    }
}
