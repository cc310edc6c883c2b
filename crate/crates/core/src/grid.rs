//! Uniform transverse grid in recoil length units.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::spectral::FftPlan;
use crate::{Error, Result};

/// A uniform periodic `(y, z)` grid. Storage order is row-major with `y`
/// fastest: index `iz * n_y + iy`. The origin sits at index `n/2` on each axis.
pub struct Grid2D {
    n_y: usize,
    n_z: usize,
    extent_y: f64,
    extent_z: f64,
    k2: Vec<f64>,
    pub(crate) plan: FftPlan,
}

impl Grid2D {
    /// Builds a grid; `extent_*` are full side lengths in internal units.
    pub fn new(n_y: usize, n_z: usize, extent_y: f64, extent_z: f64) -> Result<Arc<Self>> {
        for (name, n) in [("n_y", n_y), ("n_z", n_z)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::invalid(name, format!("{n} is not a power of two >= 2")));
            }
        }
        if !(extent_y > 0.0 && extent_z > 0.0 && extent_y.is_finite() && extent_z.is_finite()) {
            return Err(Error::invalid("extent", "grid extents must be positive"));
        }
        let ky: Vec<f64> = (0..n_y).map(|i| wavenumber(i, n_y, extent_y)).collect();
        let kz: Vec<f64> = (0..n_z).map(|j| wavenumber(j, n_z, extent_z)).collect();
        let mut k2 = Vec::with_capacity(n_y * n_z);
        for kzj in &kz {
            for kyi in &ky {
                k2.push(kyi * kyi + kzj * kzj);
            }
        }
        Ok(Arc::new(Self {
            n_y,
            n_z,
            extent_y,
            extent_z,
            k2,
            plan: FftPlan::new(n_y, n_z),
        }))
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn len(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extent_y(&self) -> f64 {
        self.extent_y
    }

    pub fn extent_z(&self) -> f64 {
        self.extent_z
    }

    pub fn dy(&self) -> f64 {
        self.extent_y / self.n_y as f64
    }

    pub fn dz(&self) -> f64 {
        self.extent_z / self.n_z as f64
    }

    /// Area element `dy·dz`.
    pub fn cell_area(&self) -> f64 {
        self.dy() * self.dz()
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.n_y / 2) as f64) * self.dy()
    }

    pub fn z(&self, iz: usize) -> f64 {
        (iz as f64 - (self.n_z / 2) as f64) * self.dz()
    }

    pub fn ky(&self, iy: usize) -> f64 {
        wavenumber(iy, self.n_y, self.extent_y)
    }

    pub fn kz(&self, iz: usize) -> f64 {
        wavenumber(iz, self.n_z, self.extent_z)
    }

    /// Coordinates of flat index `idx`.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        (self.y(idx % self.n_y), self.z(idx / self.n_y))
    }

    /// `|k|²` per flat index, which is also the transverse kinetic energy in
    /// recoil units.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    /// Kinetic energy of the highest resolved mode.
    pub fn nyquist_kinetic(&self) -> f64 {
        self.k2.iter().cloned().fold(0.0, f64::max)
    }

    pub fn contains(&self, y: f64, z: f64) -> bool {
        self.locate(y, z).is_some()
    }

    /// Cell and fractional offsets for bilinear interpolation at `(y, z)`.
    pub fn locate(&self, y: f64, z: f64) -> Option<(usize, usize, f64, f64)> {
        let fy = y / self.dy() + (self.n_y / 2) as f64;
        let fz = z / self.dz() + (self.n_z / 2) as f64;
        if !(fy >= 0.0 && fz >= 0.0) {
            return None;
        }
        let (iy, iz) = (fy.floor() as usize, fz.floor() as usize);
        if iy + 1 >= self.n_y || iz + 1 >= self.n_z {
            return None;
        }
        Some((iy, iz, fy - iy as f64, fz - iz as f64))
    }

    pub fn sample_complex(&self, values: &[Complex64], y: f64, z: f64) -> Option<Complex64> {
        let (iy, iz, ty, tz) = self.locate(y, z)?;
        let at = |a: usize, b: usize| values[b * self.n_y + a];
        Some(
            at(iy, iz) * ((1.0 - ty) * (1.0 - tz))
                + at(iy + 1, iz) * (ty * (1.0 - tz))
                + at(iy, iz + 1) * ((1.0 - ty) * tz)
                + at(iy + 1, iz + 1) * (ty * tz),
        )
    }

    pub fn sample_real(&self, values: &[f64], y: f64, z: f64) -> Option<f64> {
        let (iy, iz, ty, tz) = self.locate(y, z)?;
        let at = |a: usize, b: usize| values[b * self.n_y + a];
        Some(
            at(iy, iz) * (1.0 - ty) * (1.0 - tz)
                + at(iy + 1, iz) * ty * (1.0 - tz)
                + at(iy, iz + 1) * (1.0 - ty) * tz
                + at(iy + 1, iz + 1) * ty * tz,
        )
    }

    /// Same spacing, `factor` times as many points per axis.
    pub fn padded(&self, factor: usize) -> Result<Arc<Grid2D>> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::invalid("pad_factor", "must be a power of two >= 1"));
        }
        Grid2D::new(
            self.n_y * factor,
            self.n_z * factor,
            self.extent_y * factor as f64,
            self.extent_z * factor as f64,
        )
    }

    /// Copies `values` into the centre of the larger grid `big`, which must
    /// share this grid's spacing.
    pub fn embed(&self, values: &[Complex64], big: &Grid2D) -> Result<Vec<Complex64>> {
        if big.n_y < self.n_y || big.n_z < self.n_z || !self.same_spacing(big) {
            return Err(Error::DimensionMismatch {
                expected: format!("grid with spacing ({}, {})", self.dy(), self.dz()),
                found: format!("{}x{} grid", big.n_y, big.n_z),
            });
        }
        let oy = big.n_y / 2 - self.n_y / 2;
        let oz = big.n_z / 2 - self.n_z / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); big.len()];
        for iz in 0..self.n_z {
            let src = &values[iz * self.n_y..(iz + 1) * self.n_y];
            let start = (iz + oz) * big.n_y + oy;
            out[start..start + self.n_y].copy_from_slice(src);
        }
        Ok(out)
    }

    fn same_spacing(&self, other: &Grid2D) -> bool {
        (self.dy() - other.dy()).abs() <= 1e-12 * self.dy()
            && (self.dz() - other.dz()).abs() <= 1e-12 * self.dz()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.n_y == other.n_y
            && self.n_z == other.n_z
            && self.extent_y.to_bits() == other.extent_y.to_bits()
            && self.extent_z.to_bits() == other.extent_z.to_bits()
    }
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n_y", &self.n_y)
            .field("n_z", &self.n_z)
            .field("extent_y", &self.extent_y)
            .field("extent_z", &self.extent_z)
            .finish()
    }
}

fn wavenumber(i: usize, n: usize, extent: f64) -> f64 {
    let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * PI * m / extent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid2D::new(100, 64, 1.0, 1.0).is_err());
        assert!(Grid2D::new(64, 64, 0.0, 1.0).is_err());
    }

    #[test]
    fn origin_at_half_index() {
        let g = Grid2D::new(8, 16, 8.0, 32.0).unwrap();
        assert_eq!(g.y(4), 0.0);
        assert_eq!(g.z(8), 0.0);
        assert_eq!(g.y(0), -4.0);
        assert_eq!(g.dz(), 2.0);
        assert_eq!(g.position(8 * 3 + 5), (1.0, -10.0));
    }

    #[test]
    fn bilinear_reproduces_linear_function() {
        let g = Grid2D::new(16, 16, 16.0, 16.0).unwrap();
        let v: Vec<f64> = (0..g.len())
            .map(|i| {
                let (y, z) = g.position(i);
                2.0 * y - 3.0 * z + 1.0
            })
            .collect();
        let s = g.sample_real(&v, 0.3, -2.7).unwrap();
        assert!((s - (0.6 + 8.1 + 1.0)).abs() < 1e-12);
        assert!(g.sample_real(&v, 7.5, 0.0).is_none());
    }

    #[test]
    fn embedding_keeps_origin() {
        let g = Grid2D::new(4, 4, 4.0, 4.0).unwrap();
        let big = g.padded(2).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[2 * 4 + 2] = Complex64::new(1.0, 0.0);
        let e = g.embed(&v, &big).unwrap();
        assert_eq!(e[4 * 8 + 4], Complex64::new(1.0, 0.0));
        assert_eq!(e.iter().filter(|c| c.re != 0.0).count(), 1);
    }
}
