//! Real non-negative 2D images (synthetic absorption images and reference
//! patterns).

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::grid::Grid2D;
use crate::{Error, Result};

/// Pixels are row-major with `y` fastest, origin at pixel `(n_y/2, n_z/2)`,
/// square pixels of side `pitch` (internal length units).
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    n_y: usize,
    n_z: usize,
    pitch: f64,
    pixels: Vec<f64>,
    pub label: String,
}

impl ImagePlane {
    pub fn new(n_y: usize, n_z: usize, pitch: f64, pixels: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if pixels.len() != n_y * n_z {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", n_y * n_z),
                found: format!("{} pixels", pixels.len()),
            });
        }
        if !(pitch > 0.0) {
            return Err(Error::invalid("pitch", "must be positive"));
        }
        if pixels.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("pixels", "must be finite and non-negative"));
        }
        Ok(Self { n_y, n_z, pitch, pixels, label: label.into() })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(n_y: usize, n_z: usize, pitch: f64, label: impl Into<String>, f: F) -> Result<Self> {
        let mut pixels = Vec::with_capacity(n_y * n_z);
        for iz in 0..n_z {
            for iy in 0..n_y {
                let y = (iy as f64 - (n_y / 2) as f64) * pitch;
                let z = (iz as f64 - (n_z / 2) as f64) * pitch;
                pixels.push(f(y, z).max(0.0));
            }
        }
        Self::new(n_y, n_z, pitch, pixels, label)
    }

    /// Wraps a per-grid-point density; grids with unequal spacing are
    /// resampled to the finer one.
    pub fn from_grid_density(grid: &Grid2D, density: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let (dy, dz) = (grid.dy(), grid.dz());
        if (dy - dz).abs() <= 1e-12 * dy {
            return Self::new(grid.n_y(), grid.n_z(), dy, density, label);
        }
        let pitch = dy.min(dz);
        let n_y = (grid.extent_y() / pitch).round() as usize;
        let n_z = (grid.extent_z() / pitch).round() as usize;
        Self::from_fn(n_y, n_z, pitch, label, |y, z| grid.sample_real(&density, y, z).unwrap_or(0.0))
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.n_y / 2) as f64) * self.pitch
    }

    pub fn z(&self, iz: usize) -> f64 {
        (iz as f64 - (self.n_z / 2) as f64) * self.pitch
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    /// Bilinear sample; `None` outside the image.
    pub fn sample(&self, y: f64, z: f64) -> Option<f64> {
        let fy = y / self.pitch + (self.n_y / 2) as f64;
        let fz = z / self.pitch + (self.n_z / 2) as f64;
        if !(fy >= 0.0 && fz >= 0.0) {
            return None;
        }
        let (iy, iz) = (fy.floor() as usize, fz.floor() as usize);
        if iy + 1 >= self.n_y || iz + 1 >= self.n_z {
            return None;
        }
        let (ty, tz) = (fy - iy as f64, fz - iz as f64);
        let at = |a: usize, b: usize| self.pixels[b * self.n_y + a];
        Some(
            at(iy, iz) * (1.0 - ty) * (1.0 - tz)
                + at(iy + 1, iz) * ty * (1.0 - tz)
                + at(iy, iz + 1) * (1.0 - ty) * tz
                + at(iy + 1, iz + 1) * ty * tz,
        )
    }

    /// Resamples onto square pixels of side `pitch`, covering the same area.
    pub fn resample(&self, pitch: f64) -> Result<Self> {
        if !(pitch > 0.0) {
            return Err(Error::invalid("pitch", "must be positive"));
        }
        if (pitch - self.pitch).abs() <= 1e-12 * self.pitch {
            return Ok(self.clone());
        }
        let n_y = ((self.n_y as f64 * self.pitch / pitch).floor() as usize).max(1);
        let n_z = ((self.n_z as f64 * self.pitch / pitch).floor() as usize).max(1);
        Self::from_fn(n_y, n_z, pitch, self.label.clone(), |y, z| self.sample(y, z).unwrap_or(0.0))
    }

    /// The image rotated counter-clockwise by `alpha` about its origin.
    pub fn rotated(&self, alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Self::from_fn(self.n_y, self.n_z, self.pitch, self.label.clone(), |y, z| {
            self.sample(c * y + s * z, -s * y + c * z).unwrap_or(0.0)
        })
        .expect("rotation preserves validity")
    }

    /// Separable Gaussian blur with standard deviation `sigma` (length units).
    pub fn blurred(&self, sigma: f64) -> Self {
        if !(sigma > 0.0) {
            return self.clone();
        }
        let s = sigma / self.pitch;
        let half = (4.0 * s).ceil() as isize;
        let kernel: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * s * s)).exp()).collect();
        let norm: f64 = kernel.iter().sum();
        let conv = |src: &[f64], stride: usize, len: usize, count: usize, step: usize| {
            let mut out = vec![0.0; src.len()];
            for line in 0..count {
                let base = line * step;
                for i in 0..len {
                    let mut acc = 0.0;
                    for (k, w) in kernel.iter().enumerate() {
                        let j = i as isize + k as isize - half;
                        if j >= 0 && (j as usize) < len {
                            acc += w * src[base + j as usize * stride];
                        }
                    }
                    out[base + i * stride] = acc / norm;
                }
            }
            out
        };
        let a = conv(&self.pixels, 1, self.n_y, self.n_z, self.n_y);
        let b = conv(&a, self.n_y, self.n_z, self.n_y, 1);
        Self { pixels: b, ..self.clone() }
    }

    /// Adds seeded Gaussian noise of standard deviation `relative · max`,
    /// clamped at zero.
    pub fn with_noise(&self, seed: u64, relative: f64) -> Self {
        let sd = relative * self.max();
        if !(sd > 0.0) {
            return self.clone();
        }
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sd).expect("positive standard deviation");
        let pixels = self.pixels.iter().map(|p| (p + normal.sample(&mut rng)).max(0.0)).collect();
        Self { pixels, ..self.clone() }
    }

    /// Values on a circle of `radius`, `samples` equally spaced angles from 0.
    pub fn ring(&self, radius: f64, samples: usize) -> Option<Vec<(f64, f64)>> {
        (0..samples)
            .map(|i| {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                self.sample(radius * phi.cos(), radius * phi.sin()).map(|v| (phi, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_pixels() {
        assert!(ImagePlane::new(2, 2, 1.0, vec![0.0, 1.0, -1.0, 0.0], "x").is_err());
    }

    #[test]
    fn blur_preserves_mass_away_from_edges() {
        let mut px = vec![0.0; 64 * 64];
        px[32 * 64 + 32] = 1.0;
        let img = ImagePlane::new(64, 64, 1.0, px, "delta").unwrap();
        let b = img.blurred(2.0);
        assert!((b.sum() - 1.0).abs() < 1e-12);
        assert!(b.max() < 0.05);
    }

    #[test]
    fn noise_is_seeded() {
        let img = ImagePlane::from_fn(16, 16, 1.0, "g", |y, z| (-(y * y + z * z) / 10.0).exp()).unwrap();
        assert_eq!(img.with_noise(7, 0.1), img.with_noise(7, 0.1));
        assert_ne!(img.with_noise(7, 0.1), img.with_noise(8, 0.1));
    }

    #[test]
    fn resample_keeps_extent() {
        let img = ImagePlane::from_fn(32, 16, 1.0, "r", |y, _| y.abs()).unwrap();
        let r = img.resample(2.0).unwrap();
        assert_eq!((r.n_y(), r.n_z()), (16, 8));
        assert!((r.sample(4.0, 0.0).unwrap() - 4.0).abs() < 1e-12);
    }
}
