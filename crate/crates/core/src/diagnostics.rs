//! Vortex observables: loop winding number, angular momentum expectation,
//! hole-angle extraction and the phase-correlation study.
//!
//! Every angle estimate uses circular statistics (vector means), so nothing
//! depends on where the branch cut sits.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::field::TransverseField;
use crate::image::ImagePlane;
use crate::optics::ring_sample_count;
use crate::par;
use crate::spectral::{fft2, Direction};
use crate::{Error, Result};

/// Density floor (relative to the field's peak) below which the phase on a
/// winding loop is considered undefined.
pub const DENSITY_FLOOR: f64 = 1e-6;
/// Minimum single-hole contrast accepted by [`hole_angle`].
pub const HOLE_CONTRAST: f64 = 0.2;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Weighted vector mean of `angles`: direction and normalized resultant length.
pub fn circular_mean(angles: &[f64], weights: &[f64]) -> (f64, f64) {
    let (mut s, mut c, mut w) = (0.0, 0.0, 0.0);
    for (a, wt) in angles.iter().zip(weights) {
        s += wt * a.sin();
        c += wt * a.cos();
        w += wt;
    }
    if w <= 0.0 {
        return (0.0, 0.0);
    }
    (s.atan2(c), s.hypot(c) / w)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingDetail {
    pub winding: i32,
    /// RMS deviation (rad) of the unwrapped loop phase from `winding·φ + c`.
    pub residual: f64,
    pub samples: usize,
}

/// Number of `2π` turns of the phase of `field` around a circle.
pub fn winding_number(field: &TransverseField, loop_radius: f64, center: (f64, f64)) -> Result<i32> {
    winding_detail(field, loop_radius, center).map(|d| d.winding)
}

pub fn winding_detail(field: &TransverseField, loop_radius: f64, center: (f64, f64)) -> Result<WindingDetail> {
    let grid = field.grid();
    if !grid.contains(center.0, center.1) {
        return Err(Error::OutsideGrid { y: center.0, z: center.1 });
    }
    if !(loop_radius > 0.0) {
        return Err(Error::invalid("loop_radius", "must be positive"));
    }
    let step = 0.5 * grid.dy().min(grid.dz());
    let samples = ((TAU * loop_radius / step).ceil() as usize).max(64);
    let floor = DENSITY_FLOOR * field.peak_density();
    let mut phases = Vec::with_capacity(samples);
    for i in 0..samples {
        let phi = TAU * i as f64 / samples as f64;
        let (y, z) = (center.0 + loop_radius * phi.cos(), center.1 + loop_radius * phi.sin());
        let v = grid
            .sample_complex(field.values(), y, z)
            .ok_or(Error::OutsideGrid { y, z })?;
        if !(v.norm_sqr() >= floor) || v.norm_sqr() == 0.0 {
            return Err(Error::DensityFloor { floor: DENSITY_FLOOR });
        }
        phases.push(v.arg());
    }
    let mut unwrapped = Vec::with_capacity(samples + 1);
    let mut acc = phases[0];
    unwrapped.push(acc);
    for i in 1..=samples {
        acc += wrap_angle(phases[i % samples] - phases[i - 1]);
        unwrapped.push(acc);
    }
    let total = acc - phases[0];
    let winding = (total / TAU).round() as i32;
    let offset: f64 = unwrapped[..samples]
        .iter()
        .enumerate()
        .map(|(i, u)| u - winding as f64 * TAU * i as f64 / samples as f64)
        .sum::<f64>()
        / samples as f64;
    let residual = (unwrapped[..samples]
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let d = u - winding as f64 * TAU * i as f64 / samples as f64 - offset;
            d * d
        })
        .sum::<f64>()
        / samples as f64)
        .sqrt();
    Ok(WindingDetail { winding, residual, samples })
}

/// `⟨L⟩/ħ = ∫ψ*(−i∂_φ)ψ / ∫|ψ|²` about `center`, with the derivatives taken
/// spectrally (`L = y·p_z − z·p_y`).
pub fn oam_expectation(field: &TransverseField, center: (f64, f64)) -> Result<f64> {
    let grid = field.grid();
    let norm = field.norm_sq();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("zero field has no angular momentum".into()));
    }
    let n = grid.len() as f64;
    let mut hat = field.values().to_vec();
    fft2(grid, &mut hat, Direction::Forward);
    let mut dy = hat.clone();
    let mut dz = hat;
    for (idx, (a, b)) in dy.iter_mut().zip(dz.iter_mut()).enumerate() {
        let (iy, iz) = (idx % grid.n_y(), idx / grid.n_y());
        *a *= Complex64::new(0.0, grid.ky(iy) / n);
        *b *= Complex64::new(0.0, grid.kz(iz) / n);
    }
    fft2(grid, &mut dy, Direction::Inverse);
    fft2(grid, &mut dz, Direction::Inverse);
    let psi = field.values();
    let (mut re, mut im) = (0.0, 0.0);
    for idx in 0..psi.len() {
        let (y, z) = grid.position(idx);
        let l = Complex64::new(0.0, -1.0) * ((y - center.0) * dz[idx] - (z - center.1) * dy[idx]);
        let v = psi[idx].conj() * l;
        re += v.re;
        im += v.im;
    }
    let area = grid.cell_area();
    let (re, im) = (re * area / norm, im * area / norm);
    if im.abs() > 1e-10 * re.abs().max(1.0) {
        return Err(Error::Degenerate(format!("angular momentum has imaginary part {im:.3e}")));
    }
    Ok(re)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexReport {
    pub winding: i32,
    /// `⟨L⟩` in units of ħ.
    pub l_z_expect: f64,
    pub core_location: (f64, f64),
    /// RMS residual (rad) of the loop phase about a pure winding.
    pub confidence: f64,
}

/// Winding and angular momentum of `field`. Without an explicit `center`, the
/// core is located by a density-minimum search seeded at the centroid.
pub fn vortex_report(field: &TransverseField, loop_radius: f64, center: Option<(f64, f64)>) -> Result<VortexReport> {
    let core = match center {
        Some(c) => c,
        None => find_core(field, 0.5 * loop_radius)?,
    };
    let detail = winding_detail(field, loop_radius, core)?;
    let l_z_expect = oam_expectation(field, core)?;
    Ok(VortexReport { winding: detail.winding, l_z_expect, core_location: core, confidence: detail.residual })
}

/// Density centroid, then the lowest-density grid point within `radius` of it.
pub fn find_core(field: &TransverseField, radius: f64) -> Result<(f64, f64)> {
    let grid = field.grid();
    let density = field.density();
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("zero field has no core".into()));
    }
    let (mut cy, mut cz) = (0.0, 0.0);
    for (idx, d) in density.iter().enumerate() {
        let (y, z) = grid.position(idx);
        cy += y * d;
        cz += z * d;
    }
    let (cy, cz) = (cy / total, cz / total);
    let mut best = (f64::INFINITY, (cy, cz));
    for (idx, d) in density.iter().enumerate() {
        let (y, z) = grid.position(idx);
        if (y - cy).hypot(z - cz) <= radius && *d < best.0 {
            best = (*d, (y, z));
        }
    }
    Ok(best.1)
}

/// Angle-resolved mean intensity over the annulus `[r_min, r_max]` about the
/// image origin.
pub fn angular_profile(image: &ImagePlane, annulus: (f64, f64), samples: usize) -> Result<Vec<(f64, f64)>> {
    let (r_min, r_max) = annulus;
    if !(r_min >= 0.0 && r_max > r_min) {
        return Err(Error::invalid("annulus", "need 0 <= r_min < r_max"));
    }
    let radial = (((r_max - r_min) / image.pitch()).ceil() as usize + 1).max(3);
    (0..samples)
        .map(|i| {
            let phi = TAU * i as f64 / samples as f64;
            let (c, s) = (phi.cos(), phi.sin());
            let mut acc = 0.0;
            for j in 0..radial {
                let r = r_min + (r_max - r_min) * j as f64 / (radial - 1) as f64;
                acc += image
                    .sample(r * c, r * s)
                    .ok_or(Error::OutsideGrid { y: r * c, z: r * s })?;
            }
            Ok((phi, acc / radial as f64))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoleAngle {
    /// Azimuth in `[0, 2π)`.
    pub angle: f64,
    /// First-harmonic modulation `2|c₁|/c₀` of the angular profile.
    pub contrast: f64,
    /// Angular resolution of one pixel at the annulus mid radius.
    pub pixel_angle: f64,
}

/// Azimuth of the single density hole inside `annulus`.
pub fn hole_angle(image: &ImagePlane, annulus: (f64, f64)) -> Result<f64> {
    hole_angle_detail(image, annulus).map(|h| h.angle)
}

pub fn hole_angle_detail(image: &ImagePlane, annulus: (f64, f64)) -> Result<HoleAngle> {
    let samples = ring_sample_count(annulus.1, image.pitch());
    let profile = angular_profile(image, annulus, samples)?;
    let mean = profile.iter().map(|p| p.1).sum::<f64>() / samples as f64;
    let first: Complex64 = profile
        .iter()
        .map(|(phi, v)| Complex64::from_polar(*v, -phi))
        .sum::<Complex64>()
        / samples as f64;
    let contrast = if mean > 0.0 { 2.0 * first.norm() / mean } else { 0.0 };
    if !(contrast > HOLE_CONTRAST) {
        return Err(Error::LowContrast { contrast, threshold: HOLE_CONTRAST });
    }
    let (y, z) = deepest_relative_dip(image, annulus).ok_or(Error::LowContrast { contrast: 0.0, threshold: HOLE_CONTRAST })?;
    let mid = 0.5 * (annulus.0 + annulus.1);
    Ok(HoleAngle {
        angle: z.atan2(y).rem_euclid(TAU),
        contrast,
        pixel_angle: image.pitch() / mid.max(image.pitch()),
    })
}

/// Position of the minimum of `I(r)/max(I(r), I(−r))` inside the annulus.
///
/// The point reflection removes any centro-symmetric envelope (an elliptical
/// cloud, say), so the minimum is the hole itself rather than the dimmest part
/// of the cloud. Refined to sub-pixel precision by parabolic interpolation.
fn deepest_relative_dip(image: &ImagePlane, annulus: (f64, f64)) -> Option<(f64, f64)> {
    let (ny, nz) = (image.n_y(), image.n_z());
    let px = image.pixels();
    let floor = 1e-2 * image.max();
    let ratio = |iy: usize, iz: usize| -> Option<f64> {
        if iy == 0 || iz == 0 || iy >= ny || iz >= nz {
            return None;
        }
        let v = px[iz * ny + iy];
        let env = v.max(px[(nz - iz) * ny + (ny - iy)]);
        (env > floor).then(|| v / env)
    };
    let mut best: Option<(f64, usize, usize)> = None;
    for iz in 1..nz {
        for iy in 1..ny {
            let r = image.y(iy).hypot(image.z(iz));
            if r < annulus.0 || r > annulus.1 {
                continue;
            }
            if let Some(q) = ratio(iy, iz) {
                if best.is_none_or(|b| q < b.0) {
                    best = Some((q, iy, iz));
                }
            }
        }
    }
    let (q, iy, iz) = best?;
    let vertex = |lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
        (Some(a), Some(b)) => {
            let curv = a + b - 2.0 * q;
            if curv > 0.0 {
                (0.5 * (a - b) / curv).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    let sy = vertex(ratio(iy - 1, iz), ratio(iy + 1, iz));
    let sz = vertex(ratio(iy, iz - 1), ratio(iy, iz + 1));
    Some((image.y(iy) + sy * image.pitch(), image.z(iz) + sz * image.pitch()))
}

/// The `count` deepest local minima of the (lightly smoothed) angular profile,
/// deepest first.
pub fn angular_minima(image: &ImagePlane, annulus: (f64, f64), count: usize) -> Result<Vec<f64>> {
    let samples = ring_sample_count(annulus.1, image.pitch());
    let profile = angular_profile(image, annulus, samples)?;
    let half = (samples / 90).max(1);
    let smooth: Vec<f64> = (0..samples)
        .map(|i| {
            (0..=2 * half)
                .map(|k| profile[(i + samples + k - half) % samples].1)
                .sum::<f64>()
                / (2 * half + 1) as f64
        })
        .collect();
    let mut minima: Vec<(f64, f64)> = (0..samples)
        .filter(|&i| {
            let v = smooth[i];
            (1..=half).all(|k| v <= smooth[(i + k) % samples] && v < smooth[(i + samples - k) % samples])
        })
        .map(|i| (smooth[i], profile[i].0))
        .collect();
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(minima.into_iter().take(count).map(|m| m.1).collect())
}

/// Least-squares line for angular data `y` against real `x`, fitted modulo `2π`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircularLinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Wrapped residuals `y − (slope·x + intercept)`.
    pub residuals: Vec<f64>,
}

impl CircularLinearFit {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

/// Circular-linear regression: coarse search of the slope maximizing the mean
/// resultant length of `y − s·x`, then least squares on the unwrapped data.
/// Returns `None` when `x` has no spread.
pub fn fit_circular_linear(x: &[f64], y: &[f64]) -> Option<CircularLinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    if sxx < 1e-18 {
        return None;
    }
    let resultant = |s: f64| {
        let (mut c, mut si) = (0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            let d = b - s * a;
            c += d.cos();
            si += d.sin();
        }
        (c.hypot(si), si.atan2(c))
    };
    let mut best = (f64::MIN, 0.0);
    for i in 0..=12_000 {
        let s = -3.0 + 6.0 * i as f64 / 12_000.0;
        let (r, _) = resultant(s);
        if r > best.0 {
            best = (r, s);
        }
    }
    let mut slope = best.1;
    let mut intercept = resultant(slope).1;
    for _ in 0..3 {
        let unwrapped: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(a, b)| slope * a + intercept + wrap_angle(b - slope * a - intercept))
            .collect();
        let ym = unwrapped.iter().sum::<f64>() / n as f64;
        let sxy: f64 = x.iter().zip(&unwrapped).map(|(a, b)| (a - xm) * (b - ym)).sum();
        slope = sxy / sxx;
        intercept = ym - slope * xm;
    }
    let residuals = x
        .iter()
        .zip(y)
        .map(|(a, b)| wrap_angle(b - slope * a - intercept))
        .collect();
    Some(CircularLinearFit { slope, intercept: wrap_angle(intercept), residuals })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub trial: usize,
    pub beam_phase: f64,
    pub readout_angle: f64,
    pub hole_angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseStudy {
    pub rows: Vec<StudyRow>,
    /// Hole angle against the applied beam phase.
    pub hole_vs_phase: Option<CircularLinearFit>,
    /// Optical readout angle against the applied beam phase.
    pub readout_vs_phase: Option<CircularLinearFit>,
    /// Hole angle against the optical readout angle.
    pub hole_vs_readout: Option<CircularLinearFit>,
    /// Circular standard deviation of the hole angles (rad).
    pub hole_spread: f64,
}

/// Runs `trial(phase) -> (readout_angle, hole_angle)` for every phase (trials
/// may run concurrently; rows keep input order) and fits the correlations.
pub fn phase_correlation_study<F>(phases: &[f64], trial: F) -> Result<PhaseStudy>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync + Send,
{
    if phases.len() < 3 {
        return Err(Error::invalid("n_trials", "need at least 3 trials"));
    }
    let results = par::map_indexed(phases.len(), |i| trial(phases[i]));
    let mut rows = Vec::with_capacity(phases.len());
    for (i, r) in results.into_iter().enumerate() {
        let (readout_angle, hole_angle) = r?;
        rows.push(StudyRow { trial: i, beam_phase: phases[i], readout_angle, hole_angle });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.beam_phase).collect();
    let holes: Vec<f64> = rows.iter().map(|r| r.hole_angle).collect();
    let readouts: Vec<f64> = rows.iter().map(|r| r.readout_angle).collect();
    let ones = vec![1.0; holes.len()];
    let (_, r) = circular_mean(&holes, &ones);
    let hole_spread = if r >= 1.0 { 0.0 } else { (-2.0 * r.ln()).sqrt() };
    let unwrapped_readout = unwrap_sequence(&readouts);
    Ok(PhaseStudy {
        hole_vs_phase: fit_circular_linear(&x, &holes),
        readout_vs_phase: fit_circular_linear(&x, &readouts),
        hole_vs_readout: fit_circular_linear(&unwrapped_readout, &holes),
        hole_spread,
        rows,
    })
}

/// Removes `2π` jumps between consecutive entries.
pub fn unwrap_sequence(a: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    for (i, v) in a.iter().enumerate() {
        if i == 0 {
            out.push(*v);
        } else {
            let prev = out[i - 1];
            out.push(prev + wrap_angle(v - prev));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use std::sync::Arc;

    fn grid() -> Arc<Grid2D> {
        Grid2D::new(128, 128, 40.0, 40.0).unwrap()
    }

    fn charged(g: &Arc<Grid2D>, l: i32) -> TransverseField {
        let mut f = TransverseField::from_fn(g.clone(), move |y, z| {
            let r2 = y * y + z * z;
            let rho = r2.sqrt();
            Complex64::from_polar(rho.powi(l.abs()) * (-r2 / 25.0).exp(), l as f64 * z.atan2(y))
        });
        f.normalize().unwrap();
        f
    }

    #[test]
    fn winding_of_simple_fields() {
        let g = grid();
        assert_eq!(winding_number(&charged(&g, 1), 4.0, (0.0, 0.0)).unwrap(), 1);
        assert_eq!(winding_number(&charged(&g, 0), 4.0, (0.0, 0.0)).unwrap(), 0);
        assert_eq!(winding_number(&charged(&g, 2), 4.0, (0.0, 0.0)).unwrap(), 2);
        assert_eq!(winding_number(&charged(&g, -1), 4.0, (0.0, 0.0)).unwrap(), -1);
    }

    #[test]
    fn winding_errors() {
        let g = grid();
        let f = charged(&g, 1);
        assert!(matches!(winding_number(&f, 4.0, (50.0, 0.0)), Err(Error::OutsideGrid { .. })));
        assert!(matches!(winding_number(&f, 19.0, (0.0, 0.0)), Err(Error::DensityFloor { .. })));
    }

    #[test]
    fn angular_momentum_of_pure_and_mixed_states() {
        let g = grid();
        let one = charged(&g, 1);
        assert!((oam_expectation(&one, (0.0, 0.0)).unwrap() - 1.0).abs() < 1e-3);
        let minus = charged(&g, -1);
        let mut sup = TransverseField::from_values(
            g.clone(),
            one.values().iter().zip(minus.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        sup.normalize().unwrap();
        assert!(oam_expectation(&sup, (0.0, 0.0)).unwrap().abs() < 1e-3);
        // amplitudes √0.2 in charge 1 and √0.8 in charge 0, both normalized
        // separately; they are orthogonal so ⟨L⟩ = 0.2·1 + 0.8·0.
        let zero = charged(&g, 0);
        let mix = TransverseField::from_values(
            g.clone(),
            one.values()
                .iter()
                .zip(zero.values())
                .map(|(a, b)| a * 0.2f64.sqrt() + b * 0.8f64.sqrt())
                .collect(),
        )
        .unwrap();
        assert!((oam_expectation(&mix, (0.0, 0.0)).unwrap() - 0.2).abs() < 1e-3);
    }

    #[test]
    fn hole_angle_rejects_two_fold_pattern() {
        let img = ImagePlane::from_fn(128, 128, 0.3125, "cr", |y, z| {
            let phi = z.atan2(y);
            4.0 * (y * y + z * z) * (-(y * y + z * z) / 25.0).exp() * phi.cos().powi(2)
        })
        .unwrap();
        assert!(matches!(hole_angle(&img, (2.0, 8.0)), Err(Error::LowContrast { .. })));
    }

    #[test]
    fn circular_fit_recovers_wrapped_line() {
        let x: Vec<f64> = (0..18).map(|i| TAU * i as f64 / 18.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (PI - v + 0.3).rem_euclid(TAU)).collect();
        let f = fit_circular_linear(&x, &y).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-9);
        assert!(wrap_angle(f.intercept - PI - 0.3).abs() < 1e-9);
        assert!(f.max_abs_residual() < 1e-9);
        assert!(fit_circular_linear(&[1.0, 1.0, 1.0], &[0.0, 0.1, 0.2]).is_none());
    }

    #[test]
    fn study_needs_three_trials() {
        assert!(phase_correlation_study(&[0.0, 1.0], |p| Ok((p, p))).is_err());
    }
}
