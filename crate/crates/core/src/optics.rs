//! Laguerre-Gaussian and Gaussian transverse modes, two-photon Rabi maps, the
//! corkscrew dipole potential and the optical phase readout.
//!
//! Beams are evaluated at their waists (no Gouy phase or curvature) and
//! normalized to unit peak amplitude; absolute light intensities enter only
//! through the peak Rabi rate of a [`CouplingMap`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::circular_mean;
use crate::field::TransverseField;
use crate::grid::Grid2D;
use crate::image::ImagePlane;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeamKind {
    LaguerreGauss { l: i32, p: u32 },
    Gaussian,
}

impl BeamKind {
    /// Orbital angular momentum per photon in units of ħ.
    pub fn charge(&self) -> i32 {
        match self {
            BeamKind::LaguerreGauss { l, .. } => *l,
            BeamKind::Gaussian => 0,
        }
    }
}

/// Geometry in internal length units; `power` is bookkeeping (W).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub kind: BeamKind,
    pub waist: f64,
    pub power: f64,
    pub center: (f64, f64),
    pub phase: f64,
}

impl BeamSpec {
    pub fn laguerre_gauss(l: i32, waist: f64) -> Self {
        Self {
            kind: BeamKind::LaguerreGauss { l, p: 0 },
            waist,
            power: 0.0,
            center: (0.0, 0.0),
            phase: 0.0,
        }
    }

    pub fn gaussian(waist: f64) -> Self {
        Self {
            kind: BeamKind::Gaussian,
            waist,
            power: 0.0,
            center: (0.0, 0.0),
            phase: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_center(mut self, y: f64, z: f64) -> Self {
        self.center = (y, z);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::invalid("waist", "must be positive"));
        }
        if let BeamKind::LaguerreGauss { l, p } = self.kind {
            if p != 0 || l.abs() > 2 {
                return Err(Error::UnsupportedMode { l, p });
            }
        }
        Ok(())
    }

    /// Radius of maximal intensity: `w_0·√(|l|/2)`, zero for a Gaussian.
    pub fn ring_radius(&self) -> f64 {
        self.waist * (self.kind.charge().unsigned_abs() as f64 / 2.0).sqrt()
    }

    /// Unit-peak amplitude at `(y, z)` relative to the beam centre.
    pub fn amplitude(&self, y: f64, z: f64) -> Complex64 {
        let (dy, dz) = (y - self.center.0, z - self.center.1);
        let r2 = (dy * dy + dz * dz) / (self.waist * self.waist);
        let envelope = (-r2).exp();
        match self.kind {
            BeamKind::Gaussian => Complex64::from_polar(envelope, self.phase),
            BeamKind::LaguerreGauss { l, .. } => {
                let m = l.unsigned_abs() as i32;
                if m == 0 {
                    return Complex64::from_polar(envelope, self.phase);
                }
                // (√2ρ/w)^|l| e^{−ρ²/w²} peaks at ρ² = |l|w²/2 with value |l|^{|l|/2} e^{−|l|/2}
                let peak = (m as f64).powf(m as f64 / 2.0) * (-(m as f64) / 2.0).exp();
                let radial = (2.0 * r2).sqrt().powi(m) * envelope / peak;
                let phi = dz.atan2(dy);
                Complex64::from_polar(radial, l as f64 * phi + self.phase)
            }
        }
    }
}

/// Samples the unit-peak mode of `beam` on `grid`.
pub fn mode_field(beam: &BeamSpec, grid: &Arc<Grid2D>) -> Result<TransverseField> {
    beam.validate()?;
    let half = 0.5 * grid.extent_y().min(grid.extent_z());
    if let BeamKind::LaguerreGauss { .. } = beam.kind {
        let reach = beam.ring_radius() + beam.center.0.hypot(beam.center.1);
        if reach >= half {
            return Err(Error::BeamTooLarge { radius: reach, half_extent: half });
        }
    }
    if beam.center.0.abs() >= half || beam.center.1.abs() >= half {
        return Err(Error::BeamTooLarge { radius: beam.center.0.hypot(beam.center.1), half_extent: half });
    }
    let b = *beam;
    Ok(TransverseField::from_fn(grid.clone(), move |y, z| b.amplitude(y, z)))
}

/// Position-dependent two-photon Rabi rate `Ω(y, z)` (internal rate units).
/// An upward ladder step multiplies by `Ω`, a downward one by `conj(Ω)`.
#[derive(Clone, Debug)]
pub struct CouplingMap {
    pub omega: TransverseField,
    /// Phase winding added per upward step.
    pub oam_step: i32,
    pub peak_rate: f64,
}

impl CouplingMap {
    /// Same spatial shape with a different peak rate.
    pub fn with_peak_rate(&self, peak_rate: f64) -> Result<Self> {
        if !(peak_rate > 0.0 && peak_rate.is_finite()) {
            return Err(Error::invalid("peak_rate", "must be positive"));
        }
        let mut c = self.clone();
        c.omega.scale(peak_rate / self.peak_rate);
        c.peak_rate = peak_rate;
        Ok(c)
    }

    /// Spatially uniform coupling, the plane-wave limit.
    pub fn uniform(grid: Arc<Grid2D>, peak_rate: f64, phase: f64) -> Result<Self> {
        if !(peak_rate > 0.0) {
            return Err(Error::invalid("peak_rate", "must be positive"));
        }
        let c = Complex64::from_polar(peak_rate, phase);
        Ok(Self {
            omega: TransverseField::from_fn(grid, move |_, _| c),
            oam_step: 0,
            peak_rate,
        })
    }
}

/// `Ω(y,z) = Ω₀ · û_a · conj(û_b) · e^{i·rel_phase}`, scaled so that the largest
/// modulus on the grid is exactly `Ω₀`. Beam `a` is absorbed, beam `b` emits.
pub fn coupling_map(
    beam_a: &BeamSpec,
    beam_b: &BeamSpec,
    peak_rate: f64,
    rel_phase: f64,
    grid: &Arc<Grid2D>,
) -> Result<CouplingMap> {
    if !(peak_rate > 0.0 && peak_rate.is_finite()) {
        return Err(Error::invalid("peak_rate", "must be positive"));
    }
    let (la, lb) = (beam_a.kind.charge(), beam_b.kind.charge());
    if matches!(beam_a.kind, BeamKind::LaguerreGauss { .. })
        && matches!(beam_b.kind, BeamKind::LaguerreGauss { .. })
        && (la - lb).abs() > 2
    {
        return Err(Error::invalid("beams", format!("OAM step {} outside |l_a - l_b| <= 2", la - lb)));
    }
    let ua = mode_field(beam_a, grid)?;
    let ub = mode_field(beam_b, grid)?;
    let rot = Complex64::from_polar(1.0, rel_phase);
    let raw: Vec<Complex64> = ua
        .values()
        .iter()
        .zip(ub.values())
        .map(|(a, b)| a * b.conj() * rot)
        .collect();
    let max = raw.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Degenerate("beams do not overlap on the grid".into()));
    }
    let s = peak_rate / max;
    let omega = TransverseField::from_values(grid.clone(), raw.into_iter().map(|v| v * s).collect())?;
    Ok(CouplingMap { omega, oam_step: la - lb, peak_rate })
}

/// Sampled dipole-potential intensity over one axial lattice period.
#[derive(Clone, Debug)]
pub struct CorkscrewVolume {
    /// Axial sample positions, `[0, π)` in units of `1/k`.
    pub x: Vec<f64>,
    /// One `(y, z)` intensity slice per axial sample, grid layout.
    pub slices: Vec<Vec<f64>>,
    pub grid: Arc<Grid2D>,
}

impl CorkscrewVolume {
    pub fn max(&self) -> f64 {
        self.slices.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

/// Intensity `|u_LG e^{i(kx − πδν t)} + u_G e^{−i(kx − πδν t)}|²` of the
/// counter-propagating pair, sampled at `x_samples` points over `Δx = π/k`.
/// `delta_nu` is in units of `ν_r` and `t` in internal time units, so
/// `πδν·t = δν·t/2`.
pub fn corkscrew_potential(
    beam_lg: &BeamSpec,
    beam_g: &BeamSpec,
    delta_nu: f64,
    t: f64,
    x_samples: usize,
    grid: &Arc<Grid2D>,
) -> Result<CorkscrewVolume> {
    if x_samples < 8 {
        return Err(Error::invalid("x_samples", "need at least 8 samples per lattice period"));
    }
    let ul = mode_field(beam_lg, grid)?;
    let ug = mode_field(beam_g, grid)?;
    let x: Vec<f64> = (0..x_samples).map(|i| PI * i as f64 / x_samples as f64).collect();
    let slices = x
        .iter()
        .map(|&xi| {
            let phase = Complex64::from_polar(1.0, xi - 0.5 * delta_nu * t);
            ul.values()
                .iter()
                .zip(ug.values())
                .map(|(a, b)| (a * phase + b * phase.conj()).norm_sqr())
                .collect()
        })
        .collect();
    Ok(CorkscrewVolume { x, slices, grid: grid.clone() })
}

/// Interference of the LG beam with the co-propagating Gaussian,
/// `|û_LG e^{i·rel_phase} + û_G|²`, and the azimuth of its bright lobe on the
/// LG ring, which sits at `−rel_phase` for `l = 1`.
pub fn phase_readout_pattern(
    beam_lg: &BeamSpec,
    beam_g_copropagating: &BeamSpec,
    rel_phase: f64,
    grid: &Arc<Grid2D>,
) -> Result<(ImagePlane, f64)> {
    let ul = mode_field(beam_lg, grid)?;
    let ug = mode_field(beam_g_copropagating, grid)?;
    let rot = Complex64::from_polar(1.0, rel_phase);
    let density: Vec<f64> = ul
        .values()
        .iter()
        .zip(ug.values())
        .map(|(a, b)| (a * rot + b).norm_sqr())
        .collect();
    if density.iter().all(|d| *d == 0.0) {
        return Err(Error::Degenerate("zero-amplitude beams".into()));
    }
    let image = ImagePlane::from_grid_density(grid, density, "optical phase readout")?;
    let radius = beam_lg.ring_radius().max(image.pitch());
    let samples = ring_sample_count(radius, image.pitch());
    let ring = image
        .ring(radius, samples)
        .ok_or(Error::OutsideGrid { y: radius, z: 0.0 })?;
    let (angles, weights): (Vec<f64>, Vec<f64>) = ring.into_iter().unzip();
    let (angle, resultant) = circular_mean(&angles, &weights);
    let angle = if resultant < 1e-9 { 0.0 } else { angle.rem_euclid(2.0 * PI) };
    Ok((image, angle))
}

/// Angular samples for a ring of `radius`: at least 360 and at least two per
/// pixel of arc length.
pub(crate) fn ring_sample_count(radius: f64, pitch: f64) -> usize {
    ((4.0 * PI * radius / pitch).ceil() as usize).max(360)
}
