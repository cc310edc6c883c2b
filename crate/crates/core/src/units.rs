//! Physical constants and the recoil unit system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Mass of a ²³Na atom (kg).
pub const SODIUM_MASS: f64 = 3.8175e-26;
/// Sodium D2 line wavelength (m).
pub const SODIUM_D2_WAVELENGTH: f64 = 589.0e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub atomic_mass: f64,
    pub wavelength: f64,
    /// Metadata only; the fields carry a normalized fraction.
    pub atom_number: f64,
    /// Effective 2D interaction strength (J·m²), if fixed explicitly.
    pub s_wave_coupling: Option<f64>,
    /// `(ν_x, ν_y, ν_z)` in Hz.
    pub trap_freqs: [f64; 3],
    /// Single-photon detuning Δ from the optical line (Hz); bookkeeping only.
    pub raman_detuning_from_line: f64,
}

impl PhysicalParams {
    /// Sodium in the triaxial trap with `ν_z = √2 ν_y = 2 ν_x = 40 Hz`.
    pub fn sodium() -> Self {
        Self {
            atomic_mass: SODIUM_MASS,
            wavelength: SODIUM_D2_WAVELENGTH,
            atom_number: 1.5e6,
            s_wave_coupling: None,
            trap_freqs: [20.0, 40.0 / 2f64.sqrt(), 40.0],
            raman_detuning_from_line: -1.5e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atomic_mass > 0.0 && self.atomic_mass.is_finite()) {
            return Err(Error::invalid("atomic_mass", "must be positive"));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        if !(self.atom_number > 0.0) {
            return Err(Error::invalid("atom_number", "must be positive"));
        }
        if self.trap_freqs.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::invalid("trap_freqs", "must be non-negative"));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Recoil energy `(ħk)²/2M` in joules.
    pub fn recoil_energy(&self) -> f64 {
        let p = HBAR * self.wavenumber();
        p * p / (2.0 * self.atomic_mass)
    }

    /// Recoil frequency `E_r/h` in Hz.
    pub fn recoil_frequency(&self) -> f64 {
        self.recoil_energy() / PLANCK
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::sodium()
    }
}

/// Scale factors between SI and recoil units (`ħ = 1`, `E_r = 1`, length `1/k`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    /// Metres per internal length unit (`1/k`).
    pub length: f64,
    /// Joules per internal energy unit (`E_r`).
    pub energy: f64,
    /// Seconds per internal time unit (`ħ/E_r`).
    pub time: f64,
    /// Recoil frequency `ν_r` in Hz.
    pub recoil_frequency: f64,
}

pub fn make_recoil_units(params: &PhysicalParams) -> Result<UnitSystem> {
    params.validate()?;
    let energy = params.recoil_energy();
    Ok(UnitSystem {
        length: 1.0 / params.wavenumber(),
        energy,
        time: HBAR / energy,
        recoil_frequency: energy / PLANCK,
    })
}

impl UnitSystem {
    pub fn length_to_internal(&self, metres: f64) -> f64 {
        metres / self.length
    }

    pub fn length_to_si(&self, internal: f64) -> f64 {
        internal * self.length
    }

    pub fn time_to_internal(&self, seconds: f64) -> f64 {
        seconds / self.time
    }

    pub fn time_to_si(&self, internal: f64) -> f64 {
        internal * self.time
    }

    pub fn energy_to_internal(&self, joules: f64) -> f64 {
        joules / self.energy
    }

    pub fn energy_to_si(&self, internal: f64) -> f64 {
        internal * self.energy
    }

    /// Angular rate (rad/s) to internal rate (`E_r/ħ`).
    pub fn rate_to_internal(&self, rad_per_s: f64) -> f64 {
        rad_per_s * self.time
    }

    pub fn rate_to_si(&self, internal: f64) -> f64 {
        internal / self.time
    }

    /// Ordinary frequency (Hz) to an internal angular rate.
    pub fn frequency_to_internal(&self, hz: f64) -> f64 {
        2.0 * PI * hz * self.time
    }

    pub fn frequency_to_si(&self, internal: f64) -> f64 {
        internal / (2.0 * PI * self.time)
    }

    /// Frequency in Hz expressed in multiples of `ν_r`.
    pub fn in_recoil_frequencies(&self, hz: f64) -> f64 {
        hz / self.recoil_frequency
    }

    /// 2D interaction strength (J·m²) to internal units.
    pub fn coupling_to_internal(&self, joule_m2: f64) -> f64 {
        joule_m2 / (self.energy * self.length * self.length)
    }

    pub fn coupling_to_si(&self, internal: f64) -> f64 {
        internal * self.energy * self.length * self.length
    }

    /// Wavefunction amplitude (m⁻¹) to internal units.
    pub fn amplitude_to_internal(&self, per_metre: f64) -> f64 {
        per_metre * self.length
    }

    pub fn amplitude_to_si(&self, internal: f64) -> f64 {
        internal / self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_mass_and_wavelength() {
        let mut p = PhysicalParams::sodium();
        p.atomic_mass = 0.0;
        assert!(make_recoil_units(&p).is_err());
        let mut p = PhysicalParams::sodium();
        p.wavelength = -1.0;
        assert!(make_recoil_units(&p).is_err());
    }

    #[test]
    fn recoil_energy_is_unity_internally() {
        let p = PhysicalParams::sodium();
        let u = make_recoil_units(&p).unwrap();
        assert_eq!(u.energy_to_internal(p.recoil_energy()), 1.0);
    }

    #[test]
    fn length_round_trip() {
        let u = make_recoil_units(&PhysicalParams::sodium()).unwrap();
        let x = u.length_to_internal(u.length_to_si(1.0));
        assert!((x - 1.0).abs() < 1e-14);
    }
}
