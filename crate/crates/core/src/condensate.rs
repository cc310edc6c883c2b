//! Trapped condensate ground state in the transverse plane: an analytic
//! Thomas-Fermi seed refined by imaginary-time relaxation.
//!
//! The Hamiltonian is `H = −∇² + V + g|ψ|²` in recoil units (`M = 1/2`), so a
//! harmonic trap of angular frequency `ω` reads `V = ω²y²/4`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{norm_sq, TransverseField};
use crate::grid::Grid2D;
use crate::par;
use crate::spectral::{apply_diagonal_in_k, kinetic_energy, kinetic_factors};
use crate::units::UnitSystem;
use crate::{Error, Result};

/// Transverse harmonic trap; angular frequencies in internal units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    pub omega_y: f64,
    pub omega_z: f64,
}

impl TrapSpec {
    pub fn new(omega_y: f64, omega_z: f64) -> Result<Self> {
        for (name, w) in [("omega_y", omega_y), ("omega_z", omega_z)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(name, "trap frequency must be finite and >= 0"));
            }
        }
        Ok(Self { omega_y, omega_z })
    }

    /// From trap frequencies in Hz.
    pub fn from_hz(nu_y: f64, nu_z: f64, units: &UnitSystem) -> Result<Self> {
        Self::new(units.frequency_to_internal(nu_y), units.frequency_to_internal(nu_z))
    }

    pub fn off() -> Self {
        Self { omega_y: 0.0, omega_z: 0.0 }
    }

    pub fn potential(&self, y: f64, z: f64) -> f64 {
        0.25 * (self.omega_y * self.omega_y * y * y + self.omega_z * self.omega_z * z * z)
    }

    pub fn potential_map(&self, grid: &Grid2D) -> Vec<f64> {
        par::map_indexed(grid.len(), |idx| {
            let (y, z) = grid.position(idx);
            self.potential(y, z)
        })
    }

    /// Thomas-Fermi radius along each axis for chemical potential `mu`.
    pub fn tf_radii(&self, mu: f64) -> (f64, f64) {
        let r = |w: f64| if w > 0.0 { 2.0 * mu.max(0.0).sqrt() / w } else { f64::INFINITY };
        (r(self.omega_y), r(self.omega_z))
    }

    fn require_confining(&self) -> Result<()> {
        if self.omega_y > 0.0 && self.omega_z > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("trap", "both transverse frequencies must be positive"))
        }
    }
}

/// Analytic 2D Thomas-Fermi chemical potential for unit norm:
/// `μ = √(g·ω_y·ω_z / 2π)`.
pub fn tf_chemical_potential(trap: &TrapSpec, g2d: f64) -> f64 {
    (g2d * trap.omega_y * trap.omega_z / (2.0 * PI)).sqrt()
}

/// Interaction strength whose Thomas-Fermi cloud has radius `radius_y` along `y`.
pub fn g2d_for_radius(trap: &TrapSpec, radius_y: f64) -> Result<f64> {
    trap.require_confining()?;
    if !(radius_y > 0.0) {
        return Err(Error::invalid("radius_y", "must be positive"));
    }
    let mu = 0.25 * trap.omega_y * trap.omega_y * radius_y * radius_y;
    Ok(2.0 * PI * mu * mu / (trap.omega_y * trap.omega_z))
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub field: TransverseField,
    pub chemical_potential: f64,
    /// `(R_y, R_z)` in internal length units.
    pub tf_radii: (f64, f64),
    pub energy: f64,
}

/// Thomas-Fermi density `max(0, μ − V)/g` with `μ` fixed by the discrete norm.
pub fn thomas_fermi_profile(trap: &TrapSpec, g2d: f64, grid: &Arc<Grid2D>) -> Result<GroundState> {
    if !(g2d > 0.0 && g2d.is_finite()) {
        return Err(Error::invalid("g2d", "Thomas-Fermi profile needs a positive interaction"));
    }
    trap.require_confining()?;
    let v = trap.potential_map(grid);
    let area = grid.cell_area();
    let norm = |mu: f64| v.iter().map(|p| (mu - p).max(0.0)).sum::<f64>() * area / g2d;
    let analytic = tf_chemical_potential(trap, g2d);
    let (mut lo, mut hi) = (0.0, 2.0 * analytic);
    while norm(hi) < 1.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Degenerate("Thomas-Fermi normalization diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);
    let radii = trap.tf_radii(mu);
    if radii.0 >= 0.5 * grid.extent_y() || radii.1 >= 0.5 * grid.extent_z() {
        return Err(Error::invalid(
            "grid",
            format!("Thomas-Fermi radii {radii:?} do not fit inside the grid"),
        ));
    }
    let values = v.iter().map(|p| Complex64::new(((mu - p).max(0.0) / g2d).sqrt(), 0.0)).collect();
    let mut field = TransverseField::from_values(grid.clone(), values)?;
    field.normalize()?;
    let energy = energy(&field, trap, g2d);
    Ok(GroundState { field, chemical_potential: mu, tf_radii: radii, energy })
}

/// Harmonic-oscillator ground state `∝ exp(−Σ ω_i y_i²/4)`, the exact `g = 0` solution.
pub fn gaussian_seed(trap: &TrapSpec, grid: &Arc<Grid2D>) -> Result<GroundState> {
    trap.require_confining()?;
    let mut field = TransverseField::from_fn(grid.clone(), |y, z| {
        Complex64::new((-0.25 * (trap.omega_y * y * y + trap.omega_z * z * z)).exp(), 0.0)
    });
    field.normalize()?;
    let energy = energy(&field, trap, 0.0);
    Ok(GroundState {
        field,
        chemical_potential: 0.5 * (trap.omega_y + trap.omega_z),
        tf_radii: (2.0 / trap.omega_y.sqrt(), 2.0 / trap.omega_z.sqrt()),
        energy,
    })
}

/// Gross-Pitaevskii energy `∫ψ*(−∇²)ψ + V|ψ|² + (g/2)|ψ|⁴`.
pub fn energy(field: &TransverseField, trap: &TrapSpec, g2d: f64) -> f64 {
    let (kin, pot, int) = energy_terms(field, trap);
    kin + pot + 0.5 * g2d * int
}

/// `∫ψ*(−∇² + V + g|ψ|²)ψ / ∫|ψ|²`.
pub fn chemical_potential(field: &TransverseField, trap: &TrapSpec, g2d: f64) -> f64 {
    let (kin, pot, int) = energy_terms(field, trap);
    (kin + pot + g2d * int) / field.norm_sq()
}

fn energy_terms(field: &TransverseField, trap: &TrapSpec) -> (f64, f64, f64) {
    let grid = field.grid();
    let kin = kinetic_energy(grid, field.values());
    let (pot, int) = local_terms(grid, field.values(), trap);
    (kin, pot, int)
}

fn local_terms(grid: &Grid2D, values: &[Complex64], trap: &TrapSpec) -> (f64, f64) {
    let pot = par::sum_chunks(values, |off, c| {
        c.iter()
            .enumerate()
            .map(|(i, v)| {
                let (y, z) = grid.position(off + i);
                trap.potential(y, z) * v.norm_sqr()
            })
            .sum()
    });
    let int = par::sum_chunks(values, |_, c| c.iter().map(|v| v.norm_sqr().powi(2)).sum());
    (pot * grid.cell_area(), int * grid.cell_area())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxOptions {
    /// Imaginary time step (internal units).
    pub dt: f64,
    /// Convergence threshold on the relative energy change per step.
    pub tol: f64,
    pub max_steps: usize,
    /// Steps between energy evaluations.
    pub check_every: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { dt: 0.5, tol: 1e-11, max_steps: 200_000, check_every: 25 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxReport {
    pub steps: usize,
    /// `(step, energy)` at every check.
    pub energy_history: Vec<(usize, f64)>,
    /// Whether every checked energy was below its predecessor (up to rounding).
    pub monotonic: bool,
}

/// Imaginary-time split-step relaxation with renormalization after each step.
pub fn relax_ground_state(
    seed: &GroundState,
    trap: &TrapSpec,
    g2d: f64,
    opts: &RelaxOptions,
) -> Result<(GroundState, RelaxReport)> {
    if !(g2d >= 0.0 && g2d.is_finite()) {
        return Err(Error::invalid("g2d", "must be finite and >= 0"));
    }
    if !(opts.dt > 0.0) || opts.check_every == 0 {
        return Err(Error::invalid("dt", "time step and check interval must be positive"));
    }
    let grid = seed.field.grid_ref().clone();
    let v = trap.potential_map(&grid);
    let v_max = v.iter().cloned().fold(0.0, f64::max);
    let stiff = v_max.max(grid.nyquist_kinetic());
    if opts.dt * stiff >= 0.5 {
        return Err(Error::StepSize { term: "relaxation", phase: opts.dt * stiff, limit: 0.5 });
    }
    let dt = opts.dt;
    let half = kinetic_factors(&grid, Complex64::new(0.5 * dt, 0.0));
    let area = grid.cell_area();

    let mut psi = seed.field.values().to_vec();
    let renormalize = |psi: &mut Vec<Complex64>| -> Result<()> {
        let n = norm_sq(psi) * area;
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NonFinite("imaginary-time relaxation"));
        }
        let s = 1.0 / n.sqrt();
        par::for_each_chunk_mut(psi, par::CHUNK, |_, c| c.iter_mut().for_each(|x| *x *= s));
        Ok(())
    };
    renormalize(&mut psi)?;
    let eval = |psi: &[Complex64]| {
        let f = TransverseField::from_values(grid.clone(), psi.to_vec()).expect("finite state");
        energy(&f, trap, g2d)
    };

    let mut last = eval(&psi);
    let mut history = vec![(0, last)];
    let mut monotonic = true;
    let mut step = 0;
    loop {
        for _ in 0..opts.check_every {
            apply_diagonal_in_k(&grid, &mut psi, &half);
            par::for_each_chunk_mut(&mut psi, par::CHUNK, |off, c| {
                for (i, x) in c.iter_mut().enumerate() {
                    *x *= (-dt * (v[off + i] + g2d * x.norm_sqr())).exp();
                }
            });
            apply_diagonal_in_k(&grid, &mut psi, &half);
            renormalize(&mut psi)?;
        }
        step += opts.check_every;
        let e = eval(&psi);
        if e > last + 1e-13 * last.abs().max(1e-30) {
            monotonic = false;
        }
        let change = (last - e).abs() / e.abs().max(1e-300) / opts.check_every as f64;
        history.push((step, e));
        last = e;
        if change < opts.tol {
            break;
        }
        if step >= opts.max_steps {
            return Err(Error::NonConvergence { steps: step, residual: change });
        }
    }

    // fix the global phase: real and positive at the density peak
    let peak = psi
        .iter()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let rot = peak.conj() / peak.norm();
    psi.iter_mut().for_each(|x| *x *= rot);
    let field = TransverseField::from_values(grid.clone(), psi)?;
    let mu = chemical_potential(&field, trap, g2d);
    let state = GroundState { tf_radii: trap.tf_radii(mu), chemical_potential: mu, energy: last, field };
    Ok((state, RelaxReport { steps: step, energy_history: history, monotonic }))
}

/// Thomas-Fermi seed (or the oscillator Gaussian when `g2d = 0`) followed by
/// relaxation.
pub fn prepare_ground_state(
    trap: &TrapSpec,
    g2d: f64,
    grid: &Arc<Grid2D>,
    opts: &RelaxOptions,
) -> Result<(GroundState, RelaxReport)> {
    let seed = if g2d > 0.0 { thomas_fermi_profile(trap, g2d, grid)? } else { gaussian_seed(trap, grid)? };
    relax_ground_state(&seed, trap, g2d, opts)
}

/// One real-time Strang step `exp(−iK dt/2)·exp(−i(V + g|ψ|²)dt)·exp(−iK dt/2)`.
pub fn real_time_step(field: &TransverseField, trap: &TrapSpec, g2d: f64, dt: f64) -> TransverseField {
    let grid = field.grid_ref().clone();
    let half = kinetic_factors(&grid, Complex64::new(0.0, 0.5 * dt));
    let v = trap.potential_map(&grid);
    let mut psi = field.values().to_vec();
    apply_diagonal_in_k(&grid, &mut psi, &half);
    par::for_each_chunk_mut(&mut psi, par::CHUNK, |off, c| {
        for (i, x) in c.iter_mut().enumerate() {
            *x *= Complex64::from_polar(1.0, -dt * (v[off + i] + g2d * x.norm_sqr()));
        }
    });
    apply_diagonal_in_k(&grid, &mut psi, &half);
    TransverseField::from_values(grid, psi).expect("unitary step keeps the field finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_trap_gives_equal_radii() {
        let g = Grid2D::new(64, 64, 200.0, 200.0).unwrap();
        let trap = TrapSpec::new(0.05, 0.05).unwrap();
        let gs = thomas_fermi_profile(&trap, 50.0, &g).unwrap();
        assert!((gs.tf_radii.0 - gs.tf_radii.1).abs() < 1e-12);
    }

    #[test]
    fn discrete_mu_close_to_analytic() {
        let g = Grid2D::new(128, 128, 200.0, 200.0).unwrap();
        let trap = TrapSpec::new(0.04, 0.06).unwrap();
        let g2d = 400.0;
        let gs = thomas_fermi_profile(&trap, g2d, &g).unwrap();
        let mu = tf_chemical_potential(&trap, g2d);
        assert!((gs.chemical_potential / mu - 1.0).abs() < 5e-3);
        assert!((gs.field.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn g_for_radius_round_trips() {
        let trap = TrapSpec::new(0.03, 0.045).unwrap();
        let g = g2d_for_radius(&trap, 60.0).unwrap();
        let (ry, _) = trap.tf_radii(tf_chemical_potential(&trap, g));
        assert!((ry - 60.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive_interaction() {
        let g = Grid2D::new(32, 32, 100.0, 100.0).unwrap();
        let trap = TrapSpec::new(0.05, 0.05).unwrap();
        assert!(thomas_fermi_profile(&trap, 0.0, &g).is_err());
        assert!(thomas_fermi_profile(&trap, -1.0, &g).is_err());
    }
}
