#![allow(dead_code)]

use std::sync::Arc;

use oam_core::condensate::{g2d_for_radius, prepare_ground_state, RelaxOptions, TrapSpec};
use oam_core::units::{make_recoil_units, PhysicalParams, UnitSystem};
use oam_core::{Grid2D, TransverseField};

pub struct Small {
    pub units: UnitSystem,
    pub grid: Arc<Grid2D>,
    pub trap: TrapSpec,
    pub g2d: f64,
    pub ground: TransverseField,
}

pub fn um(units: &UnitSystem, x: f64) -> f64 {
    units.length_to_internal(x * 1e-6)
}

pub fn us(units: &UnitSystem, x: f64) -> f64 {
    units.time_to_internal(x * 1e-6)
}

/// Sodium parameters on a coarse 64×64 grid over 160 μm: cheap but with a
/// properly relaxed condensate of the experimental size.
pub fn small() -> Small {
    let p = PhysicalParams::sodium();
    let units = make_recoil_units(&p).unwrap();
    let grid = Grid2D::new(64, 64, um(&units, 160.0), um(&units, 160.0)).unwrap();
    let trap = TrapSpec::from_hz(p.trap_freqs[1], p.trap_freqs[2], &units).unwrap();
    let g2d = g2d_for_radius(&trap, um(&units, 30.0)).unwrap();
    let (gs, _) = prepare_ground_state(&trap, g2d, &grid, &RelaxOptions::default()).unwrap();
    Small { units, grid, trap, g2d, ground: gs.field }
}
