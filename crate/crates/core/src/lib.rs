//! Momentum-ladder Gross-Pitaevskii simulator for the transfer of orbital
//! angular momentum from Laguerre-Gaussian light to a Bose-Einstein condensate
//! by two-photon stimulated Raman pulses.
//!
//! All computation happens in recoil units: lengths in `1/k`, energies in the
//! recoil energy `E_r = (ħk)²/2M`, times in `ħ/E_r`, with `ħ = 1` and therefore
//! `M = 1/2`. [`UnitSystem`] converts to and from SI at the boundaries.
//!
//! The condensate lives on a transverse `(y, z)` grid. Axial (`x`) motion is
//! represented by a ladder of momentum orders `n`, each carrying `n·2ħk`, and
//! every order owns one transverse wavefunction. A Raman pulse couples
//! neighbouring orders through a position-dependent Rabi map whose phase is
//! carried into the upper order, which is how a Laguerre-Gaussian beam
//! imprints a vortex.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod condensate;
pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod field;
pub mod grid;
pub mod image;
pub mod imaging;
pub mod io;
pub mod optics;
pub mod par;
pub mod spectral;
pub mod units;

pub use condensate::{GroundState, TrapSpec};
pub use dynamics::{PulseSpec, SequenceSpec};
pub use error::{Error, Result};
pub use field::{LadderState, Populations, TransverseField};
pub use grid::Grid2D;
pub use image::ImagePlane;
pub use optics::{BeamKind, BeamSpec, CouplingMap};
pub use units::{PhysicalParams, UnitSystem};

pub use num_complex::Complex64;
