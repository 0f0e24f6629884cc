//! Zeeman-resolved ¹³⁸Ba⁺ Λ-system: levels, couplings, fields and detection geometry.
//!
//! All 8×8 operators use the index order of [`LEVELS`]: S1/2 (m = −1/2, +1/2),
//! P1/2 (−1/2, +1/2), D3/2 (−3/2 … +3/2). Polarization components are always
//! expressed in the spherical basis tied to the magnetic field direction.

mod emission;
mod field;
mod scheme;

pub use emission::{
    emission_amplitudes, emission_projection, projection_weight, DetectionGeometry, DetectionMode,
};
pub use field::{Envelope, FieldEnvironment, LaserField, Polarization, Transition};
pub use scheme::{
    build_level_scheme, dipole_coupling, zeeman_shift, AtomicConstants, Channel, Level, LevelScheme,
    Manifold, BOHR_MAGNETON, D_LEVELS, HBAR, LEVELS, P_LEVELS, S_LEVELS,
};
