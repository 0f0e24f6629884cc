//! Eight-level optical Bloch equations.
//!
//! The ion is described in one rotating frame per laser, so the Hamiltonian is
//! time independent apart from real envelope factors. Density matrices are
//! vectorized column by column and the Lindblad generator acts on that vector.

mod density;
mod evolve;
mod liouvillian;
pub mod ode;
mod rate;
mod scan;
mod steady;
mod system;
mod wavepacket;

pub use density::{DensityMatrix, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL};
pub use evolve::{default_options, evolve, evolve_with, Trajectory};
pub use liouvillian::{build_liouvillian, Liouvillian};
pub use rate::scattering_rate;
pub use scan::{dark_resonance_scan, Lambda, ScanPoint};
pub use steady::{relative_residual, steady_state};
pub use system::{ion_system, OpenSystem};
pub use wavepacket::{
    beat_frequency, photon_wavepacket, ArrivalSampler, Beat, InitialState, PulseSequence, Segment,
    WavepacketDensity, REPUMP_RISE,
};
