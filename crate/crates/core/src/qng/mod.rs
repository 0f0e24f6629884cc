//! Quantum non-Gaussianity witness for HBT click statistics.
//!
//! Gaussian states (mixtures of displaced squeezed states) cannot produce
//! fewer coincidences P_c at a given single-click probability P_s than the
//! boundary traced by [`qng_threshold_point`]. The boundary follows from the
//! Fock statistics of displaced squeezed vacua, which [`wigner_fock_overlap`]
//! recomputes by direct phase-space integration.

mod fock;
mod threshold;
mod wigner;
mod witness;

pub use fock::{
    classical_bound_ps, clicks_from_fock, coherent_hbt_clicks, squeezed_fock_probs, ClickProbs, FockProbs,
    SqueezedStateParams,
};
pub use threshold::{curve_branch, qng_threshold_pc, qng_threshold_point, qng_threshold_point_direct, CurveBranch};
pub use wigner::{gauss_legendre, squeezed_wigner, wigner_fock_overlap};
pub use witness::{evaluate_witness, QngVerdict, WitnessCounts, CONFIDENCE};
