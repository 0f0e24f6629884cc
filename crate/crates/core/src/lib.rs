//! Simulation and analysis toolkit for a trapped-ion on-demand single-photon
//! source.
//!
//! * [`atom`] – Zeeman-resolved eight-level S/P/D level scheme, laser fields
//!   and detection geometry.
//! * [`bloch`] – Liouvillian construction, steady states, time evolution,
//!   dark-resonance scans and single-photon wavepackets.
//! * [`calibrate`] – Levenberg–Marquardt fit of model parameters to a
//!   measured dark-resonance scan.
//! * [`qng`] – Fock statistics of displaced squeezed states, the classical
//!   and quantum non-Gaussian thresholds, witness evaluation.
//! * [`detect`] – Monte-Carlo model of the Hanbury Brown–Twiss detection chain.
//! * [`tags`] – time-tag streams, the TTAG file format, g² histograms and
//!   per-window click statistics.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom;
pub mod bloch;
pub mod calibrate;
pub mod detect;
mod error;
pub mod par;
pub mod qng;
pub mod stats;
pub mod tags;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
