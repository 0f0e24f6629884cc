//! Fit of the eight-level model to a measured dark-resonance scan.

mod data;
mod fit;

pub use data::ScanData;
pub use fit::{
    fit_dark_resonance, fit_residuals, Bounds, FitParams, FitResult, Mask, ScanModel, MAX_ITERATIONS, N_PARAMS, PARAM_NAMES,
};
