//! Monte-Carlo model of the Hanbury Brown–Twiss detection chain.
//!
//! Each trigger may emit a photon (rarely two), which survives collection,
//! is routed to detector A or B and is detected with that detector's quantum
//! efficiency. Both detectors add Poisson dark counts during the detection
//! window. [`simulate_run`] writes the resulting time-tag stream,
//! [`simulate_counts`] only the window tallies, and
//! [`analytic_click_probs`] the exact expectation of both.

mod model;
mod sim;

pub use model::{Configuration, DetectorModel, ModeEfficiencies, RunConfig, SourceModel, TAG_RESOLUTION_PS};
pub use sim::{
    analytic_click_probs, analytic_window_probabilities, simulate_counts, simulate_counts_with, simulate_run,
    simulate_run_with, WindowProbabilities, BLOCK,
};
