use serde::{Deserialize, Serialize};

use crate::bloch::{ArrivalSampler, WavepacketDensity};
use crate::tags::Channel;
use crate::{Error, Result};

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: p, domain: "[0, 1]" })
    }
}

/// Avalanche photodiode. Dead time and afterpulsing are not modelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub quantum_efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
    pub label: Channel,
}

impl DetectorModel {
    pub fn new(label: Channel, quantum_efficiency: f64, dark_rate: f64) -> Result<Self> {
        let d = DetectorModel { quantum_efficiency, dark_rate, label };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("quantum efficiency", self.quantum_efficiency)?;
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::Domain { what: "dark rate", value: self.dark_rate, domain: "[0, ∞)" });
        }
        if self.label == Channel::Trigger {
            return Err(Error::config("a detector must be labelled A or B"));
        }
        Ok(())
    }

    /// Probability of at least one dark count in a window of `window` s.
    pub fn dark_click_probability(&self, window: f64) -> f64 {
        -(-self.dark_rate * window).exp_m1()
    }
}

/// How the emitted photon reaches the two detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeEfficiencies {
    /// One collection mode split 50:50 onto the detectors; self-interference
    /// is taken as averaged out, so only the total efficiency matters.
    Reflected { eta: f64 },
    /// Two separate modes on opposite sides, one per detector.
    Symmetric { eta_1: f64, eta_2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Configuration {
    Reflected,
    Symmetric,
}

impl ModeEfficiencies {
    pub fn configuration(&self) -> Configuration {
        match self {
            ModeEfficiencies::Reflected { .. } => Configuration::Reflected,
            ModeEfficiencies::Symmetric { .. } => Configuration::Symmetric,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceModel {
    /// Probability that a trigger produces a photon.
    pub p_emit: f64,
    /// Arrival-time shape after the trigger; only its normalized form is used.
    pub arrival: WavepacketDensity,
    pub modes: ModeEfficiencies,
    /// Probability that an emission carries a second photon.
    pub p_multi: f64,
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        check_probability("emission probability", self.p_emit)?;
        check_probability("multi-photon probability", self.p_multi)?;
        match self.modes {
            ModeEfficiencies::Reflected { eta } => check_probability("mode efficiency", eta),
            ModeEfficiencies::Symmetric { eta_1, eta_2 } => {
                check_probability("mode efficiency 1", eta_1)?;
                check_probability("mode efficiency 2", eta_2)
            }
        }
    }

    pub(crate) fn sampler(&self) -> Result<ArrivalSampler> {
        self.arrival.sampler()
    }

    /// Fraction of arrivals earlier than `window` after the trigger.
    pub(crate) fn in_window_fraction(&self, window: f64) -> Result<f64> {
        Ok(self.arrival.normalized()?.probability_before(window).min(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub configuration: Configuration,
    /// Trigger period [s].
    pub period: f64,
    /// Detection window after each trigger [s].
    pub window: f64,
    pub n_triggers: u64,
    pub seed: u64,
}

/// Timestamp resolution of the time tagger.
pub const TAG_RESOLUTION_PS: u64 = 4;

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_triggers == 0 {
            return Err(Error::config("n_triggers must be positive"));
        }
        if !(self.window > 0.0 && self.period.is_finite() && self.window <= self.period) {
            return Err(Error::config(format!(
                "need 0 < window <= period, got window {} s and period {} s",
                self.window, self.period
            )));
        }
        if self.period_ps() == 0 {
            return Err(Error::config("trigger period is below the tag resolution"));
        }
        Ok(())
    }

    /// Trigger period rounded to the tag grid.
    pub fn period_ps(&self) -> u64 {
        quantize(self.period * 1e12)
    }
}

pub(crate) fn quantize(ps: f64) -> u64 {
    ((ps / TAG_RESOLUTION_PS as f64).round() as u64) * TAG_RESOLUTION_PS
}

/// Validates the models together and returns the per-photon probabilities of
/// ending up as a detection at A and at B.
pub(crate) fn detection_probabilities(
    source: &SourceModel,
    det_a: &DetectorModel,
    det_b: &DetectorModel,
    cfg: &RunConfig,
) -> Result<(f64, f64)> {
    source.validate()?;
    det_a.validate()?;
    det_b.validate()?;
    cfg.validate()?;
    if det_a.label != Channel::A || det_b.label != Channel::B {
        return Err(Error::config("detectors must be labelled A and B, in that order"));
    }
    if source.modes.configuration() != cfg.configuration {
        return Err(Error::config("source mode efficiencies do not match the run configuration"));
    }
    Ok(match source.modes {
        ModeEfficiencies::Reflected { eta } => {
            (0.5 * eta * det_a.quantum_efficiency, 0.5 * eta * det_b.quantum_efficiency)
        }
        ModeEfficiencies::Symmetric { eta_1, eta_2 } => (eta_1 * det_a.quantum_efficiency, eta_2 * det_b.quantum_efficiency),
    })
}
