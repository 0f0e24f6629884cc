use super::liouvillian::{build_liouvillian, Liouvillian};
use super::rate::scattering_rate;
use super::steady::steady_state;
use super::system::OpenSystem;
use crate::atom::{DetectionMode, FieldEnvironment, LaserField, LevelScheme, Transition};
use crate::par::Exec;
use crate::{Error, Result, C64};

/// One point of a dark-resonance scan. Points whose steady state could not be
/// found carry their error instead of a rate.
#[derive(Debug)]
pub struct ScanPoint {
    /// Repump detuning Δ_r [rad/s].
    pub detuning: f64,
    pub rate: Result<f64>,
}

/// Steady fluorescence rate versus repump detuning, one independent steady
/// state per grid point. `repump` supplies everything except the detuning.
pub fn dark_resonance_scan(
    scheme: &LevelScheme,
    cooling: &LaserField,
    repump: &LaserField,
    env: &FieldEnvironment,
    mode: &DetectionMode,
    detunings: &[f64],
    exec: Exec,
) -> Result<Vec<ScanPoint>> {
    if detunings.is_empty() {
        return Err(Error::config("scan grid is empty"));
    }
    if cooling.transition != Transition::Cooling || repump.transition != Transition::Repump {
        return Err(Error::config("scan needs one cooling and one repump laser"));
    }
    let rates = exec.map(detunings.len(), |i| {
        let laser = LaserField { detuning: detunings[i], ..*repump };
        let l = build_liouvillian(scheme, &[*cooling, laser], env, None)?;
        let rho = steady_state(&l)?;
        Ok(scattering_rate(&rho, scheme, mode, env))
    });
    Ok(detunings.iter().zip(rates).map(|(&detuning, rate)| ScanPoint { detuning, rate }).collect())
}

/// Three-level Λ system |g⟩=0, |e⟩=1, |m⟩=2 with real Rabi frequencies,
/// detunings of the two lasers and the two decay rates of |e⟩.
#[derive(Debug, Clone, Copy)]
pub struct Lambda {
    pub omega_g: f64,
    pub omega_r: f64,
    pub delta_g: f64,
    pub delta_r: f64,
    pub gamma_g: f64,
    pub gamma_r: f64,
}

impl Lambda {
    pub fn system(&self) -> OpenSystem {
        let mut s = OpenSystem::new(3);
        s.add_energy(1, -self.delta_g)
            .add_energy(2, -self.delta_g + self.delta_r)
            .add_coupling(0, 1, C64::new(0.5 * self.omega_g, 0.0))
            .add_coupling(2, 1, C64::new(0.5 * self.omega_r, 0.0))
            .add_decay(1, 0, self.gamma_g)
            .add_decay(1, 2, self.gamma_r);
        s
    }

    /// Steady |e⟩→|g⟩ photon rate Γ_g ρ_ee.
    pub fn fluorescence(&self) -> Result<f64> {
        let rho = steady_state(&Liouvillian::from_system(&self.system()))?;
        Ok(self.gamma_g * rho.population(1))
    }
}
