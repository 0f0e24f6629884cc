use super::density::DensityMatrix;
use crate::atom::{emission_amplitudes, Channel, DetectionMode, FieldEnvironment, LevelScheme, P_LEVELS, S_LEVELS};

/// Rate [1/s] of P→S photons registered in `mode`.
///
/// For a directional mode the P-manifold coherences matter: the photon left
/// behind with the ion in |s⟩ has amplitude Σ_p A_ps ψ_p, so
/// rate = Γ_PS Σ_s Σ_pp' A_ps ρ_pp' A*_p's.
pub fn scattering_rate(rho: &DensityMatrix, scheme: &LevelScheme, mode: &DetectionMode, env: &FieldEnvironment) -> f64 {
    let gamma = scheme.decay_rate(Channel::PToS);
    match mode {
        DetectionMode::AllModes => gamma * P_LEVELS.map(|p| rho.population(p)).sum::<f64>(),
        DetectionMode::Directional(geometry) => {
            let amp = emission_amplitudes(scheme, geometry, env);
            let m = rho.matrix();
            let mut total = 0.0;
            for s in 0..S_LEVELS.len() {
                for (i, p) in P_LEVELS.enumerate() {
                    for (j, q) in P_LEVELS.enumerate() {
                        total += (amp[i][s] * m[(p, q)] * amp[j][s].conj()).re;
                    }
                }
            }
            // clip rounding noise only; the quadratic form is PSD for valid ρ
            (gamma * total).max(0.0)
        }
    }
}
