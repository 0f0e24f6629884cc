use std::collections::BTreeMap;

use nalgebra::Vector3;

use super::field::FieldEnvironment;
use super::scheme::{dipole_coupling, Level, LevelScheme, LEVELS, P_LEVELS, S_LEVELS};
use crate::{Error, Result, C64};

/// A single detection mode: direction of observation, polarization analyzer
/// and the fraction of the full solid angle it collects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionGeometry {
    direction: Vector3<f64>,
    analyzer: Vector3<C64>,
    efficiency: f64,
}

impl DetectionGeometry {
    pub fn new(direction: Vector3<f64>, analyzer: Vector3<C64>, efficiency: f64) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("observation direction must be a unit vector"));
        }
        if (analyzer.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("polarization analyzer must be a unit vector"));
        }
        let overlap: C64 = analyzer.iter().zip(direction.iter()).map(|(a, d)| a * d).sum();
        if overlap.norm() > 1e-9 {
            return Err(Error::config("polarization analyzer must be transverse to the direction"));
        }
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::config(format!("collection efficiency {efficiency} outside [0, 1]")));
        }
        Ok(DetectionGeometry { direction, analyzer, efficiency })
    }

    /// Linear analyzer from a real transverse vector.
    pub fn linear(direction: Vector3<f64>, analyzer: Vector3<f64>, efficiency: f64) -> Result<Self> {
        Self::new(direction, analyzer.map(C64::from), efficiency)
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.direction
    }

    pub fn analyzer(&self) -> Vector3<C64> {
        self.analyzer
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Same detector seen from a rotated lab frame.
    pub fn rotated(&self, rot: &nalgebra::Rotation3<f64>) -> Self {
        let r = rot.matrix().map(C64::from);
        DetectionGeometry {
            direction: rot * self.direction,
            analyzer: r * self.analyzer,
            efficiency: self.efficiency,
        }
    }
}

/// Which photons count as "detected" when converting a state into a rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionMode {
    /// Every P→S photon, in all directions and polarizations.
    AllModes,
    Directional(DetectionGeometry),
}

/// Field amplitude for each P→S decay path projected on the analyzed mode,
/// indexed `[p][s]` relative to the first P and S sublevels.
///
/// Normalized so that summing |A|² over both analyzer polarizations and
/// averaging over all directions with unit efficiency gives one.
pub fn emission_amplitudes(
    scheme: &LevelScheme,
    geometry: &DetectionGeometry,
    env: &FieldEnvironment,
) -> [[C64; 2]; 2] {
    let basis = env.spherical_basis();
    // 3/(8π) dipole pattern normalization times the 4π of a full sphere
    let norm = (1.5 * geometry.efficiency).sqrt();
    let mut amp = [[C64::new(0.0, 0.0); 2]; 2];
    for (pi, &upper) in LEVELS[P_LEVELS].iter().enumerate() {
        for (si, &lower) in LEVELS[S_LEVELS].iter().enumerate() {
            let q2 = upper.two_m - lower.two_m;
            if q2.abs() > 2 {
                continue;
            }
            let q = q2 / 2;
            let cg = dipole_coupling(scheme, lower, upper, q).expect("S-P pair is dipole allowed");
            let e_q = &basis[(q + 1) as usize];
            let proj: C64 = geometry.analyzer.iter().zip(e_q.iter()).map(|(a, e)| a.conj() * e).sum();
            amp[pi][si] = proj * cg * norm;
        }
    }
    amp
}

/// Non-negative weight |A|² of every (P sublevel, S sublevel) decay path in the
/// analyzed mode.
pub fn emission_projection(
    scheme: &LevelScheme,
    geometry: &DetectionGeometry,
    env: &FieldEnvironment,
) -> BTreeMap<(usize, usize), f64> {
    let amp = emission_amplitudes(scheme, geometry, env);
    let mut out = BTreeMap::new();
    for (pi, row) in amp.iter().enumerate() {
        for (si, a) in row.iter().enumerate() {
            out.insert((P_LEVELS.start + pi, S_LEVELS.start + si), a.norm_sqr());
        }
    }
    out
}

/// Convenience lookup by level.
pub fn projection_weight(
    weights: &BTreeMap<(usize, usize), f64>,
    upper: Level,
    lower: Level,
) -> Option<f64> {
    let p = LEVELS.iter().position(|&l| l == upper)?;
    let s = LEVELS.iter().position(|&l| l == lower)?;
    weights.get(&(p, s)).copied()
}
