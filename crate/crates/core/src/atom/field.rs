use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const UNIT_TOL: f64 = 1e-12;

/// Static magnetic field. The quantization axis is always along `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEnvironment {
    magnitude: f64,
    direction: Vector3<f64>,
}

impl FieldEnvironment {
    pub fn new(magnitude: f64, direction: Vector3<f64>) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::config(format!("field magnitude must be >= 0, got {magnitude}")));
        }
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("field direction must be a unit vector"));
        }
        Ok(FieldEnvironment { magnitude, direction })
    }

    /// Field of `magnitude` tesla along lab z.
    pub fn along_z(magnitude: f64) -> Result<Self> {
        Self::new(magnitude, Vector3::z())
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.direction
    }

    /// Orthonormal lab-frame triad (x̂, ŷ, ẑ) with ẑ along the field.
    pub fn frame(&self) -> [Vector3<f64>; 3] {
        let z = self.direction;
        let reference = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let x = (reference - z * reference.dot(&z)).normalize();
        let y = z.cross(&x);
        [x, y, z]
    }

    /// Spherical unit vectors ê_q in the lab frame, indexed by q + 1.
    pub fn spherical_basis(&self) -> [Vector3<C64>; 3] {
        let [x, y, z] = self.frame();
        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let c = |v: Vector3<f64>| v.map(|a| C64::new(a, 0.0));
        let i = C64::i();
        [
            (c(x) - c(y) * i) * s,
            c(z),
            -(c(x) + c(y) * i) * s,
        ]
    }
}

/// Polarization as spherical components (σ⁻, π, σ⁺) relative to the field axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization([C64; 3]);

impl Polarization {
    pub fn new(components: [C64; 3]) -> Result<Self> {
        let norm: f64 = components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::config(format!("polarization norm {norm} is not 1")));
        }
        Ok(Polarization(components))
    }

    /// Normalizes arbitrary non-zero components.
    pub fn normalized(components: [C64; 3]) -> Result<Self> {
        let norm: f64 = components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::config("polarization vector is zero"));
        }
        Ok(Polarization(components.map(|c| c / norm)))
    }

    pub fn pi() -> Self {
        Polarization([C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    /// Converts a lab-frame Cartesian polarization vector.
    pub fn from_lab(e: Vector3<C64>, env: &FieldEnvironment) -> Result<Self> {
        let basis = env.spherical_basis();
        let comps = [0, 1, 2].map(|k| basis[k].iter().zip(e.iter()).map(|(b, v)| b.conj() * v).sum());
        Self::normalized(comps)
    }

    /// Beam propagating perpendicular to the field: `theta` is the angle of the
    /// polarization ellipse's major axis from the field, `chi` the ellipticity
    /// angle (0 linear, π/4 circular).
    pub fn from_angles(theta: f64, chi: f64) -> Self {
        let along_b = C64::new(theta.cos() * chi.cos(), -theta.sin() * chi.sin());
        let transverse = C64::new(theta.sin() * chi.cos(), theta.cos() * chi.sin());
        let sigma = C64::i() * transverse * std::f64::consts::FRAC_1_SQRT_2;
        Polarization([sigma, along_b, sigma])
    }

    /// Component driving Δm = q.
    pub fn component(&self, q: i32) -> C64 {
        self.0[(q + 1) as usize]
    }

    pub fn components(&self) -> [C64; 3] {
        self.0
    }
}

/// Time profile of a laser's field amplitude, confined to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    Constant { level: f64 },
    /// Error-function switch-on; `rise` is the 10–90 % time, `t_half` the 50 % point.
    ErfRamp { t_half: f64, rise: f64 },
    /// Linear switch-on from `start` reaching full amplitude after `duration`.
    LinearRamp { start: f64, duration: f64 },
}

/// Φ⁻¹(0.9) − Φ⁻¹(0.1) for a unit Gaussian.
const ERF_10_90_WIDTHS: f64 = 2.563_103_131_089_201;

impl Envelope {
    pub const ON: Envelope = Envelope::Constant { level: 1.0 };
    pub const OFF: Envelope = Envelope::Constant { level: 0.0 };

    pub fn value(&self, t: f64) -> f64 {
        let v = match *self {
            Envelope::Constant { level } => level,
            Envelope::ErfRamp { t_half, rise } => {
                let sigma = rise / ERF_10_90_WIDTHS;
                0.5 * (1.0 + statrs::function::erf::erf((t - t_half) / (sigma * std::f64::consts::SQRT_2)))
            }
            Envelope::LinearRamp { start, duration } => {
                if duration <= 0.0 {
                    if t >= start { 1.0 } else { 0.0 }
                } else {
                    (t - start) / duration
                }
            }
        };
        v.clamp(0.0, 1.0)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Envelope::Constant { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Constant { level } if !(0.0..=1.0).contains(&level) => {
                Err(Error::config(format!("envelope level {level} outside [0, 1]")))
            }
            Envelope::ErfRamp { rise, .. } if !(rise > 0.0) => {
                Err(Error::config("erf ramp rise time must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// S1/2 ↔ P1/2 at 493 nm.
    Cooling,
    /// D3/2 ↔ P1/2 at 650 nm.
    Repump,
}

/// A driving laser. Rabi frequency and detuning are angular frequencies [rad/s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserField {
    pub transition: Transition,
    pub rabi: f64,
    pub detuning: f64,
    pub polarization: Polarization,
    pub envelope: Envelope,
}

impl LaserField {
    pub fn new(transition: Transition, rabi: f64, detuning: f64, polarization: Polarization) -> Self {
        LaserField { transition, rabi, detuning, polarization, envelope: Envelope::ON }
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0 && self.rabi.is_finite() && self.detuning.is_finite()) {
            return Err(Error::config("laser Rabi frequency must be >= 0 and detuning finite"));
        }
        Polarization::new(self.polarization.components())?;
        self.envelope.validate()
    }
}
