use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bohr magneton [J/T].
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    S12,
    P12,
    D32,
}

impl Manifold {
    /// Twice the total angular momentum J.
    pub fn two_j(self) -> i32 {
        match self {
            Manifold::S12 | Manifold::P12 => 1,
            Manifold::D32 => 3,
        }
    }
}

/// A single Zeeman sublevel. `two_m` stores 2·m_J so that half-integers stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    pub manifold: Manifold,
    pub two_m: i32,
}

impl Level {
    pub const fn new(manifold: Manifold, two_m: i32) -> Self {
        Level { manifold, two_m }
    }

    pub fn m(self) -> f64 {
        self.two_m as f64 / 2.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.two_m < 0 { "-" } else { "+" };
        write!(f, "{:?}({}{}/2)", self.manifold, sign, self.two_m.abs())
    }
}

/// Decay channel out of the P1/2 manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    PToS,
    PToD,
}

impl Channel {
    pub fn lower(self) -> Manifold {
        match self {
            Channel::PToS => Manifold::S12,
            Channel::PToD => Manifold::D32,
        }
    }
}

/// Species constants. Rates are angular frequencies [rad/s].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomicConstants {
    pub lande_s: f64,
    pub lande_p: f64,
    pub lande_d: f64,
    pub gamma_ps: f64,
    pub gamma_pd: f64,
    pub wavelength_ps: f64,
    pub wavelength_pd: f64,
}

impl Default for AtomicConstants {
    /// ¹³⁸Ba⁺ literature values.
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        AtomicConstants {
            lande_s: 2.0023,
            lande_p: 2.0 / 3.0,
            lande_d: 4.0 / 5.0,
            gamma_ps: two_pi * 15.1e6,
            gamma_pd: two_pi * 5.3e6,
            wavelength_ps: 493.4e-9,
            wavelength_pd: 649.7e-9,
        }
    }
}

/// Index layout used by every 8×8 operator in the crate.
pub const LEVELS: [Level; 8] = [
    Level::new(Manifold::S12, -1),
    Level::new(Manifold::S12, 1),
    Level::new(Manifold::P12, -1),
    Level::new(Manifold::P12, 1),
    Level::new(Manifold::D32, -3),
    Level::new(Manifold::D32, -1),
    Level::new(Manifold::D32, 1),
    Level::new(Manifold::D32, 3),
];

pub const S_LEVELS: std::ops::Range<usize> = 0..2;
pub const P_LEVELS: std::ops::Range<usize> = 2..4;
pub const D_LEVELS: std::ops::Range<usize> = 4..8;

/// Zeeman-resolved 6S1/2 / 6P1/2 / 5D3/2 level structure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelScheme {
    constants: AtomicConstants,
}

impl LevelScheme {
    pub fn new(constants: AtomicConstants) -> Result<Self> {
        let c = &constants;
        for (name, v) in [
            ("gamma_ps", c.gamma_ps),
            ("gamma_pd", c.gamma_pd),
            ("wavelength_ps", c.wavelength_ps),
            ("wavelength_pd", c.wavelength_pd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("lande_s", c.lande_s), ("lande_p", c.lande_p), ("lande_d", c.lande_d)] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(LevelScheme { constants })
    }

    pub fn constants(&self) -> &AtomicConstants {
        &self.constants
    }

    pub fn levels(&self) -> &'static [Level; 8] {
        &LEVELS
    }

    pub fn index_of(&self, level: Level) -> Option<usize> {
        LEVELS.iter().position(|&l| l == level)
    }

    pub fn lande(&self, manifold: Manifold) -> f64 {
        match manifold {
            Manifold::S12 => self.constants.lande_s,
            Manifold::P12 => self.constants.lande_p,
            Manifold::D32 => self.constants.lande_d,
        }
    }

    pub fn decay_rate(&self, channel: Channel) -> f64 {
        match channel {
            Channel::PToS => self.constants.gamma_ps,
            Channel::PToD => self.constants.gamma_pd,
        }
    }

    pub fn total_decay_rate(&self) -> f64 {
        self.constants.gamma_ps + self.constants.gamma_pd
    }

    pub fn wavelength(&self, channel: Channel) -> f64 {
        match channel {
            Channel::PToS => self.constants.wavelength_ps,
            Channel::PToD => self.constants.wavelength_pd,
        }
    }

    /// Squared coupling of `upper` into each sublevel of `channel`'s lower
    /// manifold. Sums to one for every P1/2 sublevel.
    pub fn branching(&self, upper: Level, channel: Channel) -> Vec<(Level, f64)> {
        LEVELS
            .iter()
            .filter(|l| l.manifold == channel.lower())
            .map(|&lower| {
                let q2 = upper.two_m - lower.two_m;
                let w = if q2.abs() <= 2 {
                    dipole_coupling(self, lower, upper, q2 / 2).map_or(0.0, |c| c * c)
                } else {
                    0.0
                };
                (lower, w)
            })
            .collect()
    }
}

/// Builds the level scheme, with literature defaults for anything not overridden.
pub fn build_level_scheme(overrides: Option<AtomicConstants>) -> Result<LevelScheme> {
    LevelScheme::new(overrides.unwrap_or_default())
}

/// Linear Zeeman shift g_J m_J μ_B B / ħ [rad/s].
pub fn zeeman_shift(scheme: &LevelScheme, level: Level, b_tesla: f64) -> f64 {
    scheme.lande(level.manifold) * level.m() * BOHR_MAGNETON * b_tesla / HBAR
}

/// Clebsch–Gordan coefficient ⟨J_l m_l; 1 q | J_u m_u⟩ for an electric dipole
/// step from `lower` to `upper`. Zero unless m_u = m_l + q.
pub fn dipole_coupling(_scheme: &LevelScheme, lower: Level, upper: Level, q: i32) -> Result<f64> {
    let allowed = upper.manifold == Manifold::P12
        && matches!(lower.manifold, Manifold::S12 | Manifold::D32);
    if !allowed {
        return Err(Error::InvalidTransition(format!("{lower} -> {upper}")));
    }
    if !(-1..=1).contains(&q) {
        return Err(Error::InvalidTransition(format!("polarization component q = {q}")));
    }
    if upper.two_m != lower.two_m + 2 * q {
        return Ok(0.0);
    }
    Ok(cg_rank_one(lower.manifold.two_j(), upper.manifold.two_j(), upper.two_m, q))
}

/// ⟨j1, m−q; 1, q | j, m⟩ from the closed-form rank-one table
/// (Condon–Shortley phases). Arguments are doubled angular momenta.
fn cg_rank_one(two_j1: i32, two_j: i32, two_m: i32, q: i32) -> f64 {
    let j1 = two_j1 as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    if two_m.abs() > two_j || (two_m - 2 * q).abs() > two_j1 {
        return 0.0;
    }
    let v = match (two_j - two_j1, q) {
        (2, 1) => ((j1 + m) * (j1 + m + 1.0) / ((2.0 * j1 + 1.0) * (2.0 * j1 + 2.0))).sqrt(),
        (2, 0) => ((j1 - m + 1.0) * (j1 + m + 1.0) / ((2.0 * j1 + 1.0) * (j1 + 1.0))).sqrt(),
        (2, -1) => ((j1 - m) * (j1 - m + 1.0) / ((2.0 * j1 + 1.0) * (2.0 * j1 + 2.0))).sqrt(),
        (0, 1) => -((j1 + m) * (j1 - m + 1.0) / (2.0 * j1 * (j1 + 1.0))).sqrt(),
        (0, 0) => m / (j1 * (j1 + 1.0)).sqrt(),
        (0, -1) => ((j1 - m) * (j1 + m + 1.0) / (2.0 * j1 * (j1 + 1.0))).sqrt(),
        (-2, 1) => ((j1 - m) * (j1 - m + 1.0) / (2.0 * j1 * (2.0 * j1 + 1.0))).sqrt(),
        (-2, 0) => -((j1 - m) * (j1 + m) / (j1 * (2.0 * j1 + 1.0))).sqrt(),
        (-2, -1) => ((j1 + m + 1.0) * (j1 + m) / (2.0 * j1 * (2.0 * j1 + 1.0))).sqrt(),
        _ => 0.0,
    };
    if v.is_nan() {
        0.0
    } else {
        v
    }
}
