use nalgebra::DMatrix;

use crate::atom::{
    dipole_coupling, zeeman_shift, Channel, Envelope, FieldEnvironment, LaserField, LevelScheme,
    Manifold, Transition, LEVELS, P_LEVELS,
};
use crate::{Error, Result, C64};

/// Open quantum system in a frame where every term is time independent up to
/// real envelope factors: H(t) = H₀ + Σ_k e_k(t) V_k, with Lindblad jump
/// operators C_j (rates already folded into the operators).
#[derive(Debug, Clone)]
pub struct OpenSystem {
    dim: usize,
    h0: DMatrix<C64>,
    drives: Vec<(DMatrix<C64>, Envelope)>,
    jumps: Vec<DMatrix<C64>>,
}

impl OpenSystem {
    pub fn new(dim: usize) -> Self {
        OpenSystem { dim, h0: DMatrix::zeros(dim, dim), drives: Vec::new(), jumps: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_energy(&mut self, level: usize, omega: f64) -> &mut Self {
        self.h0[(level, level)] += C64::new(omega, 0.0);
        self
    }

    /// Adds the Hermitian pair `coupling |upper⟩⟨lower| + h.c.` to H₀.
    pub fn add_coupling(&mut self, lower: usize, upper: usize, coupling: C64) -> &mut Self {
        self.h0[(upper, lower)] += coupling;
        self.h0[(lower, upper)] += coupling.conj();
        self
    }

    /// Adds a modulated Hermitian term `envelope(t) · v`.
    pub fn add_drive(&mut self, v: DMatrix<C64>, envelope: Envelope) -> &mut Self {
        assert_eq!(v.shape(), (self.dim, self.dim));
        if envelope.is_constant() {
            self.h0 += &v * C64::new(envelope.value(0.0), 0.0);
        } else {
            self.drives.push((v, envelope));
        }
        self
    }

    /// Adds decay `lower ← upper` at `rate` as its own jump operator.
    pub fn add_decay(&mut self, upper: usize, lower: usize, rate: f64) -> &mut Self {
        let mut c = DMatrix::zeros(self.dim, self.dim);
        c[(lower, upper)] = C64::new(rate.sqrt(), 0.0);
        self.jumps.push(c);
        self
    }

    pub fn add_jump(&mut self, c: DMatrix<C64>) -> &mut Self {
        assert_eq!(c.shape(), (self.dim, self.dim));
        self.jumps.push(c);
        self
    }

    pub fn hamiltonian0(&self) -> &DMatrix<C64> {
        &self.h0
    }

    pub fn drives(&self) -> &[(DMatrix<C64>, Envelope)] {
        &self.drives
    }

    pub fn jumps(&self) -> &[DMatrix<C64>] {
        &self.jumps
    }

    /// Largest angular frequency in the coherent dynamics: level energies and
    /// full Rabi frequencies (twice the off-diagonal coupling).
    pub fn max_frequency(&self) -> f64 {
        let scan = |m: &DMatrix<C64>| {
            let mut best = 0.0f64;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let f = if i == j { 1.0 } else { 2.0 };
                    best = best.max(f * m[(i, j)].norm());
                }
            }
            best
        };
        self.drives.iter().map(|(v, _)| scan(v)).fold(scan(&self.h0), f64::max)
    }
}

/// Assembles the rotating-frame eight-level system for the given lasers.
///
/// One frame per laser: S at 0, P at −Δ_cool, D at −Δ_cool + Δ_rep, plus
/// linear Zeeman shifts. Spontaneous decay uses one jump operator per channel
/// and polarization so that coherences are carried between manifolds.
pub fn ion_system(scheme: &LevelScheme, lasers: &[LaserField], env: &FieldEnvironment) -> Result<OpenSystem> {
    let mut cooling: Option<&LaserField> = None;
    let mut repump: Option<&LaserField> = None;
    for laser in lasers {
        laser.validate()?;
        let slot = match laser.transition {
            Transition::Cooling => &mut cooling,
            Transition::Repump => &mut repump,
        };
        if slot.is_some() {
            return Err(Error::config(format!(
                "more than one {:?} laser; each transition takes a single rotating frame",
                laser.transition
            )));
        }
        *slot = Some(laser);
    }
    let det_cool = cooling.map_or(0.0, |l| l.detuning);
    let det_rep = repump.map_or(0.0, |l| l.detuning);

    let mut sys = OpenSystem::new(8);
    for (i, &level) in LEVELS.iter().enumerate() {
        let frame = match level.manifold {
            Manifold::S12 => 0.0,
            Manifold::P12 => -det_cool,
            Manifold::D32 => -det_cool + det_rep,
        };
        sys.add_energy(i, frame + zeeman_shift(scheme, level, env.magnitude()));
    }

    for laser in [cooling, repump].into_iter().flatten() {
        let lower_manifold = match laser.transition {
            Transition::Cooling => Manifold::S12,
            Transition::Repump => Manifold::D32,
        };
        let mut v = DMatrix::zeros(8, 8);
        for (li, &lower) in LEVELS.iter().enumerate().filter(|(_, l)| l.manifold == lower_manifold) {
            for (ui, &upper) in LEVELS.iter().enumerate().filter(|(_, l)| l.manifold == Manifold::P12) {
                let mut amp = C64::new(0.0, 0.0);
                for q in -1..=1 {
                    amp += laser.polarization.component(q) * dipole_coupling(scheme, lower, upper, q)?;
                }
                let c = amp * (0.5 * laser.rabi);
                v[(ui, li)] += c;
                v[(li, ui)] += c.conj();
            }
        }
        sys.add_drive(v, laser.envelope);
    }

    for channel in [Channel::PToS, Channel::PToD] {
        let rate = scheme.decay_rate(channel);
        for q in -1..=1 {
            let mut c = DMatrix::zeros(8, 8);
            for (ui, &upper) in LEVELS.iter().enumerate().skip(P_LEVELS.start).take(2) {
                for (li, &lower) in LEVELS.iter().enumerate().filter(|(_, l)| l.manifold == channel.lower()) {
                    let cg = dipole_coupling(scheme, lower, upper, q)?;
                    if cg != 0.0 {
                        c[(li, ui)] = C64::new(rate.sqrt() * cg, 0.0);
                    }
                }
            }
            if c.iter().any(|z| z.norm() > 0.0) {
                sys.add_jump(c);
            }
        }
    }
    Ok(sys)
}
