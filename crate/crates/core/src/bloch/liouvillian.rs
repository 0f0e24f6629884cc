use nalgebra::{DMatrix, DVector};

use super::system::{ion_system, OpenSystem};
use crate::atom::{Envelope, FieldEnvironment, LaserField, LevelScheme};
use crate::{Error, Result, C64};

/// Generator of density-matrix evolution acting on column-stacked vec(ρ):
/// L(t) = L₀ + Σ_k e_k(t) L_k. Static when no modulated terms remain.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    base: DMatrix<C64>,
    drives: Vec<(DMatrix<C64>, Envelope)>,
    max_frequency: f64,
}

/// −i(I⊗H − Hᵀ⊗I), written entry by entry: with vec index i + n·j,
/// (Hρ)_ij = Σ_k H_ik ρ_kj and (ρH)_ij = Σ_l ρ_il H_lj.
fn commutator_superop(h: &DMatrix<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    let mut m = DMatrix::<C64>::zeros(n * n, n * n);
    let mi = C64::new(0.0, -1.0);
    for k in 0..n {
        for i in 0..n {
            let v = h[(i, k)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for x in 0..n {
                m[(i + n * x, k + n * x)] += mi * v;
                m[(x + n * k, x + n * i)] -= mi * v;
            }
        }
    }
    m
}

/// C̄⊗C − ½ I⊗C†C − ½ (C†C)ᵀ⊗I, i.e. CρC† − ½{C†C, ρ}.
fn dissipator_superop(c: &DMatrix<C64>) -> DMatrix<C64> {
    let n = c.nrows();
    let mut m = DMatrix::<C64>::zeros(n * n, n * n);
    let nz: Vec<(usize, usize, C64)> = (0..n)
        .flat_map(|k| (0..n).map(move |i| (i, k)))
        .map(|(i, k)| (i, k, c[(i, k)]))
        .filter(|e| e.2 != C64::new(0.0, 0.0))
        .collect();
    // (CρC†)_ij = Σ_kl C_ik ρ_kl conj(C_jl)
    for &(i, k, a) in &nz {
        for &(j, l, b) in &nz {
            m[(i + n * j, k + n * l)] += a * b.conj();
        }
    }
    let cdc = c.adjoint() * c;
    let half = C64::new(0.5, 0.0);
    for k in 0..n {
        for i in 0..n {
            let v = cdc[(i, k)] * half;
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for x in 0..n {
                m[(i + n * x, k + n * x)] -= v;
                m[(x + n * k, x + n * i)] -= v;
            }
        }
    }
    m
}

impl Liouvillian {
    pub fn from_system(sys: &OpenSystem) -> Self {
        let mut base = commutator_superop(sys.hamiltonian0());
        for c in sys.jumps() {
            base += dissipator_superop(c);
        }
        let drives = sys.drives().iter().map(|(v, env)| (commutator_superop(v), *env)).collect();
        Liouvillian { dim: sys.dim(), base, drives, max_frequency: sys.max_frequency() }
    }

    /// A static generator from an explicit superoperator matrix.
    pub fn from_matrix(dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::config("Liouvillian matrix must be dim² × dim²"));
        }
        let max_frequency = matrix.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        Ok(Liouvillian { dim, base: matrix, drives: Vec::new(), max_frequency })
    }

    /// Hilbert-space dimension (the superoperator is dim² × dim²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_static(&self) -> bool {
        self.drives.is_empty()
    }

    /// Largest coherent angular frequency, used to bound integrator steps.
    pub fn max_frequency(&self) -> f64 {
        self.max_frequency
    }

    /// Static snapshot with envelopes evaluated at `t`.
    pub fn at(&self, t: f64) -> Liouvillian {
        let mut base = self.base.clone();
        for (l, env) in &self.drives {
            base += l * C64::new(env.value(t), 0.0);
        }
        Liouvillian { dim: self.dim, base, drives: Vec::new(), max_frequency: self.max_frequency }
    }

    /// The superoperator matrix; only defined for static generators.
    pub fn matrix(&self) -> Result<&DMatrix<C64>> {
        if self.is_static() {
            Ok(&self.base)
        } else {
            Err(Error::config("time-dependent Liouvillian has no single matrix; use at(t)"))
        }
    }

    /// out = L(t) x
    pub fn apply(&self, t: f64, x: &DVector<C64>, out: &mut DVector<C64>) {
        out.gemv(C64::new(1.0, 0.0), &self.base, x, C64::new(0.0, 0.0));
        for (l, env) in &self.drives {
            let e = env.value(t);
            if e != 0.0 {
                out.gemv(C64::new(e, 0.0), l, x, C64::new(1.0, 0.0));
            }
        }
    }

    /// Row vector w with w·vec(ρ) = tr ρ.
    pub fn trace_row(&self) -> DVector<C64> {
        let n = self.dim;
        let mut w = DVector::zeros(n * n);
        for i in 0..n {
            w[i + n * i] = C64::new(1.0, 0.0);
        }
        w
    }

    /// ‖w·L‖ over the base and every modulated part; zero for a
    /// trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let w = self.trace_row();
        let defect = |m: &DMatrix<C64>| (w.transpose() * m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.drives.iter().map(|(l, _)| defect(l)).fold(defect(&self.base), f64::max)
    }

    /// Largest entry magnitude across all parts.
    pub fn scale(&self) -> f64 {
        let m = |a: &DMatrix<C64>| a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.drives.iter().map(|(l, _)| m(l)).fold(m(&self.base), f64::max)
    }
}

/// Liouvillian of the eight-level ion under `lasers`. With `t` given, every
/// envelope is evaluated there and the result is static.
pub fn build_liouvillian(
    scheme: &LevelScheme,
    lasers: &[LaserField],
    env: &FieldEnvironment,
    t: Option<f64>,
) -> Result<Liouvillian> {
    let l = Liouvillian::from_system(&ion_system(scheme, lasers, env)?);
    Ok(match t {
        Some(t) => l.at(t),
        None => l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{Polarization, Transition};
    use crate::bloch::DensityMatrix;

    fn two_level_system(omega: f64, delta: f64, gamma: f64) -> OpenSystem {
        let mut s = OpenSystem::new(2);
        s.add_energy(1, -delta)
            .add_coupling(0, 1, C64::new(0.5 * omega, 0.0))
            .add_decay(1, 0, gamma);
        s
    }

    /// dρ/dt written out element by element for a driven two-level atom,
    /// in the same column-stacked order (ρ00, ρ10, ρ01, ρ11).
    fn hand_two_level(omega: f64, delta: f64, gamma: f64) -> DMatrix<C64> {
        let i = C64::i();
        let r = |x: f64| C64::new(x, 0.0);
        let h = 0.5 * omega;
        let mut m = DMatrix::zeros(4, 4);
        // d ρ00 = -i(H01 ρ10 - ρ01 H10) + γ ρ11
        m[(0, 1)] = -i * h;
        m[(0, 2)] = i * h;
        m[(0, 3)] = r(gamma);
        // d ρ10 = -i(H10 ρ00 + H11 ρ10 - ρ11 H10) - γ/2 ρ10
        m[(1, 0)] = -i * h;
        m[(1, 1)] = -i * (-delta) - r(gamma / 2.0);
        m[(1, 3)] = i * h;
        // d ρ01 = conjugate structure
        m[(2, 0)] = i * h;
        m[(2, 2)] = i * (-delta) - r(gamma / 2.0);
        m[(2, 3)] = -i * h;
        // d ρ11 = -i(H10 ρ01 - ρ10 H01) - γ ρ11
        m[(3, 1)] = i * h;
        m[(3, 2)] = -i * h;
        m[(3, 3)] = r(-gamma);
        m
    }

    #[test]
    fn two_level_matches_hand_built_matrix() {
        let (omega, delta, gamma) = (2.3e7, -4.1e7, 9.5e7);
        let l = Liouvillian::from_system(&two_level_system(omega, delta, gamma));
        let diff = l.matrix().unwrap() - hand_two_level(omega, delta, gamma);
        assert!(diff.iter().all(|z| z.norm() < 1e-6), "{diff}");
    }

    #[test]
    fn ground_state_stationary_without_lasers() {
        let s = LevelScheme::default();
        let env = FieldEnvironment::along_z(0.0).unwrap();
        let l = build_liouvillian(&s, &[], &env, None).unwrap();
        let x = DensityMatrix::pure(8, 0).to_vector();
        let y = l.matrix().unwrap() * x;
        assert!(y.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn trace_preserved_for_driven_ion() {
        let s = LevelScheme::default();
        let env = FieldEnvironment::along_z(3e-4).unwrap();
        let lasers = [
            LaserField::new(Transition::Cooling, 6e7, -8e7, Polarization::from_angles(0.4, 0.1)),
            LaserField::new(Transition::Repump, 4e7, 2e7, Polarization::from_angles(1.0, 0.0))
                .with_envelope(Envelope::ErfRamp { t_half: 1e-7, rise: 9e-8 }),
        ];
        let l = build_liouvillian(&s, &lasers, &env, None).unwrap();
        assert!(!l.is_static());
        assert!(l.trace_defect() < 1e-12 * l.scale());
        assert!(l.at(5e-8).is_static());
        assert!(l.matrix().is_err());
    }
}
