use nalgebra::{DMatrix, DVector};

use super::density::{DensityMatrix, POSITIVITY_TOL};
use super::liouvillian::Liouvillian;
use crate::{Error, Result, C64};

/// Relative pivot size below which the bordered system is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

/// Stationary state of a static Liouvillian.
///
/// Solves the bordered system [[L, w†], [w, 0]]·[x; λ] = [0; 1] where w is
/// the trace functional. Its nullity equals dim ker L − 1, so a rank test on
/// the full-pivot LU factors detects degenerate stationary manifolds, which
/// are reported rather than averaged.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let m = l.matrix().map_err(|_| Error::config("steady state requires a static Liouvillian"))?;
    let n2 = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let w = l.trace_row();

    let mut bordered = DMatrix::<C64>::zeros(n2 + 1, n2 + 1);
    bordered.view_mut((0, 0), (n2, n2)).copy_from(&(m / C64::new(scale, 0.0)));
    for k in 0..n2 {
        bordered[(n2, k)] = w[k];
        bordered[(k, n2)] = w[k].conj();
    }
    let mut rhs = DVector::<C64>::zeros(n2 + 1);
    rhs[n2] = C64::new(1.0, 0.0);

    let lu = bordered.full_piv_lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..=n2).map(|i| u[(i, i)].norm()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let deficient = pivots.iter().filter(|&&p| p <= PIVOT_TOL * largest).count();
    if deficient > 0 {
        return Err(Error::AmbiguousSteadyState { dimension: deficient + 1 });
    }
    let sol = lu
        .solve(&rhs)
        .ok_or(Error::AmbiguousSteadyState { dimension: 2 })?;
    let x = sol.rows(0, n2).into_owned();
    let raw = DMatrix::from_column_slice(l.dim(), l.dim(), x.as_slice());
    let rho = DensityMatrix::symmetrized(raw);
    let min = rho.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        return Err(Error::Invariant(format!("steady state has eigenvalue {min:e}")));
    }
    Ok(rho)
}

/// ‖L vec(ρ)‖₂ divided by the largest entry of L, so that the residual is
/// independent of the units chosen for rates.
pub fn relative_residual(l: &Liouvillian, rho: &DensityMatrix) -> Result<f64> {
    let m = l.matrix()?;
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    Ok((m * rho.to_vector()).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{FieldEnvironment, LaserField, LevelScheme, Polarization, Transition};
    use crate::bloch::{build_liouvillian, OpenSystem};

    #[test]
    fn two_level_saturation_formula() {
        for &(omega, delta) in &[(1e7, 0.0), (5e7, 3e7), (2e8, -1e8), (3e6, 4e6)] {
            let gamma = 1.2e8;
            let mut s = OpenSystem::new(2);
            s.add_energy(1, -delta).add_coupling(0, 1, C64::new(0.5 * omega, 0.0)).add_decay(1, 0, gamma);
            let rho = steady_state(&Liouvillian::from_system(&s)).unwrap();
            let expected = (omega * omega / 4.0) / (delta * delta + gamma * gamma / 4.0 + omega * omega / 2.0);
            assert!((rho.population(1) - expected).abs() < 1e-10, "{} vs {expected}", rho.population(1));
        }
    }

    #[test]
    fn uncoupled_manifolds_are_ambiguous() {
        let s = LevelScheme::default();
        let env = FieldEnvironment::along_z(5e-4).unwrap();
        let l = build_liouvillian(&s, &[], &env, None).unwrap();
        match steady_state(&l) {
            Err(Error::AmbiguousSteadyState { dimension }) => assert_eq!(dimension, 6),
            other => panic!("expected degenerate null space, got {other:?}"),
        }
    }

    #[test]
    fn full_ion_residual_is_small() {
        let s = LevelScheme::default();
        let env = FieldEnvironment::along_z(4e-4).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        let lasers = [
            LaserField::new(Transition::Cooling, two_pi * 12e6, -two_pi * 15e6, Polarization::from_angles(0.6, 0.0)),
            LaserField::new(Transition::Repump, two_pi * 8e6, two_pi * 5e6, Polarization::from_angles(0.6, 0.0)),
        ];
        let l = build_liouvillian(&s, &lasers, &env, None).unwrap();
        let rho = steady_state(&l).unwrap();
        rho.check().unwrap();
        assert!(relative_residual(&l, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn time_dependent_generator_rejected() {
        let s = LevelScheme::default();
        let env = FieldEnvironment::along_z(4e-4).unwrap();
        let laser = LaserField::new(Transition::Repump, 1e7, 0.0, Polarization::pi())
            .with_envelope(crate::atom::Envelope::LinearRamp { start: 0.0, duration: 1e-7 });
        let l = build_liouvillian(&s, &[laser], &env, None).unwrap();
        assert!(steady_state(&l).is_err());
    }
}
