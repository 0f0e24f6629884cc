use crate::{Error, Result};

/// Slack allowed when checking that computed probabilities lie in [0, 1].
const PROB_TOL: f64 = 1e-12;

/// Pure single-mode Gaussian state: vacuum squeezed to x-variance `v`, rotated
/// by `phi`, then displaced along x by √`r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedStateParams {
    pub v: f64,
    pub phi: f64,
    pub r: f64,
}

impl SqueezedStateParams {
    pub fn new(v: f64, phi: f64, r: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain { what: "squeezing variance V", value: v, domain: "(0, ∞)" });
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Domain { what: "displacement parameter r", value: r, domain: "[0, ∞)" });
        }
        if !phi.is_finite() {
            return Err(Error::Domain { what: "rotation φ", value: phi, domain: "finite" });
        }
        Ok(SqueezedStateParams { v, phi, r })
    }
}

/// Photon-number distribution truncated after one photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockProbs {
    pub p0: f64,
    pub p1: f64,
    pub p2plus: f64,
}

impl FockProbs {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        let f = FockProbs { p0, p1, p2plus: 1.0 - p0 - p1 };
        for (what, value) in [("P0", f.p0), ("P1", f.p1), ("P2+", f.p2plus)] {
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&value) {
                return Err(Error::Domain { what, value, domain: "[0, 1]" });
            }
        }
        Ok(f)
    }

    /// Coherent state of mean photon number μ.
    pub fn poisson(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::Domain { what: "mean photon number", value: mu, domain: "[0, ∞)" });
        }
        let p0 = (-mu).exp();
        Self::new(p0, mu * p0)
    }
}

/// Single-click and coincidence probabilities of an HBT measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbs {
    pub ps: f64,
    pub pc: f64,
}

impl ClickProbs {
    pub fn new(ps: f64, pc: f64) -> Result<Self> {
        if !(ps >= 0.0 && pc >= 0.0 && ps + pc <= 1.0 + PROB_TOL) {
            return Err(Error::Domain { what: "P_s + P_c", value: ps + pc, domain: "P_s, P_c ≥ 0 and P_s + P_c ≤ 1" });
        }
        Ok(ClickProbs { ps, pc })
    }
}

/// Closed-form Fock probabilities of a displaced squeezed state.
pub fn squeezed_fock_probs(p: SqueezedStateParams) -> Result<FockProbs> {
    let SqueezedStateParams { v, phi, r } = SqueezedStateParams::new(p.v, p.phi, p.r)?;
    let c = (2.0 * phi).cos();
    let p0 = 2.0 * v.sqrt() / (1.0 + v) * (r * (-1.0 - v + (v - 1.0) * c) / (4.0 * (1.0 + v))).exp();
    let p1 = r * (1.0 + v * v - (v * v - 1.0) * c) / (2.0 * (1.0 + v).powi(2)) * p0;
    FockProbs::new(p0, p1)
}

/// Two photons reaching the same detector register as a single click:
/// P_s = P1 + P2+/2, P_c = P2+/2.
pub fn clicks_from_fock(f: FockProbs) -> ClickProbs {
    let half = 0.5 * f.p2plus.max(0.0);
    ClickProbs { ps: f.p1 + half, pc: half }
}

/// Largest single-click probability any mixture of coherent states can show
/// at coincidence probability `pc`: 2(√P_c − P_c).
pub fn classical_bound_ps(pc: f64) -> f64 {
    2.0 * (pc.sqrt() - pc)
}

/// Exclusive-single and coincidence probabilities of a coherent state of
/// mean μ split 50:50 onto two ideal detectors (each sees Poisson(μ/2)).
pub fn coherent_hbt_clicks(mu: f64) -> ClickProbs {
    let on = -(-0.5 * mu).exp_m1();
    ClickProbs { ps: 2.0 * on * (1.0 - on), pc: on * on }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vacuum_and_rotation_symmetry() {
        let f = squeezed_fock_probs(SqueezedStateParams::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((f.p0, f.p1, f.p2plus), (1.0, 0.0, 0.0));
        let a = squeezed_fock_probs(SqueezedStateParams::new(1.0, 0.0, 0.7).unwrap()).unwrap();
        let b = squeezed_fock_probs(SqueezedStateParams::new(1.0, 1.1, 0.7).unwrap()).unwrap();
        assert!((a.p0 - b.p0).abs() < 1e-15 && (a.p1 - b.p1).abs() < 1e-15);
        // unsqueezed: coherent state with mean photon number r/4
        assert!((a.p0 - (-0.7f64 / 4.0).exp()).abs() < 1e-15);
        assert!((a.p1 - 0.7 / 4.0 * a.p0).abs() < 1e-15);
    }

    #[test]
    fn click_mapping_cases() {
        let c = |p0, p1| clicks_from_fock(FockProbs::new(p0, p1).unwrap());
        assert_eq!(c(1.0, 0.0), ClickProbs { ps: 0.0, pc: 0.0 });
        assert_eq!(c(0.0, 1.0), ClickProbs { ps: 1.0, pc: 0.0 });
        assert_eq!(c(0.0, 0.0), ClickProbs { ps: 0.5, pc: 0.5 });
    }

    #[test]
    fn classical_bound_values() {
        assert_eq!(classical_bound_ps(0.0), 0.0);
        assert_eq!(classical_bound_ps(0.25), 0.5);
    }

    #[test]
    fn coherent_light_never_beats_the_classical_bound() {
        for i in 1..=5000 {
            let mu = i as f64 * 1e-3;
            let c = coherent_hbt_clicks(mu);
            assert!(c.ps <= classical_bound_ps(c.pc) + 1e-12, "μ={mu}");
            assert!((c.ps - classical_bound_ps(c.pc)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SqueezedStateParams::new(0.0, 0.0, 0.0).is_err());
        assert!(SqueezedStateParams::new(0.5, 0.0, -1.0).is_err());
        assert!(FockProbs::new(0.8, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn fock_probabilities_sum_to_one(v in 1e-3f64..50.0, phi in -3.2f64..3.2, r in 0.0f64..30.0) {
            let f = squeezed_fock_probs(SqueezedStateParams::new(v, phi, r).unwrap()).unwrap();
            prop_assert!((f.p0 + f.p1 + f.p2plus - 1.0).abs() < 1e-12);
            prop_assert!(f.p0 >= 0.0 && f.p1 >= 0.0 && f.p2plus >= -1e-12);
            let c = clicks_from_fock(f);
            prop_assert!(c.pc <= c.ps + 1e-15 && c.ps + c.pc <= 1.0 + 1e-12);
        }
    }
}
