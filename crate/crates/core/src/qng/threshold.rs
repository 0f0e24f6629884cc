use std::sync::OnceLock;

use super::fock::ClickProbs;
use crate::{Error, Result};

/// Point of the Gaussian-state boundary with squeezing variance `v`.
///
/// P_s = 1/2 + (1 − V(2+V)) e^{(V−1)/2V} / (√V (1+V)²)
/// P_c = 1/2 − (1 + V²) e^{(V−1)/2V} / (√V (1+V)²)
///
/// Both are differences of nearly equal numbers as V → 1, so they are
/// evaluated in the algebraically identical form
/// P_c = −½ expm1(ln A + ln(1+ρ) − u), P_s = A e^{−u} ρ + P_c with
/// A = 2√V/(1+V), u = (1−V)/2V, ρ = (1−V)/(V(1+V)); this returns exactly
/// (0, 0) at V = 1.
pub fn qng_threshold_point(v: f64) -> Result<ClickProbs> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain { what: "squeezing variance V", value: v, domain: "(0, 1]" });
    }
    let eps = 1.0 - v;
    let ln_a = 0.5 * (-eps).ln_1p() - (-0.5 * eps).ln_1p();
    let u = eps / (2.0 * v);
    let rho = eps / (v * (1.0 + v));
    let pc = -0.5 * (ln_a + rho.ln_1p() - u).exp_m1();
    let p1 = (ln_a - u).exp() * rho;
    Ok(ClickProbs { ps: p1 + pc, pc })
}

/// The boundary as printed: two explicit expressions in V.
pub fn qng_threshold_point_direct(v: f64) -> ClickProbs {
    let e = ((v - 1.0) / (2.0 * v)).exp();
    let d = v.sqrt() * (1.0 + v).powi(2);
    ClickProbs { ps: 0.5 + (1.0 - v * (2.0 + v)) * e / d, pc: 0.5 - (1.0 + v * v) * e / d }
}

/// Where P_s(V) peaks; for V in [v_peak, 1] P_s decreases monotonically to 0.
#[derive(Debug, Clone, Copy)]
pub struct CurveBranch {
    pub v_peak: f64,
    pub ps_max: f64,
}

const MONOTONICITY_GRID: usize = 20_000;

/// Locates the maximum of P_s(V) by golden-section search and checks on a
/// dense grid that P_s decreases strictly from there to V = 1. Computed once.
pub fn curve_branch() -> Result<CurveBranch> {
    static BRANCH: OnceLock<std::result::Result<CurveBranch, String>> = OnceLock::new();
    BRANCH
        .get_or_init(|| {
            let ps = |v: f64| qng_threshold_point(v).map(|c| c.ps).unwrap_or(f64::NAN);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut a, mut b) = (1e-3, 1.0);
            for _ in 0..200 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if ps(c) > ps(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let v_peak = 0.5 * (a + b);
            let ps_max = ps(v_peak);
            let step = (1.0 - v_peak) / MONOTONICITY_GRID as f64;
            let mut prev = ps_max;
            for i in 1..=MONOTONICITY_GRID {
                let v = v_peak + i as f64 * step;
                let cur = ps(v);
                if !(cur < prev) {
                    return Err(format!("P_s(V) not decreasing at V = {v}"));
                }
                prev = cur;
            }
            Ok(CurveBranch { v_peak, ps_max })
        })
        .clone()
        .map_err(Error::Invariant)
}

/// Coincidence probability of the Gaussian boundary at single-click
/// probability `ps`; any state below it is quantum non-Gaussian.
pub fn qng_threshold_pc(ps: f64) -> Result<f64> {
    let branch = curve_branch()?;
    if !(ps > 0.0 && ps <= branch.ps_max) {
        return Err(Error::OutOfRange { what: "P_s", value: ps, lo: 0.0, hi: branch.ps_max });
    }
    let f = |v: f64| qng_threshold_point(v).map(|c| c.ps).unwrap_or(f64::NAN) - ps;
    let (mut lo, mut hi) = (branch.v_peak, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let y = f(mid);
        if y.abs() < 1e-12 * ps.max(1e-3) || hi - lo < 1e-16 {
            lo = mid;
            hi = mid;
            break;
        }
        // P_s decreases with V on this branch
        if y > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(qng_threshold_point(0.5 * (lo + hi))?.pc)
}
