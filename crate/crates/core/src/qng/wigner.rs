use std::f64::consts::PI;

use super::fock::SqueezedStateParams;
use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Wigner function of the displaced squeezed state at (x, p).
pub fn squeezed_wigner(s: &SqueezedStateParams, x: f64, p: f64) -> f64 {
    let xd = x - s.r.sqrt();
    let (sin, cos) = s.phi.sin_cos();
    let xr = xd * cos + p * sin;
    let pr = -xd * sin + p * cos;
    // W_vac(xr/√V, √V pr)
    let (a, b) = (xr / s.v.sqrt(), s.v.sqrt() * pr);
    (-(a * a + b * b) / 2.0).exp() / (2.0 * PI)
}

/// Wigner projector of the n-photon Fock state, n ∈ {0, 1}.
fn fock_projector(n: u32, x: f64, p: f64) -> f64 {
    let q = x * x + p * p;
    match n {
        0 => 2.0 * (-q / 2.0).exp(),
        _ => 2.0 * (q - 1.0) * (-q / 2.0).exp(),
    }
}

const HALF_WIDTH: f64 = 12.0;
const NODES_PER_PANEL: usize = 16;
const MAX_PANELS: usize = 512;

/// Composite tensor Gauss–Legendre integral over [−12, 12]² with `panels`
/// panels per axis.
fn overlap_on(s: &SqueezedStateParams, n: u32, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = 2.0 * HALF_WIDTH / panels as f64;
    let pts: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let mid = -HALF_WIDTH + (k as f64 + 0.5) * h;
            rule.0.iter().zip(&rule.1).map(move |(&x, &w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
        .collect();
    let mut total = 0.0;
    for &(x, wx) in &pts {
        let mut row = 0.0;
        for &(p, wp) in &pts {
            row += wp * fock_projector(n, x, p) * squeezed_wigner(s, x, p);
        }
        total += wx * row;
    }
    total
}

/// P_n = ∫ W_n W_{V,φ,r} dx dp by phase-space quadrature, doubling the panel
/// count until successive estimates agree to `tol`.
pub fn wigner_fock_overlap(s: SqueezedStateParams, n: u32, tol: f64) -> Result<f64> {
    if n > 1 {
        return Err(Error::config("Fock projectors are available for n = 0 and n = 1 only"));
    }
    let s = SqueezedStateParams::new(s.v, s.phi, s.r)?;
    let rule = gauss_legendre(NODES_PER_PANEL);
    let mut panels = 4;
    let mut prev = overlap_on(&s, n, panels, &rule);
    let mut change = f64::INFINITY;
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = overlap_on(&s, n, panels, &rule);
        change = (cur - prev).abs();
        if change < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature { achieved: change, tolerance: tol, panels })
}
