//! Dormand–Prince 5(4) integrator for complex linear systems.

use nalgebra::DVector;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-9, atol: 1e-12, max_step: f64::INFINITY, max_steps: 2_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th minus embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates dy/dt = f(t, y) and returns y at every time in `t_out`
/// (`t_out[0]` is the initial time, strictly increasing afterwards).
pub fn integrate<F>(mut f: F, y0: &DVector<C64>, t_out: &[f64], opts: &OdeOptions) -> Result<Vec<DVector<C64>>>
where
    F: FnMut(f64, &DVector<C64>, &mut DVector<C64>),
{
    if t_out.is_empty() {
        return Ok(Vec::new());
    }
    if t_out.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("output times must be strictly increasing"));
    }
    let n = y0.len();
    let mut y = y0.clone();
    let mut out = Vec::with_capacity(t_out.len());
    out.push(y.clone());

    let mut k: Vec<DVector<C64>> = (0..7).map(|_| DVector::zeros(n)).collect();
    let mut tmp = DVector::zeros(n);
    let mut y_new = DVector::zeros(n);
    let mut t = t_out[0];
    f(t, &y, &mut k[0]);

    let span = t_out[t_out.len() - 1] - t;
    let mut h = {
        let yn = y.norm().max(1e-300);
        let fn_ = k[0].norm();
        let guess = if fn_ > 0.0 { 0.01 * yn / fn_ } else { span };
        guess.min(opts.max_step).min(span)
    };
    let mut steps = 0usize;

    for &t_target in &t_out[1..] {
        while t < t_target {
            if steps >= opts.max_steps {
                return Err(Error::IntegrationFailure {
                    t,
                    step: h,
                    steps,
                    reason: "step budget exhausted".into(),
                });
            }
            let mut step = h.min(opts.max_step);
            let remaining = t_target - t;
            let last = step >= remaining * (1.0 - 1e-12);
            if last {
                step = remaining;
            }
            if step <= 1e-15 * t.abs().max(span) {
                return Err(Error::IntegrationFailure {
                    t,
                    step,
                    steps,
                    reason: "step size underflow".into(),
                });
            }

            for s in 1..7 {
                tmp.copy_from(&y);
                for (j, &a) in A[s][..s].iter().enumerate() {
                    if a != 0.0 {
                        tmp.axpy(C64::new(step * a, 0.0), &k[j], C64::new(1.0, 0.0));
                    }
                }
                f(t + C[s] * step, &tmp, &mut k[s]);
                if s == 6 {
                    y_new.copy_from(&tmp);
                }
            }

            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (s, &ec) in E.iter().enumerate() {
                    if ec != 0.0 {
                        e += k[s][i] * ec;
                    }
                }
                let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                err_sq += (e.norm() * step / sc).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            steps += 1;
            if !err.is_finite() {
                return Err(Error::IntegrationFailure { t, step, steps, reason: "non-finite state".into() });
            }

            if err <= 1.0 {
                t = if last { t_target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damped_oscillator_matches_closed_form() {
        let lambda = C64::new(-2.0, 15.0);
        let y0 = DVector::from_vec(vec![C64::new(1.0, 0.5)]);
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let ys = integrate(|_, y, dy| dy[0] = lambda * y[0], &y0, &ts, &OdeOptions::default()).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            let exact = y0[0] * (lambda * t).exp();
            assert!((y[0] - exact).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn step_budget_reported() {
        let y0 = DVector::from_vec(vec![C64::new(1.0, 0.0)]);
        let opts = OdeOptions { max_steps: 3, max_step: 1e-3, ..Default::default() };
        let r = integrate(|_, y, dy| dy[0] = -y[0], &y0, &[0.0, 1.0], &opts);
        assert!(matches!(r, Err(Error::IntegrationFailure { .. })));
    }

    #[test]
    fn rejects_unordered_grid() {
        let y0 = DVector::from_vec(vec![C64::new(1.0, 0.0)]);
        assert!(integrate(|_, _, _| {}, &y0, &[0.0, 1.0, 0.5], &OdeOptions::default()).is_err());
    }
}
