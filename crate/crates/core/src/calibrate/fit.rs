use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use super::data::ScanData;
use crate::atom::{DetectionMode, FieldEnvironment, LaserField, LevelScheme, Polarization, Transition};
use crate::bloch::dark_resonance_scan;
use crate::par::Exec;
use crate::{Error, Result};

pub const N_PARAMS: usize = 8;
pub const MAX_ITERATIONS: usize = 200;
const DIFF_STEP: f64 = 1e-6;
/// Index of θ. The model depends on θ only modulo π, since θ + π flips the
/// sign of both fields.
const THETA: usize = 3;

/// Model parameters in SI units: Rabi frequencies and detuning in rad/s,
/// angles in rad, field in T. Detected counts/s are
/// `scale · photon rate + background`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub omega_g: f64,
    pub omega_r: f64,
    pub delta_g: f64,
    /// Polarization major axis angle from the field.
    pub theta: f64,
    /// Polarization ellipticity angle.
    pub chi: f64,
    pub field: f64,
    pub scale: f64,
    pub background: f64,
}

pub const PARAM_NAMES: [&str; N_PARAMS] = ["omega_g", "omega_r", "delta_g", "theta", "chi", "field", "scale", "background"];

impl FitParams {
    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [self.omega_g, self.omega_r, self.delta_g, self.theta, self.chi, self.field, self.scale, self.background]
    }

    pub fn from_array(a: [f64; N_PARAMS]) -> Self {
        FitParams {
            omega_g: a[0],
            omega_r: a[1],
            delta_g: a[2],
            theta: a[3],
            chi: a[4],
            field: a[5],
            scale: a[6],
            background: a[7],
        }
    }
}

/// Box constraints on every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: FitParams,
    pub upper: FitParams,
}

impl Default for Bounds {
    fn default() -> Self {
        let two_pi = 2.0 * PI;
        Bounds {
            lower: FitParams {
                omega_g: 0.0,
                omega_r: 0.0,
                delta_g: -two_pi * 1e9,
                theta: -PI,
                chi: -PI / 4.0,
                field: 0.0,
                scale: 0.0,
                background: f64::NEG_INFINITY,
            },
            upper: FitParams {
                omega_g: two_pi * 1e9,
                omega_r: two_pi * 1e9,
                delta_g: two_pi * 1e9,
                theta: PI,
                chi: PI / 4.0,
                field: 1e-2,
                scale: f64::INFINITY,
                background: f64::INFINITY,
            },
        }
    }
}

/// Which parameters the fit may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mask(pub [bool; N_PARAMS]);

impl Mask {
    pub fn all() -> Self {
        Mask([true; N_PARAMS])
    }

    pub fn only(names: &[&str]) -> Result<Self> {
        let mut m = [false; N_PARAMS];
        for n in names {
            let i = PARAM_NAMES.iter().position(|p| p == n).ok_or_else(|| Error::config(format!("unknown fit parameter {n:?}")))?;
            m[i] = true;
        }
        Ok(Mask(m))
    }

    pub fn free(&self) -> Vec<usize> {
        (0..N_PARAMS).filter(|&i| self.0[i]).collect()
    }
}

/// Everything about the experiment that the fit does not vary.
#[derive(Debug, Clone)]
pub struct ScanModel {
    pub scheme: LevelScheme,
    pub field_direction: Vector3<f64>,
    pub mode: DetectionMode,
    pub exec: Exec,
}

impl ScanModel {
    pub fn new(scheme: LevelScheme, field_direction: Vector3<f64>, mode: DetectionMode) -> Self {
        ScanModel { scheme, field_direction, mode, exec: Exec::default() }
    }

    /// Both lasers share the polarization (θ, χ); the repump detuning is the
    /// scan variable.
    pub fn rates(&self, detuning_hz: &[f64], p: &FitParams) -> Result<Vec<f64>> {
        let pol = Polarization::from_angles(p.theta, p.chi);
        let cooling = LaserField::new(Transition::Cooling, p.omega_g, p.delta_g, pol);
        let repump = LaserField::new(Transition::Repump, p.omega_r, 0.0, pol);
        let env = FieldEnvironment::new(p.field, self.field_direction)?;
        let grid: Vec<f64> = detuning_hz.iter().map(|f| 2.0 * PI * f).collect();
        dark_resonance_scan(&self.scheme, &cooling, &repump, &env, &self.mode, &grid, self.exec)?
            .into_iter()
            .map(|pt| Ok(p.scale * pt.rate? + p.background))
            .collect()
    }
}

/// (measured − model)/σ for every point.
pub fn fit_residuals(model: &ScanModel, data: &ScanData, p: &FitParams) -> Result<Vec<f64>> {
    let m = model.rates(&data.detuning_hz, p)?;
    Ok(data.rate.iter().zip(&m).zip(&data.sigma).map(|((y, f), s)| (y - f) / s).collect())
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: FitParams,
    pub free: Mask,
    /// Covariance of the free parameters, in the order of `free.free()`.
    pub covariance: DMatrix<f64>,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub converged: bool,
    /// JᵀJ could not be inverted at the optimum; `covariance` is then NaN.
    pub singular: bool,
    pub iterations: usize,
    /// χ² after each accepted step, starting with the initial guess.
    pub history: Vec<f64>,
}

impl FitResult {
    /// One-sigma uncertainties of all parameters; fixed ones are 0.
    pub fn uncertainties(&self) -> FitParams {
        let mut u = [0.0; N_PARAMS];
        for (k, &i) in self.free.free().iter().enumerate() {
            u[i] = self.covariance[(k, k)].max(0.0).sqrt();
        }
        FitParams::from_array(u)
    }
}

/// Natural size of each parameter, used to make the search space O(1).
fn typical_scale(i: usize, value: f64) -> f64 {
    let floor = [2.0 * PI * 1e5, 2.0 * PI * 1e5, 2.0 * PI * 1e5, 1e-2, 1e-2, 1e-6, 1e-9, 1.0][i];
    value.abs().max(floor)
}

/// Whether parameter `i` may wrap around its box instead of being clamped.
fn periodic(i: usize, lo: f64, hi: f64) -> bool {
    i == THETA && hi - lo >= PI
}

/// Brings `v` back into `[lo, hi]`: periodic parameters by whole periods,
/// everything else by clamping.
fn confine(i: usize, v: f64, lo: f64, hi: f64) -> f64 {
    if (lo..=hi).contains(&v) {
        v
    } else if periodic(i, lo, hi) {
        lo + (v - lo).rem_euclid(PI)
    } else {
        v.clamp(lo, hi)
    }
}

/// Weighted least squares by Levenberg–Marquardt with Marquardt's diagonal
/// damping, box constraints by projection and a central-difference Jacobian
/// (relative step 1e-6). θ is not clamped but wrapped by π when its box spans
/// a full period, and then reported in [−π/2, π/2) if the box allows. Stops after [`MAX_ITERATIONS`] Jacobian updates at
/// the latest, returning the best point found with `converged = false`.
pub fn fit_dark_resonance(model: &ScanModel, data: &ScanData, guess: FitParams, bounds: &Bounds, mask: &Mask) -> Result<FitResult> {
    let free = mask.free();
    if free.is_empty() {
        return Err(Error::config("fit mask leaves no free parameters"));
    }
    if data.len() < 2 * free.len() {
        return Err(Error::config(format!(
            "{} scan points are too few for {} free parameters (need at least twice as many)",
            data.len(),
            free.len()
        )));
    }
    let (g, lo, hi) = (guess.to_array(), bounds.lower.to_array(), bounds.upper.to_array());
    for i in 0..N_PARAMS {
        if !(lo[i] <= g[i] && g[i] <= hi[i]) {
            return Err(Error::config(format!("initial {} = {} outside bounds [{}, {}]", PARAM_NAMES[i], g[i], lo[i], hi[i])));
        }
    }

    let scale: Vec<f64> = free.iter().map(|&i| typical_scale(i, g[i])).collect();
    let unpack = |x: &DVector<f64>| {
        let mut a = g;
        for (k, &i) in free.iter().enumerate() {
            a[i] = confine(i, x[k] * scale[k], lo[i], hi[i]);
        }
        FitParams::from_array(a)
    };
    let project = |x: &mut DVector<f64>| {
        for (k, &i) in free.iter().enumerate() {
            x[k] = confine(i, x[k] * scale[k], lo[i], hi[i]) / scale[k];
        }
    };
    // difference steps may cross a periodic edge, which `unpack` handles
    let clamp_only = |x: &mut DVector<f64>| {
        for (k, &i) in free.iter().enumerate() {
            if !periodic(i, lo[i], hi[i]) {
                x[k] = x[k].clamp(lo[i] / scale[k], hi[i] / scale[k]);
            }
        }
    };
    let residuals = |x: &DVector<f64>| fit_residuals(model, data, &unpack(x)).map(DVector::from_vec);
    let jacobian = |x: &DVector<f64>| -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(data.len(), free.len());
        for k in 0..free.len() {
            let h = DIFF_STEP * x[k].abs().max(1.0);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            clamp_only(&mut xp);
            clamp_only(&mut xm);
            let width = xp[k] - xm[k];
            if width <= 0.0 {
                continue;
            }
            // residual = y − f, so ∂f/∂x = −∂r/∂x
            let d = (residuals(&xm)? - residuals(&xp)?) / width;
            j.set_column(k, &d);
        }
        Ok(j)
    };

    let mut x = DVector::from_iterator(free.len(), free.iter().enumerate().map(|(k, &i)| g[i] / scale[k]));
    let mut r = residuals(&x)?;
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let j = jacobian(&x)?;
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &r;
        if grad.amax() < 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..free.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &x + &step;
            project(&mut trial);
            // points where the model breaks down count as an uphill step
            let Ok(r_new) = residuals(&trial) else {
                lambda *= 10.0;
                continue;
            };
            let c_new = r_new.norm_squared();
            if c_new < cost {
                let small_step = (&trial - &x).amax() < 1e-10 * (1.0 + x.amax());
                let small_gain = cost - c_new <= 1e-12 * cost;
                x = trial;
                r = r_new;
                cost = c_new;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                converged = small_step || small_gain;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a (local) minimum
            converged = true;
        }
        if converged {
            break;
        }
    }

    let j = jacobian(&x)?;
    let jtj = j.transpose() * &j;
    let (covariance, singular) = match jtj.clone().try_inverse().filter(|inv| inv.iter().all(|v| v.is_finite())) {
        Some(inv) if jtj.clone().cholesky().is_some() => {
            let mut c = inv;
            for a in 0..free.len() {
                for b in 0..free.len() {
                    c[(a, b)] *= scale[a] * scale[b];
                }
            }
            (0.5 * (&c + c.transpose()), false)
        }
        _ => (DMatrix::from_element(free.len(), free.len(), f64::NAN), true),
    };
    let dof = data.len() - free.len();
    let mut params = unpack(&x);
    if free.contains(&THETA) && periodic(THETA, lo[THETA], hi[THETA]) {
        let principal = (params.theta + PI / 2.0).rem_euclid(PI) - PI / 2.0;
        if (lo[THETA]..=hi[THETA]).contains(&principal) {
            params.theta = principal;
        }
    }
    Ok(FitResult {
        params,
        free: *mask,
        covariance,
        chi_square: cost,
        reduced_chi_square: cost / dof as f64,
        converged,
        singular,
        iterations,
        history,
    })
}
