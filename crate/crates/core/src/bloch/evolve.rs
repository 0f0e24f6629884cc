use nalgebra::DVector;

use super::density::DensityMatrix;
use super::liouvillian::Liouvillian;
use super::ode::{integrate, OdeOptions};
use crate::{Error, Result, C64};

/// States sampled on a time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectories are never empty")
    }
}

/// Integration options for `l`: default tolerances and a step cap of one
/// twentieth of the fastest coherent period.
pub fn default_options(l: &Liouvillian) -> OdeOptions {
    let mut opts = OdeOptions::default();
    if l.max_frequency() > 0.0 {
        opts.max_step = 2.0 * std::f64::consts::PI / (20.0 * l.max_frequency());
    }
    opts
}

/// Propagates `rho0` under `l`, returning the state at every time of `t_grid`
/// (`t_grid[0]` is the time at which `rho0` is given).
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t_grid: &[f64]) -> Result<Trajectory> {
    evolve_with(rho0, l, t_grid, &default_options(l))
}

pub fn evolve_with(rho0: &DensityMatrix, l: &Liouvillian, t_grid: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    if rho0.dim() != l.dim() {
        return Err(Error::config("initial state and Liouvillian dimensions differ"));
    }
    if t_grid.is_empty() {
        return Err(Error::config("empty time grid"));
    }
    rho0.check()?;
    let y0: DVector<C64> = rho0.to_vector();
    let ys = integrate(|t, y, dy| l.apply(t, y, dy), &y0, t_grid, opts)?;
    let mut states = Vec::with_capacity(ys.len());
    for (t, y) in t_grid.iter().zip(ys) {
        let rho = DensityMatrix::from_vector(&y, l.dim());
        rho.check().map_err(|e| Error::IntegrationFailure {
            t: *t,
            step: opts.max_step,
            steps: 0,
            reason: format!("state left the physical set: {e}"),
        })?;
        states.push(rho);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states })
}
