use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Density matrix ρ. Construction through [`DensityMatrix::new`] enforces
/// Hermiticity, unit trace and positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.check()?;
        Ok(rho)
    }

    /// Wraps a matrix without checking (e.g. an intermediate integrator state).
    pub fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        DensityMatrix(m)
    }

    pub fn pure(dim: usize, index: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Incoherent mixture with equal weight on each listed level.
    pub fn uniform_mixture(dim: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let idx: Vec<usize> = indices.into_iter().collect();
        if idx.is_empty() || idx.iter().any(|&i| i >= dim) {
            return Err(Error::config("mixture needs at least one valid level"));
        }
        let w = 1.0 / idx.len() as f64;
        let mut m = DMatrix::zeros(dim, dim);
        for i in idx {
            m[(i, i)] += C64::new(w, 0.0);
        }
        Ok(DensityMatrix(m))
    }

    /// Column-stacked vectorization, `v[i + n·j] = ρ[i, j]`.
    pub fn from_vector(v: &DVector<C64>, dim: usize) -> Self {
        DensityMatrix(DMatrix::from_column_slice(dim, dim, v.as_slice()))
    }

    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(self.0.as_slice())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.0 - self.0.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Invariant(format!("density matrix not Hermitian: {herm:e}")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Invariant(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Invariant(format!("density matrix eigenvalue {min:e} < 0")));
        }
        Ok(())
    }

    /// Hermitian part rescaled to unit trace.
    pub(crate) fn symmetrized(m: DMatrix<C64>) -> Self {
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace().re;
        DensityMatrix(h / C64::new(tr, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorization_is_column_stacking() {
        let mut m = DMatrix::zeros(3, 3);
        m[(1, 2)] = C64::new(0.5, 0.0);
        let v = DensityMatrix::from_matrix_unchecked(m).to_vector();
        assert_eq!(v[1 + 3 * 2], C64::new(0.5, 0.0));
    }

    #[test]
    fn invariants_detected() {
        assert!(DensityMatrix::uniform_mixture(8, 4..8).unwrap().check().is_ok());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }
}
