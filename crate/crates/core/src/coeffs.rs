//! Per-patch, per-atom coefficient storage.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Coefficients `w[p, k]` of atom `k` in patch `p`, stored patch-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor<T> {
    values: Array2<T>,
}

impl<T: Real> CoefficientTensor<T> {
    pub fn zeros(n_patches: usize, n_atoms: usize) -> Self {
        Self { values: Array2::zeros((n_patches, n_atoms)) }
    }

    pub fn from_array(values: Array2<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        Ok(Self { values })
    }

    pub fn from_vec(n_patches: usize, n_atoms: usize, data: Vec<T>) -> Result<Self> {
        let values = Array2::from_shape_vec((n_patches, n_atoms), data)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::from_array(values)
    }

    #[inline]
    pub fn n_patches(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn n_atoms(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn get(&self, p: usize, k: usize) -> T {
        self.values[[p, k]]
    }

    #[inline]
    pub fn set(&mut self, p: usize, k: usize, v: T) {
        self.values[[p, k]] = v;
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<T> {
        &mut self.values
    }

    pub fn into_array(self) -> Array2<T> {
        self.values
    }

    /// Flat view, patch-major.
    pub fn as_slice(&self) -> &[T] {
        self.values.as_slice().expect("standard layout")
    }

    pub fn as_slice_mut(&mut self) -> &mut [T] {
        self.values.as_slice_mut().expect("standard layout")
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs().as_f64()).sum()
    }

    pub fn check_shape(&self, n_patches: usize, n_atoms: usize) -> Result<()> {
        if self.n_patches() != n_patches || self.n_atoms() != n_atoms {
            return Err(Error::Shape(format!(
                "coefficients are {}x{}, expected {}x{}",
                self.n_patches(),
                self.n_atoms(),
                n_patches,
                n_atoms
            )));
        }
        Ok(())
    }
}
