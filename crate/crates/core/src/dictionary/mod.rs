//! Patch dictionaries: storage, sparse coding by orthogonal matching pursuit
//! and K-SVD training.

mod ksvd;
mod omp;

pub use ksvd::{init_dictionary, ksvd_train, KsvdConfig, KsvdReport};
pub use omp::{omp, Omp, SparseCode};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{norm_sq, Real};

/// A set of `K` unit-norm atoms over an `m x m x C` patch support.
///
/// Atoms are the rows of a `K x (m*m*C)` matrix; each row is channel-planar
/// and row-major within a channel, the same layout as an extracted patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    patch_size: usize,
    channels: usize,
    atoms: Array2<T>,
}

fn norm_tolerance<T: Real>(len: usize) -> f64 {
    (16.0 * (len as f64).sqrt() * T::epsilon().as_f64()).max(1e-12)
}

impl<T: Real> Dictionary<T> {
    /// Wraps atoms that must already have unit L2 norm.
    pub fn from_atoms(patch_size: usize, channels: usize, atoms: Array2<T>) -> Result<Self> {
        let n = patch_size * patch_size * channels;
        if patch_size == 0 || !(1..=2).contains(&channels) {
            return Err(Error::Shape(format!("bad patch shape m={patch_size} channels={channels}")));
        }
        if atoms.ncols() != n || atoms.nrows() == 0 {
            return Err(Error::Shape(format!(
                "atoms are {}x{}, expected Kx{}",
                atoms.nrows(),
                atoms.ncols(),
                n
            )));
        }
        let atoms = atoms.as_standard_layout().into_owned();
        let tol = norm_tolerance::<T>(n);
        for (k, row) in atoms.outer_iter().enumerate() {
            let nrm = norm_sq(row.as_slice().unwrap()).sqrt();
            if !nrm.is_finite() || (nrm - 1.0).abs() > tol {
                return Err(Error::Parameter(format!("atom {k} has norm {nrm}, expected 1")));
            }
        }
        Ok(Self { patch_size, channels, atoms })
    }

    /// Normalizes every row to unit norm before wrapping.
    pub fn normalized(patch_size: usize, channels: usize, mut atoms: Array2<T>) -> Result<Self> {
        for (k, mut row) in atoms.outer_iter_mut().enumerate() {
            let nrm = row.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt();
            if nrm == 0.0 || !nrm.is_finite() {
                return Err(Error::Parameter(format!("atom {k} cannot be normalized")));
            }
            row.mapv_inplace(|v| T::of(v.as_f64() / nrm));
        }
        Self::from_atoms(patch_size, channels, atoms)
    }

    /// Orthonormal separable DCT-II basis of the patch support.
    ///
    /// Complete (`K = m*m*C`) with atom 0 constant. For two channels the two
    /// per-channel DC atoms are replaced by their normalized sum and
    /// difference so that atom 0 stays constant over the whole block.
    pub fn dct(patch_size: usize, channels: usize) -> Result<Self> {
        let m = patch_size;
        let mm = m * m;
        let n = mm * channels;
        let basis_1d = |u: usize, x: usize| -> f64 {
            let a = if u == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
            a * (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2 * m) as f64).cos()
        };
        let plane = |u: usize, v: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(mm);
            for r in 0..m {
                for c in 0..m {
                    out.push(basis_1d(u, r) * basis_1d(v, c));
                }
            }
            out
        };
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        if channels == 1 {
            for u in 0..m {
                for v in 0..m {
                    rows.push(plane(u, v));
                }
            }
        } else {
            let dc = plane(0, 0);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            rows.push(dc.iter().chain(dc.iter()).map(|v| v * s).collect());
            rows.push(dc.iter().map(|v| v * s).chain(dc.iter().map(|v| -v * s)).collect());
            for ch in 0..2 {
                for u in 0..m {
                    for v in 0..m {
                        if u == 0 && v == 0 {
                            continue;
                        }
                        let mut row = vec![0.0; n];
                        row[ch * mm..(ch + 1) * mm].copy_from_slice(&plane(u, v));
                        rows.push(row);
                    }
                }
            }
        }
        let flat: Vec<T> = rows.into_iter().flatten().map(T::of).collect();
        let atoms = Array2::from_shape_vec((n, n), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::normalized(patch_size, channels, atoms)
    }

    /// The unit-norm constant atom for this patch shape.
    pub fn constant_atom(patch_size: usize, channels: usize) -> Vec<T> {
        let n = patch_size * patch_size * channels;
        vec![T::of((1.0 / n as f64).sqrt()); n]
    }

    #[inline]
    pub fn n_atoms(&self) -> usize {
        self.atoms.nrows()
    }

    #[inline]
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Samples per atom, `m*m*C`.
    #[inline]
    pub fn signal_len(&self) -> usize {
        self.atoms.ncols()
    }

    #[inline]
    pub fn atom(&self, k: usize) -> &[T] {
        let n = self.signal_len();
        &self.atoms.as_slice().unwrap()[k * n..(k + 1) * n]
    }

    pub fn atoms(&self) -> &Array2<T> {
        &self.atoms
    }

    pub fn convert<U: Real>(&self) -> Dictionary<U> {
        Dictionary {
            patch_size: self.patch_size,
            channels: self.channels,
            atoms: self.atoms.mapv(|v| U::of(v.as_f64())),
        }
    }
}
