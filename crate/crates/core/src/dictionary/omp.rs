use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Output of orthogonal matching pursuit on one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    /// Selected atom indices, in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients aligned with `support`.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    /// Residual norm after each accepted selection (non-increasing).
    pub residual_history: Vec<f64>,
    /// Set when an atom was rejected because the support Gram system became
    /// numerically singular; selection stopped there.
    pub rank_deficient: bool,
}

impl SparseCode {
    /// Dense reconstruction `sum_j c_j * atom(support_j)`.
    pub fn reconstruct<T: Real>(&self, dict: &Dictionary<T>) -> Vec<f64> {
        let mut out = vec![0.0; dict.signal_len()];
        for (&k, &c) in self.support.iter().zip(&self.coefficients) {
            for (o, a) in out.iter_mut().zip(dict.atom(k)) {
                *o += c * a.as_f64();
            }
        }
        out
    }
}

/// Relative pivot below which a new atom is treated as linearly dependent on
/// the current support.
const PIVOT_TOL: f64 = 1e-10;

/// Orthogonal matching pursuit coder bound to one dictionary.
///
/// Holds the atoms in `f64` so that repeated coding (K-SVD sweeps, warm
/// starts) does not reconvert them.
pub struct Omp {
    n: usize,
    k: usize,
    atoms: Vec<f64>,
}

impl Omp {
    pub fn new<T: Real>(dict: &Dictionary<T>) -> Self {
        Self {
            n: dict.signal_len(),
            k: dict.n_atoms(),
            atoms: dict.atoms().iter().map(|v| v.as_f64()).collect(),
        }
    }

    #[inline]
    pub(crate) fn atom_slice(&self, k: usize) -> &[f64] {
        self.atom(k)
    }

    #[inline]
    fn atom(&self, k: usize) -> &[f64] {
        &self.atoms[k * self.n..(k + 1) * self.n]
    }

    pub fn code(&self, signal: &[f64], max_atoms: usize, tol: f64) -> Result<SparseCode> {
        if max_atoms == 0 {
            return Err(Error::Parameter("max_atoms must be at least 1".into()));
        }
        if signal.len() != self.n {
            return Err(Error::Shape(format!("signal has {} samples, atoms have {}", signal.len(), self.n)));
        }
        let max_atoms = max_atoms.min(self.k);
        let signal_norm = signal.iter().map(|v| v * v).sum::<f64>().sqrt();

        let mut support: Vec<usize> = Vec::with_capacity(max_atoms);
        let mut selected = vec![false; self.k];
        // Cholesky factor of the support Gram matrix, lower triangle, row-major
        let mut chol: Vec<f64> = Vec::with_capacity(max_atoms * max_atoms);
        let mut rhs: Vec<f64> = Vec::with_capacity(max_atoms);
        let mut coefficients: Vec<f64> = Vec::new();
        let mut residual = signal.to_vec();
        let mut residual_norm = signal_norm;
        let mut history = Vec::new();
        let mut rank_deficient = false;

        while support.len() < max_atoms && residual_norm > tol {
            let mut best = None;
            let mut best_corr = 0.0;
            for k in 0..self.k {
                if selected[k] {
                    continue;
                }
                let c: f64 = self.atom(k).iter().zip(&residual).map(|(a, r)| a * r).sum();
                if c.abs() > best_corr {
                    best_corr = c.abs();
                    best = Some(k);
                }
            }
            let Some(k) = best else { break };
            if best_corr <= 1e-14 * signal_norm.max(f64::MIN_POSITIVE) {
                break;
            }

            // extend the Cholesky factor with the new atom's Gram row
            let s = support.len();
            let g: Vec<f64> = support
                .iter()
                .map(|&j| self.atom(j).iter().zip(self.atom(k)).map(|(a, b)| a * b).sum())
                .collect();
            let mut z = vec![0.0; s];
            for i in 0..s {
                let mut acc = g[i];
                for j in 0..i {
                    acc -= chol[i * max_atoms + j] * z[j];
                }
                z[i] = acc / chol[i * max_atoms + i];
            }
            let gkk: f64 = self.atom(k).iter().map(|a| a * a).sum();
            let d = gkk - z.iter().map(|v| v * v).sum::<f64>();
            if d <= PIVOT_TOL * gkk {
                rank_deficient = true;
                break;
            }
            if chol.is_empty() {
                chol.resize(max_atoms * max_atoms, 0.0);
            }
            chol[s * max_atoms..s * max_atoms + s].copy_from_slice(&z);
            chol[s * max_atoms + s] = d.sqrt();
            rhs.push(self.atom(k).iter().zip(signal).map(|(a, b)| a * b).sum());

            let x = chol_solve(&chol, max_atoms, s + 1, &rhs);
            let mut r = signal.to_vec();
            for (&j, &c) in support.iter().chain(std::iter::once(&k)).zip(&x) {
                for (ri, a) in r.iter_mut().zip(self.atom(j)) {
                    *ri -= c * a;
                }
            }
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn >= residual_norm {
                // no progress beyond round-off; keep the previous fit
                break;
            }
            support.push(k);
            selected[k] = true;
            coefficients = x;
            residual = r;
            residual_norm = rn;
            history.push(rn);
        }

        Ok(SparseCode { support, coefficients, residual_norm, residual_history: history, rank_deficient })
    }
}

/// Solves `L L^T x = b` for the leading `s x s` block of a row-major factor
/// with row stride `stride`.
fn chol_solve(l: &[f64], stride: usize, s: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; s];
    for i in 0..s {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l[i * stride + j] * y[j];
        }
        y[i] = acc / l[i * stride + i];
    }
    let mut x = vec![0.0; s];
    for i in (0..s).rev() {
        let mut acc = y[i];
        for j in i + 1..s {
            acc -= l[j * stride + i] * x[j];
        }
        x[i] = acc / l[i * stride + i];
    }
    x
}

/// Greedy sparse approximation of `signal` with at most `max_atoms` atoms,
/// stopping early once the residual norm drops to `tol`.
pub fn omp<T: Real>(signal: &[T], dict: &Dictionary<T>, max_atoms: usize, tol: f64) -> Result<SparseCode> {
    let s: Vec<f64> = signal.iter().map(|v| v.as_f64()).collect();
    Omp::new(dict).code(&s, max_atoms, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use ndarray::Array2;

    fn random_dict(k: usize, m: usize, seed: u64) -> Dictionary<f64> {
        let mut rng = SplitMix64::new(seed);
        let atoms = Array2::from_shape_fn((k, m * m), |_| rng.gaussian());
        Dictionary::normalized(m, 1, atoms).unwrap()
    }

    #[test]
    fn single_atom_identity() {
        let d = random_dict(8, 3, 1);
        let code = omp(d.atom(3), &d, 4, 1e-12).unwrap();
        assert_eq!(code.support, vec![3]);
        assert!((code.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(code.residual_norm < 1e-12);
    }

    #[test]
    fn picks_max_correlation_first() {
        let d = Dictionary::<f64>::dct(1, 2).unwrap();
        let s: Vec<f64> = d.atom(0).iter().zip(d.atom(1)).map(|(a, b)| 2.0 * a + 0.5 * b).collect();
        let code = omp(&s, &d, 1, 0.0).unwrap();
        assert_eq!(code.support, vec![0]);
        assert!((code.coefficients[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn residual_history_non_increasing() {
        let d = random_dict(30, 4, 5);
        let mut rng = SplitMix64::new(9);
        let s: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let code = omp(&s, &d, 10, 0.0).unwrap();
        assert!(code.residual_history.windows(2).all(|w| w[1] < w[0]));
        let mut sorted = code.support.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), code.support.len());
    }

    #[test]
    fn complete_dictionary_reproduces_signal() {
        let d = random_dict(16, 4, 11);
        let mut rng = SplitMix64::new(3);
        let s: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let code = omp(&s, &d, 16, 0.0).unwrap();
        let back = code.reconstruct(&d);
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn near_duplicate_atom_flags_rank_deficiency() {
        let eps = 1e-7f64;
        let nrm = (1.0 + eps * eps).sqrt();
        let mut atoms = Array2::<f64>::zeros((3, 4));
        atoms.row_mut(0).assign(&ndarray::arr1(&[1.0, 0.0, 0.0, 0.0]));
        atoms.row_mut(1).assign(&ndarray::arr1(&[0.6, 0.8, 0.0, 0.0]));
        atoms.row_mut(2).assign(&ndarray::arr1(&[0.6 / nrm, 0.8 / nrm, 0.0, eps / nrm]));
        let d = Dictionary::from_atoms(2, 1, atoms).unwrap();
        let code = omp(&[0.6f64, 0.8, 0.0, 0.3], &d, 3, 0.0).unwrap();
        assert!(code.rank_deficient);
        // the tilted duplicate correlates slightly better and wins first
        assert_eq!(code.support, vec![2]);
        assert!((code.residual_norm - 0.3).abs() < 1e-6);
    }

    #[test]
    fn zero_max_atoms_rejected() {
        let d = random_dict(4, 2, 0);
        assert!(omp(&[0.0; 4], &d, 0, 0.0).is_err());
    }
}
