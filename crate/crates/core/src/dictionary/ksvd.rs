use ndarray::Array2;

use super::{Dictionary, Omp};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::Real;

/// K-SVD hyperparameters. Defaults: 100 atoms, four atoms per OMP code.
#[derive(Debug, Clone, PartialEq)]
pub struct KsvdConfig {
    pub n_atoms: usize,
    pub max_atoms: usize,
    pub iters: usize,
    pub seed: u64,
    /// Power iterations per rank-1 atom update.
    pub power_iters: usize,
}

impl Default for KsvdConfig {
    fn default() -> Self {
        Self { n_atoms: 100, max_atoms: 4, iters: 20, seed: 0, power_iters: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsvdReport {
    /// Total representation error after coding with the initial dictionary.
    pub initial_error: f64,
    /// Total representation error at the end of every iteration.
    pub errors: Vec<f64>,
    /// Number of atom re-initializations caused by unused atoms.
    pub reinitialized: usize,
}

/// Atom 0 is the constant atom; atoms `1..K` are distinct training patches
/// drawn in seeded random order, normalized without removing their mean.
/// Slots that cannot be filled with distinct patches get seeded gaussian
/// atoms.
pub fn init_dictionary<T: Real>(
    patches: &Array2<T>,
    n_atoms: usize,
    patch_size: usize,
    channels: usize,
    seed: u64,
) -> Result<Dictionary<T>> {
    let n = patch_size * patch_size * channels;
    if n_atoms == 0 {
        return Err(Error::Parameter("dictionary needs at least one atom".into()));
    }
    if patches.ncols() != n {
        return Err(Error::Shape(format!("patches have {} samples, expected {}", patches.ncols(), n)));
    }
    let mut rng = SplitMix64::new(seed);
    let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(n_atoms);
    atoms.push(vec![(1.0 / n as f64).sqrt(); n]);

    let mut order: Vec<usize> = (0..patches.nrows()).collect();
    rng.shuffle(&mut order);
    for &i in &order {
        if atoms.len() == n_atoms {
            break;
        }
        let row: Vec<f64> = patches.row(i).iter().map(|v| v.as_f64()).collect();
        let nrm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm <= 1e-12 {
            continue;
        }
        let cand: Vec<f64> = row.iter().map(|v| v / nrm).collect();
        let duplicate = atoms.iter().any(|a| {
            let c: f64 = a.iter().zip(&cand).map(|(x, y)| x * y).sum();
            c.abs() >= 1.0 - 1e-9
        });
        if !duplicate {
            atoms.push(cand);
        }
    }
    while atoms.len() < n_atoms {
        atoms.push(gaussian_atom(&mut rng, n));
    }
    to_dictionary(patch_size, channels, &atoms)
}

fn gaussian_atom(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / nrm).collect()
}

fn to_dictionary<T: Real>(patch_size: usize, channels: usize, atoms: &[Vec<f64>]) -> Result<Dictionary<T>> {
    let n = atoms[0].len();
    let flat: Vec<T> = atoms.iter().flatten().map(|&v| T::of(v)).collect();
    let arr = Array2::from_shape_vec((atoms.len(), n), flat).map_err(|e| Error::Shape(e.to_string()))?;
    Dictionary::normalized(patch_size, channels, arr)
}

/// Sparse code of one training patch plus its current residual.
struct Code {
    support: Vec<usize>,
    coefficients: Vec<f64>,
    residual: Vec<f64>,
}

impl Code {
    fn error(&self) -> f64 {
        self.residual.iter().map(|v| v * v).sum()
    }
}

/// K-SVD dictionary learning over the rows of `patches`.
///
/// Each iteration re-codes every patch with OMP (keeping the previous code
/// when it fits better under the current dictionary), then sweeps atoms
/// `1..K` updating each one together with its coefficients by a rank-1
/// approximation of the residual restricted to the patches that use it.
/// The rank-1 factor is computed by power iteration started from the current
/// atom, so each update can only lower the error. Atom 0 stays constant.
pub fn ksvd_train<T: Real>(
    patches: &Array2<T>,
    patch_size: usize,
    channels: usize,
    config: &KsvdConfig,
) -> Result<(Dictionary<T>, KsvdReport)> {
    let n = patch_size * patch_size * channels;
    let n_atoms = config.n_atoms;
    if config.iters == 0 {
        return Err(Error::Parameter("K-SVD needs at least one iteration".into()));
    }
    if patches.nrows() < n_atoms {
        return Err(Error::Parameter(format!(
            "{} training patches for {} atoms; need at least as many patches as atoms",
            patches.nrows(),
            n_atoms
        )));
    }
    if patches.ncols() != n {
        return Err(Error::Shape(format!("patches have {} samples, expected {}", patches.ncols(), n)));
    }
    let init = init_dictionary(patches, n_atoms, patch_size, channels, config.seed)?;
    let mut rng = SplitMix64::new(config.seed ^ 0x5EED_0F_D1C7);
    let data: Vec<Vec<f64>> = patches.outer_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
    let mut atoms: Vec<Vec<f64>> = init.atoms().outer_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();

    let coder = Omp::new(&init);
    let mut codes: Vec<Code> = data
        .iter()
        .map(|s| fresh_code(&coder, s, config.max_atoms))
        .collect::<Result<_>>()?;
    let initial_error: f64 = codes.iter().map(Code::error).sum();
    let mut errors = Vec::with_capacity(config.iters);
    let mut reinitialized = 0;

    for _ in 0..config.iters {
        let dict: Dictionary<f64> = to_dictionary(patch_size, channels, &atoms)?;
        let coder = Omp::new(&dict);
        for (code, s) in codes.iter_mut().zip(&data) {
            let candidate = fresh_code(&coder, s, config.max_atoms)?;
            if candidate.error() <= code.error() {
                *code = candidate;
            }
        }

        let mut taken = vec![false; data.len()];
        for k in 1..n_atoms {
            let users: Vec<(usize, usize)> = codes
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.support.iter().position(|&j| j == k).map(|slot| (i, slot)))
                .collect();
            if users.is_empty() {
                // unused atom: restart it from the worst-represented patch
                let worst = codes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken[*i])
                    .max_by(|a, b| a.1.error().total_cmp(&b.1.error()).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i);
                let replacement = worst.and_then(|i| {
                    taken[i] = true;
                    let nrm = data[i].iter().map(|v| v * v).sum::<f64>().sqrt();
                    (nrm > 1e-12).then(|| data[i].iter().map(|v| v / nrm).collect())
                });
                atoms[k] = replacement.unwrap_or_else(|| gaussian_atom(&mut rng, n));
                reinitialized += 1;
                continue;
            }

            // restricted residual with atom k's contribution added back
            let e: Vec<Vec<f64>> = users
                .iter()
                .map(|&(i, slot)| {
                    let c = codes[i].coefficients[slot];
                    codes[i].residual.iter().zip(&atoms[k]).map(|(r, a)| r + c * a).collect()
                })
                .collect();
            let (u, v) = rank_one(&e, &atoms[k], config.power_iters);
            for (&(i, slot), (col, &vi)) in users.iter().zip(e.iter().zip(&v)) {
                let code = &mut codes[i];
                code.coefficients[slot] = vi;
                for ((r, ej), uj) in code.residual.iter_mut().zip(col).zip(&u) {
                    *r = ej - vi * uj;
                }
            }
            atoms[k] = u;
        }
        errors.push(codes.iter().map(Code::error).sum());
    }

    let dict = to_dictionary(patch_size, channels, &atoms)?;
    Ok((dict, KsvdReport { initial_error, errors, reinitialized }))
}

fn fresh_code(coder: &Omp, signal: &[f64], max_atoms: usize) -> Result<Code> {
    let sc = coder.code(signal, max_atoms, 0.0)?;
    let mut residual = signal.to_vec();
    for (&k, &c) in sc.support.iter().zip(&sc.coefficients) {
        for (r, a) in residual.iter_mut().zip(coder.atom_slice(k)) {
            *r -= c * a;
        }
    }
    Ok(Code { support: sc.support, coefficients: sc.coefficients, residual })
}

/// Leading singular pair of the matrix whose columns are `cols`, by power
/// iteration on `E E^T` from `start`. Returns the unit left vector `u` (sign
/// fixed so its largest-magnitude sample is positive) and `v = E^T u`.
fn rank_one(cols: &[Vec<f64>], start: &[f64], iters: usize) -> (Vec<f64>, Vec<f64>) {
    let n = start.len();
    let project = |u: &[f64]| -> Vec<f64> {
        cols.iter().map(|c| c.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
    };
    let mut u = start.to_vec();
    let mut v = project(&u);
    for _ in 0..iters {
        let mut next = vec![0.0; n];
        for (c, &vi) in cols.iter().zip(&v) {
            for (x, a) in next.iter_mut().zip(c) {
                *x += vi * a;
            }
        }
        let nrm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm == 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= nrm);
        let delta: f64 = next.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum();
        u = next;
        v = project(&u);
        if delta < 1e-24 {
            break;
        }
    }
    let pivot = u.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (u, v)
}
