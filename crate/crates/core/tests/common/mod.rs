#![allow(dead_code)]

use ndarray::Array2;
use patchrecon::rng::SplitMix64;
use patchrecon::{CoefficientTensor, Dictionary, Image, PatchGrid};

pub fn random_dictionary(k: usize, m: usize, channels: usize, seed: u64) -> Dictionary<f64> {
    let mut rng = SplitMix64::new(seed);
    let atoms = Array2::from_shape_fn((k, m * m * channels), |_| rng.gaussian());
    Dictionary::normalized(m, channels, atoms).unwrap()
}

pub fn random_image(w: usize, h: usize, channels: usize, seed: u64) -> Image<f64> {
    let mut rng = SplitMix64::new(seed);
    Image::from_vec(w, h, channels, (0..w * h * channels).map(|_| rng.uniform()).collect()).unwrap()
}

pub fn random_coefficients(p: usize, k: usize, seed: u64) -> CoefficientTensor<f64> {
    let mut rng = SplitMix64::new(seed);
    CoefficientTensor::from_vec(p, k, (0..p * k).map(|_| rng.gaussian()).collect()).unwrap()
}

/// Core patch of pixel (col,row) by exhaustive search: nearest center in
/// L1 among containing patches, lowest index on ties.
pub fn brute_core(grid: &PatchGrid, col: usize, row: usize) -> usize {
    let m = grid.patch_size();
    let mut best = (usize::MAX, usize::MAX);
    for (p, o) in grid.origins().iter().enumerate() {
        if col < o.x || col >= o.x + m || row < o.y || row >= o.y + m {
            continue;
        }
        let d = col.abs_diff(o.x + m / 2) + row.abs_diff(o.y + m / 2);
        if d < best.0 {
            best = (d, p);
        }
    }
    best.1
}

/// Literal evaluation of the patch value sum_k w_kp phi_k(i - r_p).
pub fn patch_value(w: &CoefficientTensor<f64>, d: &Dictionary<f64>, grid: &PatchGrid, p: usize, c: usize, col: usize, row: usize) -> f64 {
    let m = grid.patch_size();
    let o = grid.origin(p);
    let local = c * m * m + (row - o.y) * m + (col - o.x);
    (0..d.n_atoms()).map(|k| w.get(p, k) * d.atom(k)[local]).sum()
}

/// Image composed pixel by pixel from brute-force core assignment.
pub fn brute_compose(w: &CoefficientTensor<f64>, d: &Dictionary<f64>, grid: &PatchGrid) -> Image<f64> {
    let (wd, ht) = (grid.width(), grid.height());
    let mut x = Image::zeros(wd, ht, d.channels());
    for c in 0..d.channels() {
        for row in 0..ht {
            for col in 0..wd {
                let p = brute_core(grid, col, row);
                x.set(c, col, row, patch_value(w, d, grid, p, c, col, row));
            }
        }
    }
    x
}

/// Overlap penalty sum_p sum_i 1_p(i) (x_i - patch_p(i))^2, unweighted.
pub fn brute_overlap(w: &CoefficientTensor<f64>, d: &Dictionary<f64>, grid: &PatchGrid, x: &Image<f64>) -> f64 {
    let mut s = 0.0;
    for p in 0..grid.n_patches() {
        for c in 0..d.channels() {
            for row in 0..grid.height() {
                for col in 0..grid.width() {
                    if grid.contains(p, col, row) {
                        let diff = x.get(c, col, row) - patch_value(w, d, grid, p, c, col, row);
                        s += diff * diff;
                    }
                }
            }
        }
    }
    s
}
