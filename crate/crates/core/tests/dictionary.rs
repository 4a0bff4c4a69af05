mod common;

use common::random_dictionary;
use ndarray::Array2;
use patchrecon::bench::piecewise_smooth;
use patchrecon::bench::training_patches;
use patchrecon::dictionary::{ksvd_train, omp, KsvdConfig};
use patchrecon::rng::SplitMix64;
use patchrecon::Dictionary;

/// Residual norm of the least-squares fit of `y` on atoms `a` and `b`.
fn pair_residual(d: &Dictionary<f64>, a: usize, b: usize, y: &[f64]) -> f64 {
    let (u, v) = (d.atom(a), d.atom(b));
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
    let (uu, vv, uv, uy, vy) = (dot(u, u), dot(v, v), dot(u, v), dot(u, y), dot(v, y));
    let det = uu * vv - uv * uv;
    let ca = (vv * uy - uv * vy) / det;
    let cb = (uu * vy - uv * uy) / det;
    y.iter().zip(u.iter().zip(v)).map(|(yi, (ui, vi))| (yi - ca * ui - cb * vi).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn omp_recovers_two_sparse_signals() {
    for seed in 0..20u64 {
        let d = random_dictionary(16, 4, 1, seed);
        let mut rng = SplitMix64::new(seed + 500);
        let a = rng.below(16) as usize;
        let mut b = rng.below(16) as usize;
        while b == a {
            b = rng.below(16) as usize;
        }
        let y: Vec<f64> = d.atom(a).iter().zip(d.atom(b)).map(|(u, v)| 1.5 * u - 0.7 * v).collect();

        let mut best = (f64::INFINITY, 0, 0);
        let mut second = f64::INFINITY;
        for i in 0..16 {
            for j in i + 1..16 {
                let r = pair_residual(&d, i, j, &y);
                if r < best.0 {
                    second = best.0;
                    best = (r, i, j);
                } else if r < second {
                    second = r;
                }
            }
        }
        assert_eq!((best.1, best.2), (a.min(b), a.max(b)), "seed {seed}");
        assert!(best.0 < 1e-10 && second > 1e-6, "seed {seed}: fit is not unique");

        let code = omp(&y, &d, 4, 1e-12).unwrap();
        assert!(code.residual_norm < 1e-10, "seed {seed}: residual {}", code.residual_norm);
        let coef = |k: usize| code.support.iter().position(|&s| s == k).map(|i| code.coefficients[i]);
        assert!((coef(a).unwrap() - 1.5).abs() < 1e-9, "seed {seed}");
        assert!((coef(b).unwrap() + 0.7).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn omp_support_is_distinct_and_residuals_shrink() {
    for seed in 0..10u64 {
        let d = random_dictionary(40, 5, 1, seed);
        let mut rng = SplitMix64::new(seed);
        let y: Vec<f64> = (0..25).map(|_| rng.gaussian()).collect();
        let code = omp(&y, &d, 8, 0.0).unwrap();
        assert!(code.support.len() <= 8);
        let mut s = code.support.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), code.support.len());
        assert!(code.residual_history.windows(2).all(|w| w[1] < w[0]));
        let fit = code.reconstruct(&d);
        let r = y.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((r - code.residual_norm).abs() < 1e-10);
    }
}

#[test]
fn omp_complete_dictionary_is_exact() {
    let d = random_dictionary(18, 3, 2, 4);
    let mut rng = SplitMix64::new(9);
    let y: Vec<f64> = (0..18).map(|_| rng.gaussian()).collect();
    let code = omp(&y, &d, 18, 0.0).unwrap();
    assert!(code.residual_norm < 1e-9, "{}", code.residual_norm);
}

fn texture_patches(seed: u64, n: usize) -> Array2<f64> {
    let img = piecewise_smooth(96, 6, seed).unwrap();
    training_patches(&img, 7, 2, n, seed).unwrap()
}

#[test]
fn ksvd_error_is_monotone_over_twenty_iterations() {
    for seed in [1u64, 2, 3] {
        let patches = texture_patches(seed, 1200);
        let cfg = KsvdConfig { n_atoms: 100, max_atoms: 4, iters: 20, seed, ..KsvdConfig::default() };
        let (dict, rep) = ksvd_train(&patches, 7, 1, &cfg).unwrap();
        assert_eq!(rep.errors.len(), 20);
        let mut prev = rep.initial_error;
        for (i, &e) in rep.errors.iter().enumerate() {
            assert!(e <= prev * (1.0 + 1e-12), "seed {seed} iteration {i}: {e} > {prev}");
            prev = e;
        }
        assert!(rep.errors[19] < rep.initial_error);
        for k in 0..dict.n_atoms() {
            let nrm: f64 = dict.atom(k).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
        let c = 1.0 / 7.0;
        assert!(dict.atom(0).iter().all(|&v| (v - c).abs() < 1e-15));
    }
}

#[test]
fn ksvd_fixed_point_on_identical_patches() {
    let mut rng = SplitMix64::new(3);
    let v: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v: Vec<f64> = v.iter().map(|x| x / nrm).collect();
    let patches = Array2::from_shape_fn((30, 16), |(_, j)| v[j]);
    let cfg = KsvdConfig { n_atoms: 2, max_atoms: 1, iters: 5, seed: 1, ..KsvdConfig::default() };
    let (dict, rep) = ksvd_train(&patches, 4, 1, &cfg).unwrap();
    let matches = (0..2).any(|k| {
        let a = dict.atom(k);
        let same = a.iter().zip(&v).all(|(x, y)| (x - y).abs() < 1e-10);
        let flipped = a.iter().zip(&v).all(|(x, y)| (x + y).abs() < 1e-10);
        same || flipped
    });
    assert!(matches);
    assert!(*rep.errors.last().unwrap() < 1e-18);
}

#[test]
fn ksvd_is_deterministic() {
    let patches = texture_patches(5, 400);
    let cfg = KsvdConfig { n_atoms: 30, max_atoms: 3, iters: 3, seed: 8, ..KsvdConfig::default() };
    let (a, _) = ksvd_train(&patches, 7, 1, &cfg).unwrap();
    let (b, _) = ksvd_train(&patches, 7, 1, &cfg).unwrap();
    assert_eq!(a.atoms(), b.atoms());
}
