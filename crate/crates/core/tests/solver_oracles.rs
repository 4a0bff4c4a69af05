mod common;

use common::*;
use patchrecon::solver::{shrink, solve, Init, Measurement, Problem, SolverConfig};
use patchrecon::tomo::{project, Geometry};
use patchrecon::{CoefficientTensor, Dictionary, ForwardOperator, Image, PatchGrid};

fn identity_problem_parts(w: usize, m: usize, step: usize, k: usize, seed: u64) -> (Measurement<f64>, Dictionary<f64>, PatchGrid) {
    let grid = PatchGrid::new(w, w, m, step).unwrap();
    let dict = random_dictionary(k, m, 1, seed);
    let y = Measurement::Image(random_image(w, w, 1, seed + 100));
    (y, dict, grid)
}

#[test]
fn objective_matches_literal_evaluation() {
    let (y, dict, grid) = identity_problem_parts(16, 4, 2, 8, 1);
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let w = random_coefficients(grid.n_patches(), 8, 2);
    let (beta, rho) = (0.3, 1.7);
    let t = prob.objective(&w, beta, rho).unwrap();

    let x = brute_compose(&w, &dict, &grid);
    let Measurement::Image(yi) = &y else { unreachable!() };
    let fid: f64 = yi.samples().iter().zip(x.samples()).map(|(a, b)| (a - b) * (a - b)).sum();
    let ovl = rho * brute_overlap(&w, &dict, &grid, &x);
    let l1 = beta * w.as_slice().iter().map(|v| v.abs()).sum::<f64>();
    let total = fid + ovl + l1;
    assert!((t.fidelity - fid).abs() <= 1e-10 * fid);
    assert!((t.overlap - ovl).abs() <= 1e-10 * ovl);
    assert!((t.l1 - l1).abs() <= 1e-10 * l1);
    assert!((t.total - total).abs() <= 1e-10 * total);
}

#[test]
fn zero_coefficients_objective() {
    let (y, dict, grid) = identity_problem_parts(16, 4, 2, 8, 3);
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let w = CoefficientTensor::zeros(grid.n_patches(), 8);
    let t = prob.objective(&w, 1.0, 1.0).unwrap();
    let ynorm: f64 = y.samples().iter().map(|v| v * v).sum();
    assert_eq!(t.overlap, 0.0);
    assert_eq!(t.l1, 0.0);
    assert!((t.total - ynorm).abs() < 1e-12 * ynorm);
}

#[test]
fn no_overlap_term_without_overlap() {
    let (y, dict, grid) = identity_problem_parts(16, 4, 4, 8, 4);
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    for seed in 0..3 {
        let w = random_coefficients(grid.n_patches(), 8, seed);
        assert_eq!(prob.objective(&w, 0.1, 5.0).unwrap().overlap, 0.0);
    }
}

fn finite_difference_check(prob: &Problem<'_, f64>, w: &CoefficientTensor<f64>, rho: f64) -> f64 {
    let g = prob.gradient(w, rho).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let scale = g.as_slice().iter().map(|v| v.abs()).fold(0.0, f64::max);
    for i in 0..w.as_slice().len() {
        let mut wp = w.clone();
        let mut wm = w.clone();
        wp.as_slice_mut()[i] += h;
        wm.as_slice_mut()[i] -= h;
        let fp = prob.objective(&wp, 0.0, rho).unwrap().smooth();
        let fm = prob.objective(&wm, 0.0, rho).unwrap().smooth();
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g.as_slice()[i]).abs() / scale);
    }
    worst
}

#[test]
fn gradient_matches_finite_differences_identity() {
    for (size, m, step, seed) in [(16, 4, 2, 1u64), (16, 4, 3, 2), (17, 7, 3, 3)] {
        let (y, dict, grid) = identity_problem_parts(size, m, step, 8, seed);
        let op = ForwardOperator::Identity;
        let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
        let w = random_coefficients(grid.n_patches(), 8, seed + 7);
        let err = finite_difference_check(&prob, &w, 2.3);
        assert!(err <= 1e-5, "size {size} m {m} step {step}: rel err {err}");
    }
}

#[test]
fn gradient_matches_finite_differences_vectorial_tomographic() {
    let grid = PatchGrid::new(16, 16, 4, 2).unwrap();
    let dict = random_dictionary(6, 4, 2, 5);
    let geom = Geometry::new(16, 16, 9).unwrap();
    let truth = random_image(16, 16, 2, 6);
    let y = Measurement::Sinogram(project(&truth, &geom).unwrap());
    let op = ForwardOperator::Tomographic(geom);
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let w = random_coefficients(grid.n_patches(), 6, 8);
    let err = finite_difference_check(&prob, &w, 0.8);
    assert!(err <= 1e-5, "rel err {err}");
}

#[test]
fn gradient_vanishes_at_orthonormal_least_squares_fit() {
    let grid = PatchGrid::new(16, 16, 4, 4).unwrap();
    let dict = Dictionary::<f64>::dct(4, 1).unwrap();
    let img = random_image(16, 16, 1, 9);
    let y = Measurement::Image(img.clone());
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let mut w = CoefficientTensor::zeros(grid.n_patches(), 16);
    for p in 0..grid.n_patches() {
        let block = grid.extract_patch(&img, p).unwrap();
        for k in 0..16 {
            w.set(p, k, block.iter().zip(dict.atom(k)).map(|(a, b)| a * b).sum());
        }
    }
    let g = prob.gradient(&w, 3.0).unwrap();
    assert!(g.as_slice().iter().all(|v| v.abs() < 1e-12));
    let zero = Measurement::Image(Image::zeros(16, 16, 1));
    let prob0 = Problem::new(&zero, &dict, &grid, &op).unwrap();
    let g0 = prob0.gradient(&CoefficientTensor::zeros(grid.n_patches(), 16), 3.0).unwrap();
    assert!(g0.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn lipschitz_identity_no_overlap_is_two() {
    let grid = PatchGrid::new(16, 16, 4, 4).unwrap();
    let dict = Dictionary::<f64>::dct(4, 1).unwrap();
    let y = Measurement::Image(random_image(16, 16, 1, 1));
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    for rho in [0.0, 1.0, 50.0] {
        let l = prob.estimate_lipschitz(rho, 50, 3).unwrap();
        assert!(l.converged);
        assert!(l.value >= 2.0 - 1e-9 && l.value <= 2.1 + 1e-9, "L = {}", l.value);
    }
    assert!(prob.estimate_lipschitz(1.0, 5, 3).is_err());
}

#[test]
fn lipschitz_monotone_in_rho_and_bounds_gradient_variation() {
    let (y, dict, grid) = identity_problem_parts(16, 4, 2, 10, 12);
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let mut last = 0.0;
    for rho in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let l = prob.estimate_lipschitz(rho, 300, 1).unwrap().value;
        assert!(l >= last * (1.0 - 1e-6), "rho {rho}: {l} < {last}");
        last = l;
    }
    let rho = 1.0;
    let l = prob.estimate_lipschitz(rho, 300, 1).unwrap().value;
    for s in 0..100u64 {
        let w1 = random_coefficients(grid.n_patches(), 10, 1000 + s);
        let w2 = random_coefficients(grid.n_patches(), 10, 5000 + s);
        let g1 = prob.gradient(&w1, rho).unwrap();
        let g2 = prob.gradient(&w2, rho).unwrap();
        let dg: f64 = g1.as_slice().iter().zip(g2.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dw: f64 = w1.as_slice().iter().zip(w2.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(dg <= l * dw);
    }
    let bound = prob.lipschitz_upper_bound(rho).unwrap();
    assert!(bound >= l / 1.05);
}

#[test]
fn solve_zero_data_stops_immediately() {
    let grid = PatchGrid::new(16, 16, 4, 2).unwrap();
    let dict = random_dictionary(8, 4, 1, 2);
    let y = Measurement::Image(Image::zeros(16, 16, 1));
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let cfg = SolverConfig { beta: 0.1, rho: 1.0, ..Default::default() };
    let (w, rep) = solve(&prob, &cfg).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!(w.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn solve_orthonormal_lasso_closed_form() {
    let grid = PatchGrid::new(16, 16, 4, 4).unwrap();
    let dict = Dictionary::<f64>::dct(4, 1).unwrap();
    let img = random_image(16, 16, 1, 21);
    let y = Measurement::Image(img.clone());
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let beta = 0.3;
    for accelerate in [false, true] {
        let cfg = SolverConfig { beta, rho: 1.0, accelerate, rel_tol: 0.0, max_iters: 60, ..Default::default() };
        let (w, _) = solve(&prob, &cfg).unwrap();
        for p in 0..grid.n_patches() {
            let block = grid.extract_patch(&img, p).unwrap();
            let c: Vec<f64> = (0..16).map(|k| block.iter().zip(dict.atom(k)).map(|(a, b)| a * b).sum()).collect();
            let want = shrink(&CoefficientTensor::from_vec(1, 16, c).unwrap(), beta / 2.0);
            for k in 0..16 {
                assert!((w.get(p, k) - want.get(0, k)).abs() < 1e-8, "accelerate={accelerate} p={p} k={k}");
            }
        }
    }
}

#[test]
fn ista_is_monotone() {
    for seed in 0..10u64 {
        let (y, dict, grid) = identity_problem_parts(32, 4, 2, 12, seed);
        let op = ForwardOperator::Identity;
        let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
        let cfg = SolverConfig { beta: 0.05, rho: 2.0, accelerate: false, rel_tol: 0.0, max_iters: 40, seed, ..Default::default() };
        let (_, rep) = solve(&prob, &cfg).unwrap();
        let f0 = rep.initial.total;
        let mut prev = f0;
        for r in &rep.history {
            assert!(r.objective <= prev + 1e-12 * f0, "seed {seed}");
            prev = r.objective;
        }
    }
}

#[test]
fn fidelity_only_complete_dictionary_interpolates() {
    let grid = PatchGrid::new(16, 16, 4, 2).unwrap();
    let dict = Dictionary::<f64>::dct(4, 1).unwrap();
    let img = random_image(16, 16, 1, 4);
    let y = Measurement::Image(img.clone());
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let cfg = SolverConfig { beta: 0.0, rho: 0.0, rel_tol: 0.0, max_iters: 200, ..Default::default() };
    let (_, rep) = solve(&prob, &cfg).unwrap();
    assert!(rep.final_objective() < 1e-12 * rep.initial.total);
}

#[test]
fn fidelity_only_solution_scales_with_data() {
    let grid = PatchGrid::new(16, 16, 4, 2).unwrap();
    let dict = random_dictionary(20, 4, 1, 30);
    let img = random_image(16, 16, 1, 31);
    let op = ForwardOperator::Identity;
    let y1 = Measurement::Image(img.clone());
    let y2 = Measurement::Image(img.scaled(3.0));
    let cfg = SolverConfig { beta: 0.0, rho: 0.7, gamma: Some(0.05), rel_tol: 0.0, max_iters: 50, ..Default::default() };
    let p1 = Problem::new(&y1, &dict, &grid, &op).unwrap();
    let p2 = Problem::new(&y2, &dict, &grid, &op).unwrap();
    let (w1, _) = solve(&p1, &cfg).unwrap();
    let (w2, _) = solve(&p2, &cfg).unwrap();
    let x1 = p1.compose(&w1).unwrap();
    let x2 = p2.compose(&w2).unwrap();
    let num: f64 = x1.samples().iter().zip(x2.samples()).map(|(a, b)| (3.0 * a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = x2.samples().iter().map(|b| b * b).sum::<f64>().sqrt();
    assert!(num <= 1e-8 * den);
}

#[test]
fn warm_start_from_exact_image_is_near_optimal() {
    let grid = PatchGrid::new(16, 16, 4, 4).unwrap();
    let dict = Dictionary::<f64>::dct(4, 1).unwrap();
    let img = random_image(16, 16, 1, 8);
    let y = Measurement::Image(img.clone());
    let op = ForwardOperator::Identity;
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    let cfg = SolverConfig { init: Init::WarmImage(img, 16), max_iters: 1, ..Default::default() };
    let (_, rep) = solve(&prob, &cfg).unwrap();
    assert!(rep.initial.total < 1e-20);
}

#[test]
fn mismatched_shapes_rejected() {
    let grid = PatchGrid::new(16, 16, 4, 2).unwrap();
    let dict = random_dictionary(8, 4, 1, 2);
    let op = ForwardOperator::Identity;
    let y = Measurement::Image(Image::zeros(15, 16, 1));
    assert!(Problem::new(&y, &dict, &grid, &op).is_err());
    let y = Measurement::Image(Image::zeros(16, 16, 1));
    let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
    assert!(prob.objective(&CoefficientTensor::zeros(3, 8), 0.0, 0.0).is_err());
    let geom = Geometry::new(16, 16, 4).unwrap();
    let top = ForwardOperator::Tomographic(geom);
    assert!(Problem::new(&y, &dict, &grid, &top).is_err());
}

#[test]
fn fista_dominates_ista_at_equal_budgets() {
    for seed in 0..5u64 {
        let (y, dict, grid) = identity_problem_parts(32, 4, 2, 12, 40 + seed);
        let op = ForwardOperator::Identity;
        let prob = Problem::new(&y, &dict, &grid, &op).unwrap();
        let base = SolverConfig { beta: 0.05, rho: 2.0, rel_tol: 0.0, max_iters: 150, seed, ..Default::default() };
        let (_, ista) = solve(&prob, &SolverConfig { accelerate: false, ..base.clone() }).unwrap();
        let (_, fista) = solve(&prob, &SolverConfig { accelerate: true, ..base }).unwrap();
        let f0 = ista.initial.total;
        assert!(fista.final_objective() <= ista.final_objective() + 1e-9 * f0, "seed {seed}");
    }
}
