//! Minimization of the overlap-constrained patch objective by proximal
//! gradient descent.

mod operator;
mod problem;

pub use operator::{ForwardOperator, Measurement};
pub use problem::{LipschitzEstimate, ObjectiveTerms, Problem, LIPSCHITZ_MARGIN};

use std::fmt::Write as _;

use problem::State;

use crate::coeffs::CoefficientTensor;
use crate::dictionary::Omp;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Soft threshold `v -> sign(v) * max(|v| - alpha, 0)`, component-wise.
pub fn shrink<T: Real>(w: &CoefficientTensor<T>, alpha: f64) -> CoefficientTensor<T> {
    let mut out = w.clone();
    shrink_in_place(out.as_slice_mut(), alpha);
    out
}

fn shrink_in_place<T: Real>(w: &mut [T], alpha: f64) {
    let a = T::of(alpha);
    for v in w {
        let mag = v.abs() - a;
        *v = if mag > T::zero() { v.signum() * mag } else { T::zero() };
    }
}

/// Fraction of coefficients with magnitude above `eps`.
pub fn sparsity<T: Real>(w: &CoefficientTensor<T>, eps: f64) -> f64 {
    let s = w.as_slice();
    if s.is_empty() {
        return 0.0;
    }
    s.iter().filter(|v| v.abs().as_f64() > eps).count() as f64 / s.len() as f64
}

/// Starting point of the iterations.
#[derive(Debug, Clone, PartialEq)]
pub enum Init<T> {
    Zero,
    /// Per-patch OMP fit of an image-space estimate (e.g. an FBP
    /// reconstruction) with at most this many atoms per patch.
    WarmImage(Image<T>, usize),
    Coefficients(CoefficientTensor<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// L1 weight.
    pub beta: f64,
    /// Overlap weight.
    pub rho: f64,
    /// Step size; derived as `1 / L` when `None`.
    pub gamma: Option<f64>,
    pub max_iters: usize,
    /// Stop once `|F_n - F_{n-1}| / F_{n-1} < rel_tol`.
    pub rel_tol: f64,
    /// FISTA momentum when true, plain ISTA otherwise.
    pub accelerate: bool,
    pub init: Init<T>,
    pub power_iters: usize,
    pub seed: u64,
}

impl<T> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            beta: 0.0,
            rho: 0.0,
            gamma: None,
            max_iters: 1000,
            rel_tol: 1e-6,
            accelerate: true,
            init: Init::Zero,
            power_iters: 100,
            seed: 0,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Parameter(format!("beta {} must be finite and >= 0", self.beta)));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::Parameter(format!("rho {} must be finite and >= 0", self.rho)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Parameter(format!("step size {g} must be positive")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::Parameter("rel_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-iteration record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub objective: f64,
    pub fidelity: f64,
    pub overlap: f64,
    pub l1: f64,
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Objective of the starting point.
    pub initial: ObjectiveTerms,
    /// One record per iteration, evaluated at the new iterate.
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub gamma: f64,
    pub lipschitz: Option<LipschitzEstimate>,
    /// True when the relative-change criterion stopped the run.
    pub converged: bool,
    pub final_sparsity: f64,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.history.last().map(|r| r.objective).unwrap_or(self.initial.total)
    }

    /// `iteration,F,fidelity,overlap,l1,sparsity` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,F,fidelity,overlap,l1,sparsity\n");
        for (i, r) in self.history.iter().enumerate() {
            let _ = writeln!(s, "{},{:e},{:e},{:e},{:e},{}", i + 1, r.objective, r.fidelity, r.overlap, r.l1, r.sparsity);
        }
        s
    }
}

/// Per-patch OMP fit of `img` on the problem's grid.
pub fn fit_patches<T: Real>(problem: &Problem<'_, T>, img: &Image<T>, max_atoms: usize) -> Result<CoefficientTensor<T>> {
    let grid = problem.grid();
    grid.check_image(img)?;
    if img.channels() != problem.dictionary().channels() {
        return Err(Error::Shape("warm-start image channel count differs from the dictionary".into()));
    }
    let coder = Omp::new(problem.dictionary());
    let patches = grid.extract_all(img)?;
    let mut w = CoefficientTensor::zeros(grid.n_patches(), problem.n_atoms());
    for (p, row) in patches.outer_iter().enumerate() {
        let s: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
        let code = coder.code(&s, max_atoms, 0.0)?;
        for (&k, &c) in code.support.iter().zip(&code.coefficients) {
            w.set(p, k, T::of(c));
        }
    }
    Ok(w)
}

/// Ratio `F_n / F_0` above which plain ISTA is declared divergent.
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Proximal gradient iterations `w <- shrink(w - gamma * grad f(w), beta * gamma)`,
/// with FISTA extrapolation when `config.accelerate` is set.
pub fn solve<T: Real>(problem: &Problem<'_, T>, config: &SolverConfig<T>) -> Result<(CoefficientTensor<T>, SolveReport)> {
    config.validate()?;
    let (beta, rho) = (config.beta, config.rho);
    let (lipschitz, gamma) = match config.gamma {
        Some(g) => (None, g),
        None => {
            let l = problem.estimate_lipschitz(rho, config.power_iters.max(10), config.seed)?;
            if l.value <= 0.0 {
                return Err(Error::Parameter("objective has no quadratic part; set the step size explicitly".into()));
            }
            (Some(l), 1.0 / l.value)
        }
    };
    let mut w = match &config.init {
        Init::Zero => CoefficientTensor::zeros(problem.n_patches(), problem.n_atoms()),
        Init::WarmImage(img, atoms) => fit_patches(problem, img, *atoms)?,
        Init::Coefficients(c) => {
            c.check_shape(problem.n_patches(), problem.n_atoms())?;
            c.clone()
        }
    };

    let (initial, mut grad) = problem.objective_and_gradient(&w, beta, rho)?;
    let f0 = initial.total;
    let mut history = Vec::new();
    let mut prev = f0;
    let mut converged = false;

    // FISTA keeps the last proximal iterate and its state; `w` is then the
    // extrapolated point at which `grad` was taken. The extrapolated state
    // is formed linearly, saving one forward evaluation per iteration.
    let mut t = 1.0f64;
    let mut x_prev = w.clone();
    let mut s_prev = if config.accelerate { Some(problem.state(&w, false)?) } else { None };

    for _ in 0..config.max_iters {
        let terms = if let Some(sp) = s_prev.as_mut() {
            let x = step(&w, &grad, gamma, beta);
            let sx = problem.state(&x, false)?;
            let terms = problem.terms_at(&sx, &x, beta, rho);
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let momentum = (t - 1.0) / t_next;
            let mut z = x.clone();
            for ((zv, &xv), &pv) in z.as_slice_mut().iter_mut().zip(x.as_slice()).zip(x_prev.as_slice()) {
                *zv = T::of(xv.as_f64() + momentum * (xv.as_f64() - pv.as_f64()));
            }
            history.push(record(&terms, &x));
            grad = problem.gradient_at(&State::extrapolate(&sx, sp, momentum), rho)?;
            w = z;
            x_prev = x;
            *sp = sx;
            t = t_next;
            terms
        } else {
            w = step(&w, &grad, gamma, beta);
            let (terms, g) = problem.objective_and_gradient(&w, beta, rho)?;
            grad = g;
            history.push(record(&terms, &w));
            if terms.total > DIVERGENCE_FACTOR * f0 && terms.total > 0.0 {
                return Err(Error::Diverged(format!(
                    "ISTA objective grew from {f0:e} to {:e}; step size {gamma:e} exceeds 1/L",
                    terms.total
                )));
            }
            terms
        };
        if !terms.total.is_finite() {
            return Err(Error::Diverged("objective became non-finite".into()));
        }
        if relative_change_below(prev, terms.total, config.rel_tol) {
            converged = true;
            break;
        }
        prev = terms.total;
    }
    let solution = if config.accelerate { x_prev } else { w };
    let final_sparsity = sparsity(&solution, 0.0);
    let iterations = history.len();
    Ok((solution, SolveReport { initial, history, iterations, gamma, lipschitz, converged, final_sparsity }))
}

fn step<T: Real>(w: &CoefficientTensor<T>, grad: &CoefficientTensor<T>, gamma: f64, beta: f64) -> CoefficientTensor<T> {
    let mut out = w.clone();
    for (o, &g) in out.as_slice_mut().iter_mut().zip(grad.as_slice()) {
        *o = T::of(o.as_f64() - gamma * g.as_f64());
    }
    shrink_in_place(out.as_slice_mut(), beta * gamma);
    out
}

fn relative_change_below(prev: f64, cur: f64, tol: f64) -> bool {
    if prev == 0.0 {
        return cur == 0.0 || tol > 0.0;
    }
    ((cur - prev) / prev).abs() < tol
}

fn record<T: Real>(terms: &ObjectiveTerms, w: &CoefficientTensor<T>) -> IterationRecord {
    IterationRecord {
        objective: terms.total,
        fidelity: terms.fidelity,
        overlap: terms.overlap,
        l1: terms.l1,
        sparsity: sparsity(w, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(v: &[f64]) -> CoefficientTensor<f64> {
        CoefficientTensor::from_vec(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn shrink_examples() {
        let w = tensor(&[0.5, -0.1, -0.7, 0.2]);
        let s = shrink(&w, 0.2);
        let want = [0.3, 0.0, -0.5, 0.0];
        for (a, b) in s.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(shrink(&w, 0.0), w);
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity(&tensor(&[0.0; 6]), 0.0), 0.0);
        assert_eq!(sparsity(&tensor(&[1.0; 6]), 0.0), 1.0);
        assert_eq!(sparsity(&tensor(&[1.0, 0.0, 1e-9, 0.0]), 1e-6), 0.25);
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::<f64>::default();
        assert!(ok.validate().is_ok());
        assert!(SolverConfig::<f64> { beta: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig::<f64> { gamma: Some(0.0), ..Default::default() }.validate().is_err());
        assert!(SolverConfig::<f64> { max_iters: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let r = SolveReport {
            initial: ObjectiveTerms { total: 2.0, fidelity: 2.0, overlap: 0.0, l1: 0.0 },
            history: vec![IterationRecord { objective: 1.0, fidelity: 0.5, overlap: 0.25, l1: 0.25, sparsity: 0.5 }],
            iterations: 1,
            gamma: 0.5,
            lipschitz: None,
            converged: false,
            final_sparsity: 0.5,
        };
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iteration,F,fidelity,overlap,l1,sparsity"));
        assert_eq!(lines.next(), Some("1,1e0,5e-1,2.5e-1,2.5e-1,0.5"));
    }
}
