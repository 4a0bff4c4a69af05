use ndarray::Array2;

use super::operator::{ForwardOperator, Measurement};
use crate::coeffs::CoefficientTensor;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::patchgrid::PatchGrid;
use crate::rng::SplitMix64;
use crate::scalar::{norm_sq, Real};

/// The three addends of the objective at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `fidelity + rho * overlap_raw + l1`.
    pub total: f64,
    /// `||y - P x||^2`.
    pub fidelity: f64,
    /// `rho * sum_p sum_{i in p} (x_i - patch_p(i))^2`.
    pub overlap: f64,
    /// `beta * ||w||_1`.
    pub l1: f64,
}

impl ObjectiveTerms {
    /// Smooth part `fidelity + overlap`.
    pub fn smooth(&self) -> f64 {
        self.fidelity + self.overlap
    }
}

/// Result of [`Problem::estimate_lipschitz`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    /// Value to use for the step size.
    pub value: f64,
    /// Raw power-iteration eigenvalue estimate.
    pub power_estimate: f64,
    /// False when power iteration did not settle and `value` is the
    /// operator-norm upper bound instead.
    pub converged: bool,
}

/// Safety margin applied to the power-iteration estimate.
pub const LIPSCHITZ_MARGIN: f64 = 1.05;

/// One overlap-constrained patch restoration problem: data, dictionary,
/// patch grid and forward operator.
///
/// With `x = compose_core(w)` and `patch_p = render_patch(w, p)` the
/// objective is
///
/// `F(w) = ||y - P x||^2 + rho * sum_p sum_{i in p} (x_i - patch_p(i))^2 + beta * ||w||_1`.
pub struct Problem<'a, T: Real> {
    data: &'a Measurement<T>,
    dict: &'a Dictionary<T>,
    grid: &'a PatchGrid,
    op: &'a ForwardOperator,
    /// Pixel index (within one plane) of every patch sample, `P x (m*m)`.
    pixel_index: Vec<u32>,
    /// Core membership of every patch sample, `P x (m*m)`.
    core: Vec<bool>,
}

/// Rendered patches, composed image and residual `P x - y` at one point.
/// All three are affine in `w`, so states combine linearly.
pub(crate) struct State<T> {
    rendered: Array2<T>,
    x: Image<T>,
    residual: Measurement<T>,
}

impl<T: Real> State<T> {
    /// State of `a + mu * (a - b)` given the states of `a` and `b`.
    pub(crate) fn extrapolate(a: &State<T>, b: &State<T>, mu: f64) -> State<T> {
        let lerp = |x: T, y: T| T::of(x.as_f64() + mu * (x.as_f64() - y.as_f64()));
        let mut rendered = a.rendered.clone();
        rendered.zip_mut_with(&b.rendered, |x, &y| *x = lerp(*x, y));
        let mut x = a.x.clone();
        for (v, &u) in x.samples_mut().iter_mut().zip(b.x.samples()) {
            *v = lerp(*v, u);
        }
        let mut residual = a.residual.clone();
        for (v, &u) in residual.samples_mut().iter_mut().zip(b.residual.samples()) {
            *v = lerp(*v, u);
        }
        State { rendered, x, residual }
    }
}

/// Intermediate quantities of one evaluation.
struct Evaluation<T> {
    fidelity: f64,
    overlap_raw: f64,
    gradient: Option<Array2<T>>,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(
        data: &'a Measurement<T>,
        dict: &'a Dictionary<T>,
        grid: &'a PatchGrid,
        op: &'a ForwardOperator,
    ) -> Result<Self> {
        grid.check_dictionary(dict)?;
        op.check_measurement(data, grid.width(), grid.height(), dict.channels())?;
        let m = grid.patch_size();
        let mm = m * m;
        let mut pixel_index = Vec::with_capacity(grid.n_patches() * mm);
        for o in grid.origins() {
            for r in 0..m {
                for c in 0..m {
                    pixel_index.push(((o.y + r) * grid.width() + o.x + c) as u32);
                }
            }
        }
        let masks = grid.core_masks();
        let core = masks.iter().copied().collect();
        Ok(Self { data, dict, grid, op, pixel_index, core })
    }

    pub fn dictionary(&self) -> &Dictionary<T> {
        self.dict
    }

    pub fn grid(&self) -> &PatchGrid {
        self.grid
    }

    pub fn operator(&self) -> &ForwardOperator {
        self.op
    }

    pub fn data(&self) -> &Measurement<T> {
        self.data
    }

    pub fn n_patches(&self) -> usize {
        self.grid.n_patches()
    }

    pub fn n_atoms(&self) -> usize {
        self.dict.n_atoms()
    }

    fn check(&self, w: &CoefficientTensor<T>) -> Result<()> {
        w.check_shape(self.grid.n_patches(), self.dict.n_atoms())
    }

    /// Composed image for coefficients `w`.
    pub fn compose(&self, w: &CoefficientTensor<T>) -> Result<Image<T>> {
        self.check(w)?;
        let rendered = w.values().dot(self.dict.atoms());
        self.grid.compose_rendered(&rendered, self.dict.channels())
    }

    /// Quantities linear (affine) in `w` at one point. With `homogeneous`
    /// the data is treated as zero.
    pub(crate) fn state(&self, w: &CoefficientTensor<T>, homogeneous: bool) -> Result<State<T>> {
        let rendered = w.values().dot(self.dict.atoms());
        let x = self.grid.compose_rendered(&rendered, self.dict.channels())?;
        let mut residual = self.op.apply(&x)?;
        if !homogeneous {
            for (r, y) in residual.samples_mut().iter_mut().zip(self.data.samples()) {
                *r = *r - *y;
            }
        }
        Ok(State { rendered, x, residual })
    }

    /// Fidelity, unweighted overlap penalty and per-sample differences
    /// `x|_p - patch_p`.
    fn measure(&self, s: &State<T>) -> (f64, f64, Vec<T>) {
        let mm = self.grid.patch_size().pow(2);
        let channels = self.dict.channels();
        let n = mm * channels;
        let plane_len = self.grid.width() * self.grid.height();
        let fidelity = norm_sq(s.residual.samples());
        let blocks = s.rendered.as_slice().expect("standard layout");
        let xs = s.x.samples();
        let mut diff = vec![T::zero(); self.grid.n_patches() * n];
        let mut overlap_raw = 0.0;
        for p in 0..self.grid.n_patches() {
            let idx = &self.pixel_index[p * mm..(p + 1) * mm];
            for c in 0..channels {
                let base = p * n + c * mm;
                for (j, &pix) in idx.iter().enumerate() {
                    let d = xs[c * plane_len + pix as usize] - blocks[base + j];
                    diff[base + j] = d;
                    let d = d.as_f64();
                    overlap_raw += d * d;
                }
            }
        }
        (fidelity, overlap_raw, diff)
    }

    fn gradient_from(&self, s: &State<T>, diff: &[T], rho: f64) -> Result<Array2<T>> {
        let mm = self.grid.patch_size().pow(2);
        let channels = self.dict.channels();
        let n = mm * channels;
        let n_patches = self.grid.n_patches();
        let plane_len = self.grid.width() * self.grid.height();

        // image-space field P^T(Px - y) + rho * sum_{p covering i} diff_p(i)
        let mut field: Vec<f64> = self.op.adjoint(&s.residual)?.samples().iter().map(|v| v.as_f64()).collect();
        if rho != 0.0 {
            for p in 0..n_patches {
                let idx = &self.pixel_index[p * mm..(p + 1) * mm];
                for c in 0..channels {
                    let base = p * n + c * mm;
                    for (j, &pix) in idx.iter().enumerate() {
                        field[c * plane_len + pix as usize] += rho * diff[base + j].as_f64();
                    }
                }
            }
        }

        let mut v = Array2::<T>::zeros((n_patches, n));
        {
            let vs = v.as_slice_mut().unwrap();
            for p in 0..n_patches {
                let idx = &self.pixel_index[p * mm..(p + 1) * mm];
                let core = &self.core[p * mm..(p + 1) * mm];
                for c in 0..channels {
                    let base = p * n + c * mm;
                    for j in 0..mm {
                        let pix = idx[j] as usize;
                        let mut val = -rho * diff[base + j].as_f64();
                        if core[j] {
                            val += field[c * plane_len + pix];
                        }
                        vs[base + j] = T::of(2.0 * val);
                    }
                }
            }
        }
        Ok(v.dot(&self.dict.atoms().t()))
    }

    /// Objective terms at a precomputed state of `w`.
    pub(crate) fn terms_at(&self, s: &State<T>, w: &CoefficientTensor<T>, beta: f64, rho: f64) -> ObjectiveTerms {
        let (fidelity, overlap_raw, _) = self.measure(s);
        terms(&Evaluation { fidelity, overlap_raw, gradient: None }, w, beta, rho)
    }

    /// Smooth gradient at a precomputed state.
    pub(crate) fn gradient_at(&self, s: &State<T>, rho: f64) -> Result<CoefficientTensor<T>> {
        let (_, _, diff) = self.measure(s);
        CoefficientTensor::from_array(self.gradient_from(s, &diff, rho)?)
    }

    fn evaluate(&self, w: &CoefficientTensor<T>, rho: f64, want_gradient: bool, homogeneous: bool) -> Result<Evaluation<T>> {
        let s = self.state(w, homogeneous)?;
        let (fidelity, overlap_raw, diff) = self.measure(&s);
        let gradient = if want_gradient { Some(self.gradient_from(&s, &diff, rho)?) } else { None };
        Ok(Evaluation { fidelity, overlap_raw, gradient })
    }

    /// Objective value and its three addends.
    pub fn objective(&self, w: &CoefficientTensor<T>, beta: f64, rho: f64) -> Result<ObjectiveTerms> {
        self.check(w)?;
        let e = self.evaluate(w, rho, false, false)?;
        Ok(terms(&e, w, beta, rho))
    }

    /// Gradient of the smooth part `fidelity + overlap`.
    pub fn gradient(&self, w: &CoefficientTensor<T>, rho: f64) -> Result<CoefficientTensor<T>> {
        self.check(w)?;
        let e = self.evaluate(w, rho, true, false)?;
        CoefficientTensor::from_array(e.gradient.unwrap())
    }

    /// Objective terms and smooth gradient from a single pass.
    pub fn objective_and_gradient(
        &self,
        w: &CoefficientTensor<T>,
        beta: f64,
        rho: f64,
    ) -> Result<(ObjectiveTerms, CoefficientTensor<T>)> {
        self.check(w)?;
        let mut e = self.evaluate(w, rho, true, false)?;
        let g = e.gradient.take().unwrap();
        Ok((terms(&e, w, beta, rho), CoefficientTensor::from_array(g)?))
    }

    /// The linear part of the gradient, `w -> grad f(w)` with zero data.
    pub fn hessian_apply(&self, w: &CoefficientTensor<T>, rho: f64) -> Result<CoefficientTensor<T>> {
        self.check(w)?;
        let e = self.evaluate(w, rho, true, true)?;
        CoefficientTensor::from_array(e.gradient.unwrap())
    }

    /// Lipschitz constant of the gradient by power iteration on the
    /// homogeneous gradient map, inflated by [`LIPSCHITZ_MARGIN`].
    ///
    /// If the eigenvalue estimate has not settled to a relative change of
    /// `1e-4` within `iters` steps, the operator-norm upper bound is returned
    /// and `converged` is false.
    pub fn estimate_lipschitz(&self, rho: f64, iters: usize, seed: u64) -> Result<LipschitzEstimate> {
        if iters < 10 {
            return Err(Error::Parameter(format!("power iteration needs at least 10 steps, got {iters}")));
        }
        let (np, k) = (self.n_patches(), self.n_atoms());
        let mut rng = SplitMix64::new(seed);
        let mut v = CoefficientTensor::from_vec(np, k, (0..np * k).map(|_| T::of(rng.gaussian())).collect())?;
        normalize(&mut v);
        let mut estimate = 0.0;
        let mut converged = false;
        for _ in 0..iters {
            let mut hv = self.hessian_apply(&v, rho)?;
            let nrm = norm_sq(hv.as_slice()).sqrt();
            if nrm == 0.0 {
                // the quadratic part vanishes identically
                return Ok(LipschitzEstimate { value: 0.0, power_estimate: 0.0, converged: true });
            }
            let change = (nrm - estimate).abs() / nrm;
            estimate = nrm;
            hv.as_slice_mut().iter_mut().for_each(|x| *x = T::of(x.as_f64() / nrm));
            v = hv;
            if change < 1e-4 {
                converged = true;
                break;
            }
        }
        if converged {
            Ok(LipschitzEstimate { value: LIPSCHITZ_MARGIN * estimate, power_estimate: estimate, converged })
        } else {
            Ok(LipschitzEstimate { value: self.lipschitz_upper_bound(rho)?, power_estimate: estimate, converged })
        }
    }

    /// `2 s^2 (||P||^2 + rho (sqrt(max overlap) + 1)^2)` where `s^2` bounds
    /// the squared spectral norm of the atom matrix by the max absolute row
    /// sum of its Gram matrix.
    pub fn lipschitz_upper_bound(&self, rho: f64) -> Result<f64> {
        let atoms = self.dict.atoms().mapv(|v| v.as_f64());
        let gram = atoms.dot(&atoms.t());
        let s2 = gram.outer_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let max_ov = self.grid.overlap_count().iter().copied().max().unwrap_or(1) as f64;
        let p2 = self.op.norm_sq_bound()?;
        Ok(2.0 * s2 * (p2 + rho * (max_ov.sqrt() + 1.0).powi(2)))
    }
}

fn terms<T: Real>(e: &Evaluation<T>, w: &CoefficientTensor<T>, beta: f64, rho: f64) -> ObjectiveTerms {
    let overlap = rho * e.overlap_raw;
    let l1 = beta * w.l1_norm();
    ObjectiveTerms { total: e.fidelity + overlap + l1, fidelity: e.fidelity, overlap, l1 }
}

fn normalize<T: Real>(v: &mut CoefficientTensor<T>) {
    let nrm = norm_sq(v.as_slice()).sqrt();
    if nrm > 0.0 {
        v.as_slice_mut().iter_mut().for_each(|x| *x = T::of(x.as_f64() / nrm));
    }
}
