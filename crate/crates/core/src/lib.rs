//! Convex patch-dictionary image restoration.
//!
//! Images are represented by sparse coefficients over a learned dictionary of
//! small patches. Patches may overlap; the image is composed from each
//! patch's core region and a quadratic penalty pulls every overlapping patch
//! toward the composed image. The resulting objective (data fidelity +
//! overlap penalty + L1 sparsity) is convex and is minimized by proximal
//! gradient descent (ISTA/FISTA). The data term uses either the identity
//! (denoising) or a parallel-beam projector (tomographic reconstruction).
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below name the common instantiations.

pub mod bench;
pub mod coeffs;
pub mod dictionary;
pub mod error;
pub mod formats;
pub mod image;
pub mod metrics;
pub mod patchgrid;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod tomo;

pub use coeffs::CoefficientTensor;
pub use dictionary::{Dictionary, SparseCode};
pub use error::{Error, Result};
pub use image::Image;
pub use patchgrid::{PatchGrid, PatchOrigin};
pub use scalar::Real;
pub use solver::{ForwardOperator, Measurement, Problem, SolveReport, SolverConfig};
pub use tomo::{Geometry, Sinogram};

pub type Image64 = Image<f64>;
pub type Image32 = Image<f32>;
pub type Dictionary64 = Dictionary<f64>;
pub type Dictionary32 = Dictionary<f32>;
pub type Coefficients64 = CoefficientTensor<f64>;
pub type Coefficients32 = CoefficientTensor<f32>;
pub type Sinogram64 = Sinogram<f64>;
pub type Sinogram32 = Sinogram<f32>;
pub type Problem64<'a> = Problem<'a, f64>;
