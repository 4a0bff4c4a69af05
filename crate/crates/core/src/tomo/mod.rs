//! Parallel-beam tomography: projection geometry, sinograms, a Joseph
//! projector with its exact adjoint, filtered back-projection, sinogram noise
//! and the cos/sin splitting used for differential phase data.

mod fbp;
mod joseph;

pub use fbp::{fbp, RampFilter};
pub use joseph::{backproject, project};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::Real;

/// Parallel-beam acquisition geometry.
///
/// Pixel `(col, row)` sits at `x = col - cx`, `y = row - cy` where
/// `(cx, cy)` is the rotation center. A ray at angle `theta` and detector
/// offset `t` is the line `x cos(theta) + y sin(theta) = t`; detector bin `j`
/// has `t = (j - (n_detectors - 1) / 2) * detector_spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    angles: Vec<f64>,
    n_detectors: usize,
    detector_spacing: f64,
    width: usize,
    height: usize,
    center: (f64, f64),
}

/// `n` angles uniformly spaced over `[0, pi)`, endpoint excluded.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * i as f64 / n as f64).collect()
}

impl Geometry {
    /// Square-pixel geometry over a `width x height` image with `n_angles`
    /// uniform angles, unit detector spacing, enough bins to cover the image
    /// diagonal, and rotation about the image center.
    pub fn new(width: usize, height: usize, n_angles: usize) -> Result<Self> {
        let diag = ((width * width + height * height) as f64).sqrt();
        let n_det = diag.ceil() as usize + 1;
        Self::with_angles(width, height, uniform_angles(n_angles), n_det, 1.0)
    }

    pub fn with_angles(
        width: usize,
        height: usize,
        angles: Vec<f64>,
        n_detectors: usize,
        detector_spacing: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry("empty image".into()));
        }
        if angles.is_empty() {
            return Err(Error::Geometry("no projection angles".into()));
        }
        if angles.iter().any(|a| !a.is_finite() || *a < 0.0 || *a >= PI) {
            return Err(Error::Geometry("angles must lie in [0, pi)".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Geometry("angles must be strictly increasing".into()));
        }
        if n_detectors == 0 {
            return Err(Error::Geometry("no detector bins".into()));
        }
        if !(detector_spacing > 0.0 && detector_spacing.is_finite()) {
            return Err(Error::Geometry(format!("detector spacing {detector_spacing} must be positive")));
        }
        let center = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        Ok(Self { angles, n_detectors, detector_spacing, width, height, center })
    }

    pub fn with_center(mut self, cx: f64, cy: f64) -> Self {
        self.center = (cx, cy);
        self
    }

    /// Same detector layout restricted to every `stride`-th angle.
    pub fn subsampled(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Parameter("stride must be positive".into()));
        }
        let angles = self.angles.iter().copied().step_by(stride).collect();
        Ok(Self { angles, ..self.clone() })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    #[inline]
    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    #[inline]
    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    #[inline]
    pub fn detector_spacing(&self) -> f64 {
        self.detector_spacing
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Detector offset of bin `j`.
    #[inline]
    pub fn detector_offset(&self, j: usize) -> f64 {
        (j as f64 - (self.n_detectors as f64 - 1.0) / 2.0) * self.detector_spacing
    }

    /// Whether the detector spans the image diagonal.
    pub fn covers_image(&self) -> bool {
        let diag = ((self.width * self.width + self.height * self.height) as f64).sqrt();
        self.n_detectors as f64 * self.detector_spacing >= diag
    }
}

/// Projection data: `n_angles x n_detectors` per channel, stored
/// channel-planar and angle-major within a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram<T> {
    angles: Vec<f64>,
    n_detectors: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Sinogram<T> {
    pub fn zeros(angles: Vec<f64>, n_detectors: usize, channels: usize) -> Self {
        let len = angles.len() * n_detectors * channels;
        Self { angles, n_detectors, channels, data: vec![T::zero(); len] }
    }

    pub fn for_geometry(geom: &Geometry, channels: usize) -> Self {
        Self::zeros(geom.angles.clone(), geom.n_detectors, channels)
    }

    pub fn from_vec(angles: Vec<f64>, n_detectors: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if !(1..=2).contains(&channels) {
            return Err(Error::Shape(format!("channels must be 1 or 2, got {channels}")));
        }
        if data.len() != angles.len() * n_detectors * channels {
            return Err(Error::Shape(format!(
                "{}x{}x{} sinogram needs {} samples, got {}",
                angles.len(),
                n_detectors,
                channels,
                angles.len() * n_detectors * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite sinogram sample".into()));
        }
        Ok(Self { angles, n_detectors, channels, data })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    #[inline]
    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    #[inline]
    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[T] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    fn plane_len(&self) -> usize {
        self.angles.len() * self.n_detectors
    }

    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// One detector row of channel `c`.
    pub fn row(&self, c: usize, a: usize) -> &[T] {
        let start = c * self.plane_len() + a * self.n_detectors;
        &self.data[start..start + self.n_detectors]
    }

    pub fn row_mut(&mut self, c: usize, a: usize) -> &mut [T] {
        let start = c * self.plane_len() + a * self.n_detectors;
        let n = self.n_detectors;
        &mut self.data[start..start + n]
    }

    pub fn channel(&self, c: usize) -> Sinogram<T> {
        Sinogram { angles: self.angles.clone(), n_detectors: self.n_detectors, channels: 1, data: self.plane(c).to_vec() }
    }

    pub fn from_channels(parts: &[Sinogram<T>]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Shape("no channels".into()))?;
        let mut data = Vec::new();
        for p in parts {
            if p.angles != first.angles || p.n_detectors != first.n_detectors || p.channels != 1 {
                return Err(Error::Shape("channel sinograms must be scalar with identical layout".into()));
            }
            data.extend_from_slice(&p.data);
        }
        Self::from_vec(first.angles.clone(), first.n_detectors, parts.len(), data)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { data: self.data.iter().map(|&v| v * s).collect(), ..self.clone() }
    }

    /// Checks that the layout matches `geom` with `channels` channels.
    pub fn check_geometry(&self, geom: &Geometry) -> Result<()> {
        if self.angles.len() != geom.n_angles() || self.n_detectors != geom.n_detectors() {
            return Err(Error::Shape(format!(
                "sinogram is {}x{}, geometry is {}x{}",
                self.angles.len(),
                self.n_detectors,
                geom.n_angles(),
                geom.n_detectors()
            )));
        }
        if self.angles.iter().zip(geom.angles()).any(|(a, b)| (a - b).abs() > 1e-6) {
            return Err(Error::Shape("sinogram angles differ from geometry".into()));
        }
        Ok(())
    }

    pub fn convert<U: Real>(&self) -> Sinogram<U> {
        Sinogram {
            angles: self.angles.clone(),
            n_detectors: self.n_detectors,
            channels: self.channels,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Splits a scalar differential-phase sinogram into its X and Y parts by
/// weighting the row at angle `theta` with `cos(theta)` and `sin(theta)`.
pub fn split_dpc<T: Real>(sino: &Sinogram<T>) -> Result<(Sinogram<T>, Sinogram<T>)> {
    if sino.channels() != 1 {
        return Err(Error::Shape("DPC splitting expects a scalar sinogram".into()));
    }
    let mut x = sino.clone();
    let mut y = sino.clone();
    for (a, &theta) in sino.angles().iter().enumerate() {
        let (s, c) = theta.sin_cos();
        x.row_mut(0, a).iter_mut().for_each(|v| *v = T::of(v.as_f64() * c));
        y.row_mut(0, a).iter_mut().for_each(|v| *v = T::of(v.as_f64() * s));
    }
    Ok((x, y))
}

/// Differential-phase signal `cos(theta) * gx + sin(theta) * gy` from the
/// projections of the two gradient components.
pub fn combine_dpc<T: Real>(gx: &Sinogram<T>, gy: &Sinogram<T>) -> Result<Sinogram<T>> {
    if gx.channels() != 1 || gy.channels() != 1 || gx.angles != gy.angles || gx.n_detectors != gy.n_detectors {
        return Err(Error::Shape("component sinograms must be scalar with identical layout".into()));
    }
    let mut out = gx.clone();
    for (a, &theta) in gx.angles().iter().enumerate() {
        let (s, c) = theta.sin_cos();
        let (rx, ry) = (gx.row(0, a), gy.row(0, a));
        for ((o, &vx), &vy) in out.row_mut(0, a).iter_mut().zip(rx).zip(ry) {
            *o = T::of(c * vx.as_f64() + s * vy.as_f64());
        }
    }
    Ok(out)
}

/// Adds i.i.d. gaussian noise with standard deviation
/// `sigma_frac * max(sino)`.
pub fn add_noise<T: Real>(sino: &Sinogram<T>, sigma_frac: f64, seed: u64) -> Result<Sinogram<T>> {
    if !(sigma_frac >= 0.0) {
        return Err(Error::Parameter(format!("sigma fraction {sigma_frac} must be non-negative")));
    }
    if sigma_frac == 0.0 {
        return Ok(sino.clone());
    }
    let sigma = sigma_frac * sino.max().as_f64();
    let mut rng = SplitMix64::new(seed);
    let mut out = sino.clone();
    for v in out.samples_mut() {
        *v = T::of(v.as_f64() + sigma * rng.gaussian());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_sino(angles: Vec<f64>) -> Sinogram<f64> {
        let n = angles.len() * 5;
        Sinogram::from_vec(angles, 5, 1, (0..n).map(|i| i as f64 + 1.0).collect()).unwrap()
    }

    #[test]
    fn geometry_validation() {
        assert!(Geometry::with_angles(8, 8, vec![0.0, 0.0], 10, 1.0).is_err());
        assert!(Geometry::with_angles(8, 8, vec![0.0, PI], 10, 1.0).is_err());
        assert!(Geometry::with_angles(8, 8, vec![], 10, 1.0).is_err());
        assert!(Geometry::with_angles(8, 8, vec![0.0], 10, 0.0).is_err());
        let g = Geometry::new(8, 8, 4).unwrap();
        assert!(g.covers_image());
        assert_eq!(g.angles()[1], PI / 4.0);
    }

    #[test]
    fn dpc_split_at_cardinal_angles() {
        let s = ramp_sino(vec![0.0, PI / 2.0]);
        let (x, y) = split_dpc(&s).unwrap();
        assert_eq!(x.row(0, 0), s.row(0, 0));
        assert!(y.row(0, 0).iter().all(|&v| v == 0.0));
        assert!(x.row(0, 1).iter().all(|&v| v.abs() < 1e-12));
        for (a, b) in y.row(0, 1).iter().zip(s.row(0, 1)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dpc_split_preserves_energy() {
        let s = ramp_sino(uniform_angles(7));
        let (x, y) = split_dpc(&s).unwrap();
        for a in 0..7 {
            let e0: f64 = s.row(0, a).iter().map(|v| v * v).sum();
            let e1: f64 = x.row(0, a).iter().zip(y.row(0, a)).map(|(u, v)| u * u + v * v).sum();
            assert!((e0 - e1).abs() < 1e-9 * e0);
        }
    }

    #[test]
    fn noise_zero_and_seeded() {
        let s = ramp_sino(uniform_angles(4));
        assert_eq!(add_noise(&s, 0.0, 3).unwrap(), s);
        assert_eq!(add_noise(&s, 0.05, 3).unwrap(), add_noise(&s, 0.05, 3).unwrap());
        assert_ne!(add_noise(&s, 0.05, 3).unwrap(), add_noise(&s, 0.05, 4).unwrap());
        assert!(add_noise(&s, -1.0, 3).is_err());
    }

    #[test]
    fn noise_standard_deviation() {
        let n_det = 1000;
        let angles = uniform_angles(120);
        let data: Vec<f64> = (0..120 * n_det).map(|i| (i % 17) as f64 / 16.0 * 2.0).collect();
        let s = Sinogram::from_vec(angles, n_det, 1, data).unwrap();
        let noisy = add_noise(&s, 0.05, 11).unwrap();
        let sigma = 0.05 * 2.0;
        let d: Vec<f64> = noisy.samples().iter().zip(s.samples()).map(|(a, b)| a - b).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        assert!((sd - sigma).abs() < 0.05 * sigma, "sd {sd} vs {sigma}");
    }
}
