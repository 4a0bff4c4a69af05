use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;
use crate::tomo::{self, Geometry, Sinogram};

/// Data-space quantity: an image (denoising) or a sinogram (tomography).
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement<T> {
    Image(Image<T>),
    Sinogram(Sinogram<T>),
}

impl<T: Real> Measurement<T> {
    pub fn samples(&self) -> &[T] {
        match self {
            Measurement::Image(i) => i.samples(),
            Measurement::Sinogram(s) => s.samples(),
        }
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        match self {
            Measurement::Image(i) => i.samples_mut(),
            Measurement::Sinogram(s) => s.samples_mut(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Measurement::Image(i) => i.channels(),
            Measurement::Sinogram(s) => s.channels(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.samples_mut().iter_mut().for_each(|v| *v = *v * c);
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.samples_mut().iter_mut().for_each(|v| *v = T::zero());
        out
    }
}

impl<T> From<Image<T>> for Measurement<T> {
    fn from(i: Image<T>) -> Self {
        Measurement::Image(i)
    }
}

impl<T> From<Sinogram<T>> for Measurement<T> {
    fn from(s: Sinogram<T>) -> Self {
        Measurement::Sinogram(s)
    }
}

/// Linear map from image space to data space.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardOperator {
    /// Denoising: data is the image itself.
    Identity,
    /// Parallel-beam projection, applied channel by channel.
    Tomographic(Geometry),
}

impl ForwardOperator {
    pub fn apply<T: Real>(&self, img: &Image<T>) -> Result<Measurement<T>> {
        match self {
            ForwardOperator::Identity => Ok(Measurement::Image(img.clone())),
            ForwardOperator::Tomographic(g) => Ok(Measurement::Sinogram(tomo::project(img, g)?)),
        }
    }

    pub fn adjoint<T: Real>(&self, data: &Measurement<T>) -> Result<Image<T>> {
        match (self, data) {
            (ForwardOperator::Identity, Measurement::Image(i)) => Ok(i.clone()),
            (ForwardOperator::Tomographic(g), Measurement::Sinogram(s)) => tomo::backproject(s, g),
            _ => Err(Error::Shape("measurement kind does not match the operator".into())),
        }
    }

    /// Verifies that `data` lives in this operator's range space for images
    /// of the given shape.
    pub fn check_measurement<T: Real>(
        &self,
        data: &Measurement<T>,
        width: usize,
        height: usize,
        channels: usize,
    ) -> Result<()> {
        if data.channels() != channels {
            return Err(Error::Shape(format!(
                "data has {} channels, dictionary has {}",
                data.channels(),
                channels
            )));
        }
        match (self, data) {
            (ForwardOperator::Identity, Measurement::Image(i)) => {
                if i.width() != width || i.height() != height {
                    return Err(Error::Shape(format!(
                        "image is {}x{}, grid is {}x{}",
                        i.width(),
                        i.height(),
                        width,
                        height
                    )));
                }
                Ok(())
            }
            (ForwardOperator::Tomographic(g), Measurement::Sinogram(s)) => {
                if g.width() != width || g.height() != height {
                    return Err(Error::Shape(format!(
                        "geometry is for {}x{} images, grid is {}x{}",
                        g.width(),
                        g.height(),
                        width,
                        height
                    )));
                }
                s.check_geometry(g)
            }
            _ => Err(Error::Shape("measurement kind does not match the operator".into())),
        }
    }

    /// Upper bound on the squared operator norm.
    ///
    /// For the projector all weights are non-negative, so
    /// `||A||^2 <= max row sum * max column sum`.
    pub fn norm_sq_bound(&self) -> Result<f64> {
        match self {
            ForwardOperator::Identity => Ok(1.0),
            ForwardOperator::Tomographic(g) => {
                let ones = Image::<f64>::filled(g.width(), g.height(), 1, 1.0);
                let rows = tomo::project(&ones, g)?;
                let mut ones_s = Sinogram::<f64>::for_geometry(g, 1);
                ones_s.samples_mut().iter_mut().for_each(|v| *v = 1.0);
                let cols = tomo::backproject(&ones_s, g)?;
                let max = |s: &[f64]| s.iter().copied().fold(0.0f64, f64::max);
                Ok(max(rows.samples()) * max(cols.samples()))
            }
        }
    }
}
