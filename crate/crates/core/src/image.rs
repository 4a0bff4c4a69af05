//! Multi-channel raster images.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense 2D raster with `channels` planes stored one after another
/// (channel-planar), each plane row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, T::zero())
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || channels > 2 {
            return Err(Error::Shape(format!("channels must be 1 or 2, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite sample at index {i}")));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Builds a scalar image by evaluating `f(col, row)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self { width, height, channels: 1, data }
    }

    /// Stacks scalar planes into one multi-channel image.
    pub fn from_planes(planes: &[Image<T>]) -> Result<Self> {
        let first = planes.first().ok_or_else(|| Error::Shape("no planes".into()))?;
        let mut data = Vec::with_capacity(first.len() * planes.len());
        for p in planes {
            if p.width != first.width || p.height != first.height || p.channels != 1 {
                return Err(Error::Shape("planes must be scalar images of equal size".into()));
            }
            data.extend_from_slice(&p.data);
        }
        Self::from_vec(first.width, first.height, planes.len(), data)
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
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Total number of samples over all channels.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn samples(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies one channel out as a scalar image.
    pub fn channel(&self, c: usize) -> Image<T> {
        Image { width: self.width, height: self.height, channels: 1, data: self.plane(c).to_vec() }
    }

    #[inline]
    pub fn get(&self, c: usize, col: usize, row: usize) -> T {
        self.data[c * self.plane_len() + row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, c: usize, col: usize, row: usize, v: T) {
        let n = self.plane_len();
        self.data[c * n + row * self.width + col] = v;
    }

    pub fn same_shape(&self, other: &Image<T>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn check_same_shape(&self, other: &Image<T>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Image<T> {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Image<T> {
        self.map(|v| v * s)
    }

    pub fn min_max(&self) -> (T, T) {
        self.data.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Linear rescale so the minimum maps to 0 and the maximum to 1.
    /// A constant image maps to all zeros.
    pub fn normalized(&self) -> Image<T> {
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        if span <= T::zero() {
            return self.map(|_| T::zero());
        }
        self.map(|v| (v - lo) / span)
    }

    /// Transposed image (rows become columns), per channel.
    pub fn transposed(&self) -> Image<T> {
        let mut out = Image::zeros(self.height, self.width, self.channels);
        for c in 0..self.channels {
            for row in 0..self.height {
                for col in 0..self.width {
                    out.set(c, row, col, self.get(c, col, row));
                }
            }
        }
        out
    }

    pub fn convert<U: Real>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

impl<T: Real> std::ops::Index<usize> for Image<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}
