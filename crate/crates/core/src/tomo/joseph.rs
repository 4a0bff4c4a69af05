//! Joseph's ray-driven projector.
//!
//! Each ray is stepped one pixel at a time along whichever image axis it is
//! most aligned with; at every step the image is sampled by linear
//! interpolation between the two nearest pixels across the ray, and the
//! sample is weighted by the path length per step. The backprojector visits
//! exactly the same (pixel, weight) pairs, so it is the true transpose.

use super::{Geometry, Sinogram};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Indices `k < n` for which `base + slope * k` may fall in `(-1, limit)`.
/// Slightly generous; the caller still checks each position.
#[inline]
fn span(base: f64, slope: f64, limit: usize, n: usize) -> std::ops::Range<usize> {
    if slope == 0.0 {
        return if base > -1.0 && base < limit as f64 { 0..n } else { 0..0 };
    }
    let a = (-1.0 - base) / slope;
    let b = (limit as f64 - base) / slope;
    let lo = a.min(b).floor().max(0.0);
    let hi = (a.max(b).ceil() + 1.0).min(n as f64);
    if hi <= lo {
        0..0
    } else {
        lo as usize..hi as usize
    }
}

/// Visits every `(pixel index, weight)` pair of the ray `(angle, bin)`.
#[inline]
fn trace(geom: &Geometry, cos: f64, sin: f64, t: f64, mut visit: impl FnMut(usize, f64)) {
    let (w, h) = (geom.width(), geom.height());
    let (cx, cy) = geom.center();
    if cos.abs() >= sin.abs() {
        // step over rows; column position is affine in the row index
        let scale = 1.0 / cos.abs();
        let base = t / cos + cx + (sin / cos) * cy;
        let slope = -sin / cos;
        for row in span(base, slope, w, h) {
            let pos = base + slope * row as f64;
            if pos <= -1.0 || pos >= w as f64 {
                continue;
            }
            let i0 = pos.floor();
            let f = pos - i0;
            let i0 = i0 as isize;
            if i0 >= 0 {
                visit(row * w + i0 as usize, (1.0 - f) * scale);
            }
            if f > 0.0 && i0 + 1 < w as isize {
                visit(row * w + (i0 + 1) as usize, f * scale);
            }
        }
    } else {
        let scale = 1.0 / sin.abs();
        let base = t / sin + cy + (cos / sin) * cx;
        let slope = -cos / sin;
        for col in span(base, slope, h, w) {
            let pos = base + slope * col as f64;
            if pos <= -1.0 || pos >= h as f64 {
                continue;
            }
            let i0 = pos.floor();
            let f = pos - i0;
            let i0 = i0 as isize;
            if i0 >= 0 {
                visit(i0 as usize * w + col, (1.0 - f) * scale);
            }
            if f > 0.0 && i0 + 1 < h as isize {
                visit((i0 + 1) as usize * w + col, f * scale);
            }
        }
    }
}

fn check_image<T: Real>(img: &Image<T>, geom: &Geometry) -> Result<()> {
    if img.width() != geom.width() || img.height() != geom.height() {
        return Err(Error::Shape(format!(
            "image is {}x{}, geometry expects {}x{}",
            img.width(),
            img.height(),
            geom.width(),
            geom.height()
        )));
    }
    Ok(())
}

/// Discrete Radon transform of every channel of `img`.
pub fn project<T: Real>(img: &Image<T>, geom: &Geometry) -> Result<Sinogram<T>> {
    check_image(img, geom)?;
    let mut sino = Sinogram::for_geometry(geom, img.channels());
    for c in 0..img.channels() {
        let plane = img.plane(c);
        for (a, &theta) in geom.angles().iter().enumerate() {
            let (sin, cos) = theta.sin_cos();
            let row = sino.row_mut(c, a);
            for (j, out) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                trace(geom, cos, sin, geom.detector_offset(j), |i, wgt| acc += wgt * plane[i].as_f64());
                *out = T::of(acc);
            }
        }
    }
    Ok(sino)
}

/// Exact adjoint of [`project`].
pub fn backproject<T: Real>(sino: &Sinogram<T>, geom: &Geometry) -> Result<Image<T>> {
    sino.check_geometry(geom)?;
    let n = geom.width() * geom.height();
    let mut acc = vec![0.0f64; n * sino.channels()];
    for c in 0..sino.channels() {
        let plane = &mut acc[c * n..(c + 1) * n];
        for (a, &theta) in geom.angles().iter().enumerate() {
            let (sin, cos) = theta.sin_cos();
            for (j, &v) in sino.row(c, a).iter().enumerate() {
                let v = v.as_f64();
                if v == 0.0 {
                    continue;
                }
                trace(geom, cos, sin, geom.detector_offset(j), |i, wgt| plane[i] += wgt * v);
            }
        }
    }
    Image::from_vec(geom.width(), geom.height(), sino.channels(), acc.into_iter().map(T::of).collect())
}
