use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{Geometry, Sinogram};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Reconstruction filter for [`fbp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampFilter {
    RamLak,
    /// Ramp apodized by a Hann window reaching zero at Nyquist.
    Hann,
}

impl std::str::FromStr for RampFilter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramlak" | "ram-lak" | "ramp" => Ok(Self::RamLak),
            "hann" => Ok(Self::Hann),
            other => Err(Error::Parameter(format!("unknown filter '{other}'"))),
        }
    }
}

/// Frequency response of the band-limited ramp, built as the transform of
/// the sampled spatial kernel `h(0) = 1/4, h(k odd) = -1/(pi k)^2`.
fn filter_response(len: usize, spacing: f64, filter: RampFilter) -> Vec<f64> {
    let mut kernel = vec![Complex::new(0.0, 0.0); len];
    kernel[0].re = 0.25 / (spacing * spacing);
    for k in (1..len / 2).step_by(2) {
        let v = -1.0 / (PI * PI * (k * k) as f64 * spacing * spacing);
        kernel[k].re = v;
        kernel[len - k].re = v;
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut kernel);
    kernel
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let f = if i <= len / 2 { i as f64 } else { i as f64 - len as f64 } / len as f64;
            let window = match filter {
                RampFilter::RamLak => 1.0,
                RampFilter::Hann => 0.5 * (1.0 + (2.0 * PI * f).cos()),
            };
            h.re * spacing * window
        })
        .collect()
}

/// Filtered back-projection of a scalar sinogram.
///
/// Rows are ramp-filtered in the frequency domain (zero padded to a power of
/// two at least twice the detector length) and smeared back with a
/// pixel-driven, linearly interpolating backprojector scaled by
/// `pi / n_angles`.
pub fn fbp<T: Real>(sino: &Sinogram<T>, geom: &Geometry, filter: RampFilter) -> Result<Image<T>> {
    if sino.channels() != 1 {
        return Err(Error::Shape("FBP expects a scalar sinogram".into()));
    }
    if geom.n_angles() < 2 {
        return Err(Error::Geometry("FBP needs at least two angles".into()));
    }
    sino.check_geometry(geom)?;
    let nd = geom.n_detectors();
    let len = (2 * nd).next_power_of_two();
    let response = filter_response(len, geom.detector_spacing(), filter);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let (w, h) = (geom.width(), geom.height());
    let (cx, cy) = geom.center();
    let det_center = (nd as f64 - 1.0) / 2.0;
    let mut acc = vec![0.0f64; w * h];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (a, &theta) in geom.angles().iter().enumerate() {
        buf.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        for (b, v) in buf.iter_mut().zip(sino.row(0, a)) {
            b.re = v.as_f64();
        }
        forward.process(&mut buf);
        for (b, r) in buf.iter_mut().zip(&response) {
            *b *= *r;
        }
        inverse.process(&mut buf);
        let filtered: Vec<f64> = buf[..nd].iter().map(|v| v.re / len as f64).collect();

        let (sin, cos) = theta.sin_cos();
        for row in 0..h {
            let y = row as f64 - cy;
            for col in 0..w {
                let x = col as f64 - cx;
                let u = (x * cos + y * sin) / geom.detector_spacing() + det_center;
                if u < 0.0 || u > (nd - 1) as f64 {
                    continue;
                }
                let i0 = u.floor() as usize;
                let f = u - i0 as f64;
                let v = if i0 + 1 < nd { filtered[i0] * (1.0 - f) + filtered[i0 + 1] * f } else { filtered[i0] };
                acc[row * w + col] += v;
            }
        }
    }
    let scale = PI / geom.n_angles() as f64;
    Image::from_vec(w, h, 1, acc.into_iter().map(|v| T::of(v * scale)).collect())
}
