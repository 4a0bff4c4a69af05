//! Gradient synthesis and image noise.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::{Image, Real};

/// 3×3 Sobel responses with replicated borders. Channel 0 is the
/// derivative along columns (x), channel 1 along rows (y).
pub fn sobel_gradients<T: Real>(img: &Image<T>) -> Result<Image<T>> {
    if img.channels() != 1 {
        return Err(Error::Shape(format!("sobel needs one channel, got {}", img.channels())));
    }
    let (w, h) = (img.width(), img.height());
    let at = |c: isize, r: isize| {
        let c = c.clamp(0, w as isize - 1) as usize;
        let r = r.clamp(0, h as isize - 1) as usize;
        img.get(0, c, r).as_f64()
    };
    let mut out = Image::zeros(w, h, 2);
    for row in 0..h {
        for col in 0..w {
            let (c, r) = (col as isize, row as isize);
            let gx = (at(c + 1, r - 1) + 2.0 * at(c + 1, r) + at(c + 1, r + 1))
                - (at(c - 1, r - 1) + 2.0 * at(c - 1, r) + at(c - 1, r + 1));
            let gy = (at(c - 1, r + 1) + 2.0 * at(c, r + 1) + at(c + 1, r + 1))
                - (at(c - 1, r - 1) + 2.0 * at(c, r - 1) + at(c + 1, r - 1));
            out.set(0, col, row, T::of(gx));
            out.set(1, col, row, T::of(gy));
        }
    }
    Ok(out)
}

/// Adds i.i.d. gaussian noise of absolute standard deviation `sigma`.
pub fn add_image_noise<T: Real>(img: &Image<T>, sigma: f64, seed: u64) -> Result<Image<T>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = SplitMix64::new(seed);
    Ok(img.map(|v| T::of(v.as_f64() + sigma * rng.gaussian())))
}
