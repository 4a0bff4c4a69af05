//! Image quality scores: structural similarity (SSIM) and the SSIM-based
//! quality improvement factor.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// SSIM configuration. Defaults: 11x11 gaussian window with sigma 1.5,
/// `k1 = 0.01`, `k2 = 0.03`, data range 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, data_range: 1.0 }
    }
}

impl SsimParams {
    pub fn with_data_range(data_range: f64) -> Self {
        Self { data_range, ..Self::default() }
    }

    /// Normalized 2D gaussian weights, row-major `window x window`.
    pub fn weights(&self) -> Vec<f64> {
        let r = (self.window as f64 - 1.0) / 2.0;
        let g: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - r;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let mut w: Vec<f64> = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 || !(self.sigma > 0.0) {
            return Err(Error::Parameter("SSIM window must be non-empty with positive sigma".into()));
        }
        if !(self.data_range > 0.0 && self.data_range.is_finite()) {
            return Err(Error::Parameter(format!("SSIM data range {} must be positive", self.data_range)));
        }
        Ok(())
    }
}

/// Mean local SSIM over all window positions fully inside the image.
/// Multi-channel images score as the mean over channels.
pub fn ssim<T: Real>(a: &Image<T>, b: &Image<T>, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    a.check_same_shape(b)?;
    let win = params.window;
    if a.width() < win || a.height() < win {
        return Err(Error::Shape(format!(
            "{}x{} image is smaller than the {}x{} SSIM window",
            a.width(),
            a.height(),
            win,
            win
        )));
    }
    let weights = params.weights();
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let (w, h) = (a.width(), a.height());
    let mut total = 0.0;
    for c in 0..a.channels() {
        let pa: Vec<f64> = a.plane(c).iter().map(|v| v.as_f64()).collect();
        let pb: Vec<f64> = b.plane(c).iter().map(|v| v.as_f64()).collect();
        let mut sum = 0.0;
        let mut count = 0usize;
        for y0 in 0..=h - win {
            for x0 in 0..=w - win {
                let (mut ma, mut mb) = (0.0, 0.0);
                for dy in 0..win {
                    let base = (y0 + dy) * w + x0;
                    let wr = &weights[dy * win..(dy + 1) * win];
                    for dx in 0..win {
                        ma += wr[dx] * pa[base + dx];
                        mb += wr[dx] * pb[base + dx];
                    }
                }
                let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
                for dy in 0..win {
                    let base = (y0 + dy) * w + x0;
                    let wr = &weights[dy * win..(dy + 1) * win];
                    for dx in 0..win {
                        let da = pa[base + dx] - ma;
                        let db = pb[base + dx] - mb;
                        vaa += wr[dx] * (da * da);
                        vbb += wr[dx] * (db * db);
                        vab += wr[dx] * (da * db);
                    }
                }
                let num = (2.0 * (ma * mb) + c1) * (2.0 * vab + c2);
                let den = (ma * ma + mb * mb + c1) * (vaa + vbb + c2);
                sum += num / den;
                count += 1;
            }
        }
        total += sum / count as f64;
    }
    Ok(total / a.channels() as f64)
}

/// Cap reported when the restored image matches the reference exactly.
pub const Q_CAP: f64 = 1e12;

/// Quality improvement factor `(1 - S(degraded, truth)) / (1 - S(restored, truth))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QFactor {
    pub value: f64,
    pub ssim_degraded: f64,
    pub ssim_restored: f64,
    /// True when the denominator vanished and `value` is [`Q_CAP`].
    pub capped: bool,
}

pub fn q_factor<T: Real>(
    truth: &Image<T>,
    degraded: &Image<T>,
    restored: &Image<T>,
    params: &SsimParams,
) -> Result<QFactor> {
    let sd = ssim(degraded, truth, params)?;
    let sr = ssim(restored, truth, params)?;
    Ok(q_from_ssim(sd, sr))
}

/// Quality factor from two precomputed SSIM scores.
pub fn q_from_ssim(ssim_degraded: f64, ssim_restored: f64) -> QFactor {
    let den = 1.0 - ssim_restored;
    let num = 1.0 - ssim_degraded;
    let (value, capped) = if den <= 0.0 { (Q_CAP, true) } else { ((num / den).min(Q_CAP), num / den >= Q_CAP) };
    QFactor { value, ssim_degraded, ssim_restored, capped }
}
