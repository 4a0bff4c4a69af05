//! Synthetic test images.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::Image;

/// An ellipse in normalized coordinates: the image spans [-1,1] on both
/// axes with y pointing up. `angle` rotates the axes counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn disk(cx: f64, cy: f64, r: f64, intensity: f64) -> Self {
        Ellipse { cx, cy, a: r, b: r, angle: 0.0, intensity }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (dx * c + dy * s) / self.a;
        let v = (-dx * s + dy * c) / self.b;
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub size: usize,
    pub ellipses: Vec<Ellipse>,
}

impl PhantomSpec {
    pub fn new(size: usize, ellipses: Vec<Ellipse>) -> Self {
        PhantomSpec { size, ellipses }
    }

    /// The modified Shepp-Logan head phantom.
    pub fn shepp_logan(size: usize) -> Self {
        let rows: [[f64; 6]; 10] = [
            [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
            [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
            [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
            [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
            [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
            [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
            [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
            [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
            [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
            [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
        ];
        let ellipses = rows
            .iter()
            .map(|r| Ellipse { intensity: r[0], a: r[1], b: r[2], cx: r[3], cy: r[4], angle: r[5].to_radians() })
            .collect();
        PhantomSpec { size, ellipses }
    }

    /// A body ellipse holding `n` random inclusions of either sign.
    pub fn random(size: usize, n: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut ellipses = vec![Ellipse { cx: 0.0, cy: 0.0, a: 0.85, b: 0.75, angle: 0.0, intensity: 0.4 }];
        for _ in 0..n {
            let r = 0.55 * rng.uniform().sqrt();
            let t = std::f64::consts::TAU * rng.uniform();
            let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            ellipses.push(Ellipse {
                cx: r * t.cos(),
                cy: r * t.sin(),
                a: 0.04 + 0.22 * rng.uniform(),
                b: 0.04 + 0.22 * rng.uniform(),
                angle: std::f64::consts::PI * rng.uniform(),
                intensity: sign * (0.1 + 0.3 * rng.uniform()),
            });
        }
        PhantomSpec { size, ellipses }
    }
}

fn coord(i: usize, size: usize) -> f64 {
    (i as f64 + 0.5) / size as f64 * 2.0 - 1.0
}

/// Sum of ellipse intensities at pixel centers, clamped to [0,1].
pub fn gen_phantom(spec: &PhantomSpec) -> Result<Image<f64>> {
    if spec.size < 32 {
        return Err(Error::Parameter(format!("phantom size {} below 32", spec.size)));
    }
    let n = spec.size;
    Ok(Image::from_fn(n, n, |col, row| {
        let (x, y) = (coord(col, n), -coord(row, n));
        let v: f64 = spec.ellipses.iter().filter(|e| e.contains(x, y)).map(|e| e.intensity).sum();
        v.clamp(0.0, 1.0)
    }))
}

/// Piecewise-smooth test image: a smooth background with random ellipses,
/// each carrying its own linear intensity ramp. Min-max normalized.
pub fn piecewise_smooth(size: usize, n: usize, seed: u64) -> Result<Image<f64>> {
    if size < 32 {
        return Err(Error::Parameter(format!("image size {size} below 32")));
    }
    let mut rng = SplitMix64::new(seed);
    let region = |rng: &mut SplitMix64| {
        let e = Ellipse {
            cx: 1.6 * rng.uniform() - 0.8,
            cy: 1.6 * rng.uniform() - 0.8,
            a: 0.1 + 0.4 * rng.uniform(),
            b: 0.1 + 0.4 * rng.uniform(),
            angle: std::f64::consts::PI * rng.uniform(),
            intensity: 0.3 + 0.7 * rng.uniform(),
        };
        let slope = (rng.gaussian() * 0.3, rng.gaussian() * 0.3);
        (e, slope)
    };
    let regions: Vec<_> = (0..n).map(|_| region(&mut rng)).collect();
    let (fx, fy, phase) = (1.0 + rng.uniform(), 1.0 + rng.uniform(), std::f64::consts::TAU * rng.uniform());
    let img = Image::from_fn(size, size, |col, row| {
        let (x, y) = (coord(col, size), -coord(row, size));
        let mut v = 0.25 * (1.0 + (fx * x + phase).sin() * (fy * y).cos());
        for (e, (sx, sy)) in &regions {
            if e.contains(x, y) {
                v = e.intensity + sx * (x - e.cx) + sy * (y - e.cy);
            }
        }
        v
    });
    Ok(img.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_disk_is_binary() {
        let img = gen_phantom(&PhantomSpec::new(64, vec![Ellipse::disk(0.0, 0.0, 0.5, 1.0)])).unwrap();
        assert!(img.samples().iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(img.get(0, 32, 32), 1.0);
        assert_eq!(img.get(0, 2, 2), 0.0);
    }

    #[test]
    fn disjoint_ellipses_give_three_levels() {
        let spec = PhantomSpec::new(
            64,
            vec![Ellipse::disk(-0.5, 0.0, 0.3, 0.3), Ellipse { cx: 0.5, cy: 0.2, a: 0.3, b: 0.15, angle: 0.4, intensity: 0.7 }],
        );
        let img = gen_phantom(&spec).unwrap();
        let mut levels: Vec<f64> = img.samples().to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels, vec![0.0, 0.3, 0.7]);
    }

    #[test]
    fn random_specs_are_deterministic() {
        let a = gen_phantom(&PhantomSpec::random(64, 6, 3)).unwrap();
        let b = gen_phantom(&PhantomSpec::random(64, 6, 3)).unwrap();
        let c = gen_phantom(&PhantomSpec::random(64, 6, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(piecewise_smooth(64, 5, 1).unwrap(), piecewise_smooth(64, 5, 1).unwrap());
    }

    #[test]
    fn empty_spec_and_small_sizes() {
        let img = gen_phantom(&PhantomSpec::new(32, vec![])).unwrap();
        assert!(img.samples().iter().all(|&v| v == 0.0));
        assert!(gen_phantom(&PhantomSpec::new(31, vec![])).is_err());
        assert!(piecewise_smooth(16, 3, 0).is_err());
    }

    #[test]
    fn shepp_logan_in_range() {
        let img = gen_phantom(&PhantomSpec::shepp_logan(128)).unwrap();
        let (lo, hi) = img.min_max();
        assert_eq!(lo, 0.0);
        assert!((hi - 1.0).abs() < 1e-12);
        let pw = piecewise_smooth(128, 6, 2).unwrap();
        assert_eq!(pw.min_max(), (0.0, 1.0));
    }
}
