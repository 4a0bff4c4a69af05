//! Geometry of (possibly overlapping) square patches covering an image, and
//! the maps between coefficient space and image space.
//!
//! Each pixel belongs to the *core* of exactly one patch: among the patches
//! containing it, the one whose center is nearest in L1 distance (lowest
//! patch index on ties). The composed image takes every pixel from its core
//! patch only.

use ndarray::Array2;

use crate::coeffs::CoefficientTensor;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Top-left corner of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchOrigin {
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    width: usize,
    height: usize,
    patch_size: usize,
    step: usize,
    xs: Vec<usize>,
    ys: Vec<usize>,
    origins: Vec<PatchOrigin>,
    core_map: Vec<u32>,
    overlap_count: Vec<u32>,
}

/// Origins along one axis: multiples of `step` while the patch fits, plus a
/// flush patch at `dim - m` if the lattice leaves the far edge uncovered.
fn axis_origins(dim: usize, m: usize, step: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..).map(|i| i * step).take_while(|&o| o + m <= dim).collect();
    let last = *out.last().expect("m <= dim");
    if last + m < dim {
        out.push(dim - m);
    }
    out
}

/// For every coordinate along an axis, the index of the nearest containing
/// patch center (lowest index on ties).
fn axis_core(dim: usize, m: usize, origins: &[usize]) -> Vec<usize> {
    let half = m / 2;
    (0..dim)
        .map(|v| {
            let mut best = usize::MAX;
            let mut best_d = usize::MAX;
            for (a, &o) in origins.iter().enumerate() {
                if v < o || v >= o + m {
                    continue;
                }
                let d = v.abs_diff(o + half);
                if d < best_d {
                    best_d = d;
                    best = a;
                }
            }
            best
        })
        .collect()
}

fn axis_counts(dim: usize, m: usize, origins: &[usize]) -> Vec<u32> {
    let mut c = vec![0u32; dim];
    for &o in origins {
        for v in &mut c[o..o + m] {
            *v += 1;
        }
    }
    c
}

impl PatchGrid {
    /// Lattice of `m x m` patches at multiples of `step` in both axes.
    ///
    /// Patches are numbered row-major over the origin lattice
    /// (`p = iy * nx + ix`).
    pub fn new(width: usize, height: usize, patch_size: usize, step: usize) -> Result<Self> {
        let m = patch_size;
        if m == 0 || m > width.min(height) {
            return Err(Error::Geometry(format!(
                "patch size {m} does not fit a {width}x{height} image"
            )));
        }
        if step == 0 || step > m {
            return Err(Error::Geometry(format!("step {step} must be in 1..={m}")));
        }
        let xs = axis_origins(width, m, step);
        let ys = axis_origins(height, m, step);
        let origins = ys.iter().flat_map(|&y| xs.iter().map(move |&x| PatchOrigin { x, y })).collect();

        let core_x = axis_core(width, m, &xs);
        let core_y = axis_core(height, m, &ys);
        let count_x = axis_counts(width, m, &xs);
        let count_y = axis_counts(height, m, &ys);
        let nx = xs.len();
        let mut core_map = Vec::with_capacity(width * height);
        let mut overlap_count = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                core_map.push((core_y[row] * nx + core_x[col]) as u32);
                overlap_count.push(count_y[row] * count_x[col]);
            }
        }
        Ok(Self { width, height, patch_size: m, step, xs, ys, origins, core_map, overlap_count })
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
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    #[inline]
    pub fn step(&self) -> usize {
        self.step
    }

    #[inline]
    pub fn n_patches(&self) -> usize {
        self.origins.len()
    }

    pub fn origins(&self) -> &[PatchOrigin] {
        &self.origins
    }

    pub fn origin(&self, p: usize) -> PatchOrigin {
        self.origins[p]
    }

    /// Patch center `origin + floor(m/2)` per axis.
    pub fn center(&self, p: usize) -> (usize, usize) {
        let o = self.origins[p];
        (o.x + self.patch_size / 2, o.y + self.patch_size / 2)
    }

    /// Distinct origin coordinates along x and y.
    pub fn axis_origins(&self) -> (&[usize], &[usize]) {
        (&self.xs, &self.ys)
    }

    /// Per-pixel core patch index, row-major.
    pub fn core_map(&self) -> &[u32] {
        &self.core_map
    }

    /// Per-pixel number of covering patches, row-major.
    pub fn overlap_count(&self) -> &[u32] {
        &self.overlap_count
    }

    #[inline]
    pub fn core_patch(&self, col: usize, row: usize) -> usize {
        self.core_map[row * self.width + col] as usize
    }

    pub fn contains(&self, p: usize, col: usize, row: usize) -> bool {
        let o = self.origins[p];
        let m = self.patch_size;
        col >= o.x && col < o.x + m && row >= o.y && row < o.y + m
    }

    fn check_patch(&self, p: usize) -> Result<()> {
        if p >= self.n_patches() {
            return Err(Error::Index { index: p, len: self.n_patches() });
        }
        Ok(())
    }

    pub fn check_image<T: Real>(&self, img: &Image<T>) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::Shape(format!(
                "image is {}x{}, grid is {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    pub fn check_dictionary<T: Real>(&self, dict: &Dictionary<T>) -> Result<()> {
        if dict.patch_size() != self.patch_size {
            return Err(Error::Shape(format!(
                "dictionary patch size {} vs grid patch size {}",
                dict.patch_size(),
                self.patch_size
            )));
        }
        Ok(())
    }

    /// Window of `img` at patch `p`, channel-planar and row-major.
    pub fn extract_patch<T: Real>(&self, img: &Image<T>, p: usize) -> Result<Vec<T>> {
        self.check_patch(p)?;
        self.check_image(img)?;
        let mut out = vec![T::zero(); self.patch_size * self.patch_size * img.channels()];
        self.extract_into(img, p, &mut out);
        Ok(out)
    }

    pub(crate) fn extract_into<T: Real>(&self, img: &Image<T>, p: usize, out: &mut [T]) {
        let m = self.patch_size;
        let o = self.origins[p];
        let w = self.width;
        for c in 0..img.channels() {
            let plane = img.plane(c);
            for r in 0..m {
                let src = (o.y + r) * w + o.x;
                let dst = c * m * m + r * m;
                out[dst..dst + m].copy_from_slice(&plane[src..src + m]);
            }
        }
    }

    /// Overwrites the window of patch `p` in `img` with `block`.
    pub fn write_patch<T: Real>(&self, img: &mut Image<T>, p: usize, block: &[T]) -> Result<()> {
        self.check_patch(p)?;
        self.check_image(img)?;
        let m = self.patch_size;
        if block.len() != m * m * img.channels() {
            return Err(Error::Shape(format!("block has {} samples, expected {}", block.len(), m * m * img.channels())));
        }
        let o = self.origins[p];
        let w = self.width;
        for c in 0..img.channels() {
            let plane = img.plane_mut(c);
            for r in 0..m {
                let dst = (o.y + r) * w + o.x;
                let src = c * m * m + r * m;
                plane[dst..dst + m].copy_from_slice(&block[src..src + m]);
            }
        }
        Ok(())
    }

    /// All patches of `img` as rows of a `P x (m*m*C)` matrix.
    pub fn extract_all<T: Real>(&self, img: &Image<T>) -> Result<Array2<T>> {
        self.check_image(img)?;
        let n = self.patch_size * self.patch_size * img.channels();
        let mut out = Array2::zeros((self.n_patches(), n));
        for (p, mut row) in out.outer_iter_mut().enumerate() {
            self.extract_into(img, p, row.as_slice_mut().unwrap());
        }
        Ok(out)
    }

    /// Per-patch 0/1 masks of the core region, as rows of `P x (m*m)`.
    pub fn core_masks(&self) -> Array2<bool> {
        let m = self.patch_size;
        let mut out = Array2::from_elem((self.n_patches(), m * m), false);
        for row in 0..self.height {
            for col in 0..self.width {
                let p = self.core_patch(col, row);
                let o = self.origins[p];
                out[[p, (row - o.y) * m + (col - o.x)]] = true;
            }
        }
        out
    }

    /// Scatters per-patch blocks back into an image by core membership.
    /// `rendered` holds one block per patch (`P x (m*m*C)`).
    pub fn compose_rendered<T: Real>(&self, rendered: &Array2<T>, channels: usize) -> Result<Image<T>> {
        let m = self.patch_size;
        if rendered.nrows() != self.n_patches() || rendered.ncols() != m * m * channels {
            return Err(Error::Shape(format!(
                "rendered blocks are {}x{}, expected {}x{}",
                rendered.nrows(),
                rendered.ncols(),
                self.n_patches(),
                m * m * channels
            )));
        }
        let blocks = rendered.as_standard_layout();
        let blocks = blocks.as_slice().unwrap();
        let n = m * m * channels;
        let mut img = Image::zeros(self.width, self.height, channels);
        let plane_len = self.width * self.height;
        let data = img.samples_mut();
        for row in 0..self.height {
            for col in 0..self.width {
                let pix = row * self.width + col;
                let p = self.core_map[pix] as usize;
                let o = self.origins[p];
                let local = (row - o.y) * m + (col - o.x);
                for c in 0..channels {
                    data[c * plane_len + pix] = blocks[p * n + c * m * m + local];
                }
            }
        }
        Ok(img)
    }
}

fn check_coeffs<T: Real>(w: &CoefficientTensor<T>, dict: &Dictionary<T>, n_patches: usize) -> Result<()> {
    w.check_shape(n_patches, dict.n_atoms())
}

/// Dense block `sum_k w[p,k] * atom_k` for patch `p`.
pub fn render_patch<T: Real>(w: &CoefficientTensor<T>, dict: &Dictionary<T>, p: usize) -> Result<Vec<T>> {
    if w.n_atoms() != dict.n_atoms() {
        return Err(Error::Shape(format!("{} coefficients per patch vs {} atoms", w.n_atoms(), dict.n_atoms())));
    }
    if p >= w.n_patches() {
        return Err(Error::Index { index: p, len: w.n_patches() });
    }
    let mut out = vec![T::zero(); dict.signal_len()];
    for k in 0..dict.n_atoms() {
        let c = w.get(p, k);
        if c == T::zero() {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(dict.atom(k)) {
            *o = *o + c * a;
        }
    }
    Ok(out)
}

/// Renders every patch at once: `W * Phi`, shape `P x (m*m*C)`.
pub fn render_all<T: Real>(w: &CoefficientTensor<T>, dict: &Dictionary<T>) -> Result<Array2<T>> {
    if w.n_atoms() != dict.n_atoms() {
        return Err(Error::Shape(format!("{} coefficients per patch vs {} atoms", w.n_atoms(), dict.n_atoms())));
    }
    Ok(w.values().dot(dict.atoms()))
}

/// Image composed from the core region of every patch. Each patch is
/// rendered exactly as [`render_patch`] renders it.
pub fn compose_core<T: Real>(w: &CoefficientTensor<T>, dict: &Dictionary<T>, grid: &PatchGrid) -> Result<Image<T>> {
    grid.check_dictionary(dict)?;
    check_coeffs(w, dict, grid.n_patches())?;
    let mut rendered = Array2::zeros((grid.n_patches(), dict.signal_len()));
    for (p, mut row) in rendered.outer_iter_mut().enumerate() {
        row.assign(&ndarray::ArrayView1::from(&render_patch(w, dict, p)?));
    }
    grid.compose_rendered(&rendered, dict.channels())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_fold_overlap() {
        let g = PatchGrid::new(13, 13, 7, 3).unwrap();
        assert_eq!(g.n_patches(), 9);
        assert_eq!(g.axis_origins().0, &[0, 3, 6]);
        assert_eq!(g.overlap_count()[6 * 13 + 6], 9);
    }

    #[test]
    fn non_overlapping_tiling() {
        let g = PatchGrid::new(14, 14, 7, 7).unwrap();
        assert_eq!(g.n_patches(), 4);
        assert!(g.overlap_count().iter().all(|&c| c == 1));
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let g = PatchGrid::new(11, 7, 7, 4).unwrap();
        assert_eq!(g.axis_origins().0, &[0, 4]);
        assert_eq!(g.center(0).0.abs_diff(5), 2);
        assert_eq!(g.center(1).0.abs_diff(5), 2);
        assert_eq!(g.core_patch(5, 3), 0);
        assert_eq!(g.core_patch(6, 3), 1);
    }

    #[test]
    fn flush_patch_added() {
        let g = PatchGrid::new(10, 8, 4, 3).unwrap();
        assert_eq!(g.axis_origins().0, &[0, 3, 6]);
        assert_eq!(g.axis_origins().1, &[0, 3, 4]);
    }

    #[test]
    fn even_patch_core_stays_inside_its_patch() {
        let g = PatchGrid::new(8, 8, 4, 4).unwrap();
        for row in 0..8 {
            for col in 0..8 {
                assert!(g.contains(g.core_patch(col, row), col, row));
            }
        }
    }

    #[test]
    fn rejects_degenerate() {
        assert!(PatchGrid::new(5, 10, 7, 3).is_err());
        assert!(PatchGrid::new(10, 10, 7, 0).is_err());
        assert!(PatchGrid::new(10, 10, 7, 8).is_err());
        assert!(PatchGrid::new(10, 10, 0, 1).is_err());
    }

    #[test]
    fn extract_constant_and_ramp() {
        let g = PatchGrid::new(13, 13, 7, 3).unwrap();
        let img = Image::<f64>::filled(13, 13, 1, 0.25);
        assert!(g.extract_patch(&img, 4).unwrap().iter().all(|&v| v == 0.25));
        let ramp = Image::<f64>::from_fn(13, 13, |_, row| row as f64);
        let p = 5;
        let o = g.origin(p);
        let block = g.extract_patch(&ramp, p).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                assert_eq!(block[r * 7 + c], (o.y + r) as f64);
            }
        }
        assert!(g.extract_patch(&img, 9).is_err());
    }

    #[test]
    fn extract_write_round_trip() {
        let g = PatchGrid::new(10, 9, 4, 2).unwrap();
        let img = Image::<f64>::from_fn(10, 9, |c, r| (c * 31 + r * 7) as f64);
        let mut copy = img.clone();
        for p in 0..g.n_patches() {
            let b = g.extract_patch(&img, p).unwrap();
            g.write_patch(&mut copy, p, &b).unwrap();
        }
        assert_eq!(copy, img);
    }

    #[test]
    fn compose_constant_partition_of_unity() {
        let g = PatchGrid::new(16, 12, 4, 2).unwrap();
        let d = Dictionary::<f64>::dct(4, 1).unwrap();
        let mut w = CoefficientTensor::zeros(g.n_patches(), d.n_atoms());
        // DC atom is 1/4 everywhere on a 4x4 patch
        for p in 0..g.n_patches() {
            w.set(p, 0, 3.0 * 4.0);
        }
        let x = compose_core(&w, &d, &g).unwrap();
        assert!(x.samples().iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn render_single_atom() {
        let d = Dictionary::<f64>::dct(3, 1).unwrap();
        let mut w = CoefficientTensor::zeros(2, d.n_atoms());
        assert!(render_patch(&w, &d, 1).unwrap().iter().all(|&v| v == 0.0));
        w.set(1, 4, 1.0);
        assert_eq!(render_patch(&w, &d, 1).unwrap(), d.atom(4));
        assert!(render_patch(&w, &d, 2).is_err());
    }
}
