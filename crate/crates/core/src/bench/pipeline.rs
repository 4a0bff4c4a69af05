//! Experiment pipelines: noiseless fitting, denoising, sparse-view
//! reconstruction and two-channel DPC reconstruction.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;

use super::config::Config;
use super::filters::{add_image_noise, sobel_gradients};
use super::phantom::{gen_phantom, piecewise_smooth, PhantomSpec};
use crate::dictionary::{ksvd_train, KsvdConfig, KsvdReport};
use crate::error::{Error, Result};
use crate::formats;
use crate::metrics::{q_from_ssim, ssim, SsimParams};
use crate::rng::SplitMix64;
use crate::solver::{solve, Init, SolverConfig};
use crate::tomo::{add_noise, combine_dpc, fbp, project, split_dpc, RampFilter};
use crate::{CoefficientTensor, Dictionary, ForwardOperator, Geometry, Image, Measurement, PatchGrid, Problem, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineKind {
    Fit,
    Denoise,
    Reconstruct,
    DpcReconstruct,
}

impl FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fit" => Ok(PipelineKind::Fit),
            "denoise" => Ok(PipelineKind::Denoise),
            "reconstruct" => Ok(PipelineKind::Reconstruct),
            "dpc-reconstruct" | "dpc" => Ok(PipelineKind::DpcReconstruct),
            _ => Err(Error::Config(format!(
                "unknown pipeline {s:?} (expected fit, denoise, reconstruct, dpc-reconstruct)"
            ))),
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineKind::Fit => "fit",
            PipelineKind::Denoise => "denoise",
            PipelineKind::Reconstruct => "reconstruct",
            PipelineKind::DpcReconstruct => "dpc-reconstruct",
        })
    }
}

/// Built-in synthetic images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    SheppLogan,
    /// Random ellipse inclusions in a body ellipse.
    Ellipses,
    /// Piecewise-smooth regions over a smooth background.
    PiecewiseSmooth,
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shepp-logan" => Ok(PhantomKind::SheppLogan),
            "ellipses" | "random" => Ok(PhantomKind::Ellipses),
            "piecewise" | "piecewise-smooth" => Ok(PhantomKind::PiecewiseSmooth),
            _ => Err(Error::Config(format!(
                "unknown phantom {s:?} (expected shepp-logan, ellipses, piecewise)"
            ))),
        }
    }
}

impl PhantomKind {
    /// Image of this kind with `count` random features.
    pub fn generate(self, size: usize, count: usize, seed: u64) -> Result<Image<f64>> {
        match self {
            PhantomKind::SheppLogan => gen_phantom(&PhantomSpec::shepp_logan(size)),
            PhantomKind::Ellipses => gen_phantom(&PhantomSpec::random(size, count, seed)),
            PhantomKind::PiecewiseSmooth => piecewise_smooth(size, count, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionarySettings {
    /// Load this `PDC1` file instead of training.
    pub path: Option<PathBuf>,
    /// Train on this image instead of a generated one.
    pub training_image: Option<PathBuf>,
    pub training_seed: u64,
    pub patch_size: usize,
    /// Lattice step of the reconstruction grid.
    pub step: usize,
    pub atoms: usize,
    pub max_atoms: usize,
    pub ksvd_iters: usize,
    /// Number of training patches sampled from the training image.
    pub train_patches: usize,
}

impl Default for DictionarySettings {
    fn default() -> Self {
        DictionarySettings {
            path: None,
            training_image: None,
            training_seed: 1001,
            patch_size: 7,
            step: 3,
            atoms: 100,
            max_atoms: 4,
            ksvd_iters: 20,
            train_patches: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub beta: f64,
    pub rho: f64,
    pub iters: usize,
    pub rel_tol: f64,
    pub accelerate: bool,
    pub gamma: Option<f64>,
    /// Start from a per-patch sparse fit of the baseline (FBP) image.
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { beta: 0.04, rho: 3.0, iters: 300, rel_tol: 1e-6, accelerate: true, gamma: None, warm_start: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySettings {
    pub angles: usize,
    pub detectors: Option<usize>,
    /// Sinogram noise standard deviation as a fraction of its maximum.
    pub noise_frac: f64,
    pub filter: RampFilter,
}

impl Default for GeometrySettings {
    fn default() -> Self {
        GeometrySettings { angles: 60, detectors: None, noise_frac: 0.0, filter: RampFilter::RamLak }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: PipelineKind,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub size: usize,
    /// Ground-truth image file; a phantom is generated when absent.
    pub image: Option<PathBuf>,
    pub phantom: PhantomKind,
    pub phantom_features: usize,
    /// Absolute image noise for denoising.
    pub noise_sigma: f64,
    pub dictionary: DictionarySettings,
    pub solver: SolverSettings,
    pub geometry: GeometrySettings,
}

const KEYS: &[(&str, &[&str])] = &[
    ("pipeline", &["kind", "output_dir", "seed", "size", "image", "phantom", "phantom_features", "noise_sigma"]),
    ("solver", &["beta", "rho", "iters", "rel_tol", "accelerate", "gamma", "warm_start"]),
    ("geometry", &["angles", "detectors", "noise_frac", "filter"]),
    (
        "dictionary",
        &["path", "training_image", "training_seed", "patch_size", "step", "atoms", "max_atoms", "ksvd_iters", "train_patches"],
    ),
];

impl ExperimentConfig {
    /// Defaults for a pipeline kind.
    pub fn new(kind: PipelineKind) -> Self {
        let phantom = match kind {
            PipelineKind::Fit | PipelineKind::Denoise => PhantomKind::PiecewiseSmooth,
            PipelineKind::Reconstruct | PipelineKind::DpcReconstruct => PhantomKind::Ellipses,
        };
        let solver = match kind {
            PipelineKind::Fit => SolverSettings { beta: 0.002, rho: 3.0, ..SolverSettings::default() },
            PipelineKind::Denoise => SolverSettings::default(),
            PipelineKind::Reconstruct | PipelineKind::DpcReconstruct => {
                SolverSettings { beta: 3.0, rho: 100.0, ..SolverSettings::default() }
            }
        };
        ExperimentConfig {
            kind,
            output_dir: PathBuf::from("out"),
            seed: 1,
            size: 256,
            image: None,
            phantom,
            phantom_features: match phantom {
                PhantomKind::PiecewiseSmooth => 8,
                _ => 12,
            },
            noise_sigma: 0.1,
            dictionary: DictionarySettings::default(),
            solver,
            geometry: GeometrySettings::default(),
        }
    }

    /// Reads a parsed config. Relative paths resolve against `base`.
    pub fn from_config(cfg: &Config, base: &Path) -> Result<Self> {
        cfg.check_keys(KEYS)?;
        let kind: PipelineKind = cfg
            .get("pipeline", "kind")?
            .ok_or_else(|| Error::Config("missing [pipeline] kind".into()))?;
        let mut e = ExperimentConfig::new(kind);
        let path = |sec: &str, key: &str| -> Result<Option<PathBuf>> {
            Ok(cfg.get::<PathBuf>(sec, key)?.map(|p| if p.is_absolute() { p } else { base.join(p) }))
        };
        if let Some(p) = path("pipeline", "output_dir")? {
            e.output_dir = p;
        }
        e.seed = cfg.get_or("pipeline", "seed", e.seed)?;
        e.size = cfg.get_or("pipeline", "size", e.size)?;
        e.image = path("pipeline", "image")?;
        e.phantom = cfg.get_or("pipeline", "phantom", e.phantom)?;
        e.phantom_features = cfg.get_or("pipeline", "phantom_features", e.phantom_features)?;
        e.noise_sigma = cfg.get_or("pipeline", "noise_sigma", e.noise_sigma)?;

        let s = &mut e.solver;
        s.beta = cfg.get_or("solver", "beta", s.beta)?;
        s.rho = cfg.get_or("solver", "rho", s.rho)?;
        s.iters = cfg.get_or("solver", "iters", s.iters)?;
        s.rel_tol = cfg.get_or("solver", "rel_tol", s.rel_tol)?;
        s.accelerate = cfg.get_or("solver", "accelerate", s.accelerate)?;
        s.warm_start = cfg.get_or("solver", "warm_start", s.warm_start)?;
        s.gamma = match cfg.raw("solver", "gamma") {
            None | Some("auto") => None,
            Some(_) => cfg.get("solver", "gamma")?,
        };

        let g = &mut e.geometry;
        g.angles = cfg.get_or("geometry", "angles", g.angles)?;
        g.detectors = match cfg.raw("geometry", "detectors") {
            None | Some("auto") => None,
            Some(_) => cfg.get("geometry", "detectors")?,
        };
        g.noise_frac = cfg.get_or("geometry", "noise_frac", g.noise_frac)?;
        g.filter = cfg.get_or("geometry", "filter", g.filter)?;

        e.dictionary.path = path("dictionary", "path")?;
        e.dictionary.training_image = path("dictionary", "training_image")?;
        let d = &mut e.dictionary;
        d.training_seed = cfg.get_or("dictionary", "training_seed", d.training_seed)?;
        d.patch_size = cfg.get_or("dictionary", "patch_size", d.patch_size)?;
        d.step = cfg.get_or("dictionary", "step", d.step)?;
        d.atoms = cfg.get_or("dictionary", "atoms", d.atoms)?;
        d.max_atoms = cfg.get_or("dictionary", "max_atoms", d.max_atoms)?;
        d.ksvd_iters = cfg.get_or("dictionary", "ksvd_iters", d.ksvd_iters)?;
        d.train_patches = cfg.get_or("dictionary", "train_patches", d.train_patches)?;
        Ok(e)
    }

    fn channels(&self) -> usize {
        if self.kind == PipelineKind::DpcReconstruct {
            2
        } else {
            1
        }
    }

    /// Checks parameters, files and shapes without running anything costly.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let d = &self.dictionary;
        let s = &self.solver;
        if d.patch_size == 0 || d.step == 0 || d.step > d.patch_size {
            return bad(format!("need 1 <= step <= patch_size, got step {} patch_size {}", d.step, d.patch_size));
        }
        if d.atoms == 0 || d.max_atoms == 0 || d.ksvd_iters == 0 {
            return bad("atoms, max_atoms and ksvd_iters must be positive".into());
        }
        if !(s.beta >= 0.0 && s.rho >= 0.0 && s.beta.is_finite() && s.rho.is_finite()) {
            return bad(format!("beta and rho must be finite and >= 0, got {} and {}", s.beta, s.rho));
        }
        if s.iters == 0 {
            return bad("solver iters must be positive".into());
        }
        if self.kind == PipelineKind::Denoise && !(self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if matches!(self.kind, PipelineKind::Reconstruct | PipelineKind::DpcReconstruct) {
            if self.geometry.angles < 2 {
                return bad(format!("need at least 2 angles, got {}", self.geometry.angles));
            }
            if !(self.geometry.noise_frac >= 0.0) {
                return bad(format!("noise_frac must be >= 0, got {}", self.geometry.noise_frac));
            }
        }
        for p in [&self.image, &d.path, &d.training_image].into_iter().flatten() {
            if !p.is_file() {
                return bad(format!("missing file {}", p.display()));
            }
        }
        let (w, h) = match &self.image {
            Some(p) => {
                let img: Image<f64> = formats::read_image(p)?;
                if img.channels() != 1 {
                    return bad(format!("{}: expected a scalar image, got {} channels", p.display(), img.channels()));
                }
                (img.width(), img.height())
            }
            None => {
                if self.size < 32 {
                    return bad(format!("phantom size {} below 32", self.size));
                }
                (self.size, self.size)
            }
        };
        if d.patch_size > w.min(h) {
            return bad(format!("patch_size {} exceeds image {}x{}", d.patch_size, w, h));
        }
        match &d.path {
            Some(p) => {
                let dict: Dictionary<f64> = formats::read_dictionary(p)?;
                if dict.patch_size() != d.patch_size || dict.channels() != self.channels() {
                    return bad(format!(
                        "{}: dictionary has {}x{}x{} atoms, pipeline needs {}x{}x{}",
                        p.display(),
                        dict.patch_size(),
                        dict.patch_size(),
                        dict.channels(),
                        d.patch_size,
                        d.patch_size,
                        self.channels()
                    ));
                }
            }
            None => {
                if d.train_patches < d.atoms {
                    return bad(format!("train_patches {} below atoms {}", d.train_patches, d.atoms));
                }
            }
        }
        Ok(())
    }
}

/// Patches of `img` on a lattice of step `step`, a seeded random subset of
/// at most `limit` rows.
pub fn training_patches(img: &Image<f64>, patch_size: usize, step: usize, limit: usize, seed: u64) -> Result<Array2<f64>> {
    let grid = PatchGrid::new(img.width(), img.height(), patch_size, step)?;
    let all = grid.extract_all(img)?;
    let mut idx: Vec<usize> = (0..all.nrows()).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    idx.truncate(limit.min(all.nrows()));
    idx.sort_unstable();
    Ok(all.select(ndarray::Axis(0), &idx))
}

/// K-SVD dictionary learned from patches of `img` (any channel count).
pub fn learn_dictionary(img: &Image<f64>, settings: &DictionarySettings) -> Result<(Dictionary<f64>, KsvdReport)> {
    let patches = training_patches(img, settings.patch_size, 2, settings.train_patches, settings.training_seed)?;
    let cfg = KsvdConfig {
        n_atoms: settings.atoms,
        max_atoms: settings.max_atoms,
        iters: settings.ksvd_iters,
        seed: settings.training_seed,
        ..KsvdConfig::default()
    };
    ksvd_train(&patches, settings.patch_size, img.channels(), &cfg)
}

/// Output of [`restore`].
pub struct Restoration {
    pub image: Image<f64>,
    pub coefficients: CoefficientTensor<f64>,
    pub report: SolveReport,
}

/// Minimizes the patch objective for measurement `data` under `op`.
/// `warm` seeds the coefficients with a per-patch sparse fit.
pub fn restore(
    data: &Measurement<f64>,
    op: &ForwardOperator,
    dict: &Dictionary<f64>,
    step: usize,
    settings: &SolverSettings,
    warm: Option<&Image<f64>>,
) -> Result<Restoration> {
    let (w, h) = match data {
        Measurement::Image(img) => (img.width(), img.height()),
        Measurement::Sinogram(_) => match op {
            ForwardOperator::Tomographic(g) => (g.width(), g.height()),
            ForwardOperator::Identity => return Err(Error::Shape("sinogram data needs a tomographic operator".into())),
        },
    };
    let grid = PatchGrid::new(w, h, dict.patch_size(), step)?;
    let problem = Problem::new(data, dict, &grid, op)?;
    let init = match warm {
        Some(img) => Init::WarmImage(img.clone(), 4),
        None => Init::Zero,
    };
    let cfg = SolverConfig {
        beta: settings.beta,
        rho: settings.rho,
        gamma: settings.gamma,
        max_iters: settings.iters,
        rel_tol: settings.rel_tol,
        accelerate: settings.accelerate,
        init,
        ..SolverConfig::default()
    };
    let (coefficients, report) = solve(&problem, &cfg)?;
    let image = problem.compose(&coefficients)?;
    Ok(Restoration { image, coefficients, report })
}

/// Per-channel SSIM of `img` against `truth`, each channel scored with the
/// truth channel's dynamic range (1 for constant channels).
pub fn channel_ssim(truth: &Image<f64>, img: &Image<f64>) -> Result<Vec<f64>> {
    truth.check_same_shape(img)?;
    (0..truth.channels())
        .map(|c| {
            let (t, x) = (truth.channel(c), img.channel(c));
            let (lo, hi) = t.min_max();
            let range = if hi > lo { hi - lo } else { 1.0 };
            ssim(&x, &t, &SsimParams::with_data_range(range))
        })
        .collect()
}

/// Mean of [`channel_ssim`].
pub fn score(truth: &Image<f64>, img: &Image<f64>) -> Result<f64> {
    let s = channel_ssim(truth, img)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Artifacts of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Named scalar results in a fixed order.
    pub metrics: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn to_key_values(&self) -> String {
        formats::key_values(self.metrics.iter().map(|(k, v)| (k.as_str(), format!("{v}"))))
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn image(&mut self, name: &str, img: &Image<f64>) -> Result<()> {
        let p = self.path(&format!("{name}.pif"));
        formats::write_image(p, img)?;
        for c in 0..img.channels() {
            let suffix = if img.channels() == 1 { String::new() } else { format!("_{c}") };
            let p = self.path(&format!("{name}{suffix}.pgm"));
            formats::write_pgm(p, &img.channel(c), formats::PgmDepth::Sixteen)?;
        }
        Ok(())
    }
}

fn truth_image(cfg: &ExperimentConfig) -> Result<Image<f64>> {
    match &cfg.image {
        Some(p) => Ok(formats::read_image::<f64>(p)?.normalized()),
        None => cfg.phantom.generate(cfg.size, cfg.phantom_features, cfg.seed),
    }
}

fn dictionary_for(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(Dictionary<f64>, Vec<(String, f64)>)> {
    let d = &cfg.dictionary;
    if let Some(p) = &d.path {
        return Ok((formats::read_dictionary(p)?, vec![]));
    }
    let train = match &d.training_image {
        Some(p) => formats::read_image::<f64>(p)?.normalized(),
        None => cfg.phantom.generate(cfg.size, cfg.phantom_features, d.training_seed)?,
    };
    let train = if cfg.channels() == 2 { sobel_gradients(&train)? } else { train };
    let (dict, report) = learn_dictionary(&train, d)?;
    formats::write_dictionary(out.path("dictionary.pdc"), &dict)?;
    let err = report.errors.last().copied().unwrap_or(report.initial_error);
    Ok((dict, vec![("ksvd_initial_error".into(), report.initial_error), ("ksvd_final_error".into(), err)]))
}

fn geometry_for(cfg: &ExperimentConfig, w: usize, h: usize) -> Result<Geometry> {
    let base = Geometry::new(w, h, cfg.geometry.angles)?;
    match cfg.geometry.detectors {
        None => Ok(base),
        Some(nd) => Geometry::with_angles(w, h, base.angles().to_vec(), nd, base.detector_spacing()),
    }
}

/// Runs one pipeline, writing images, the solve report, the dictionary and
/// `metrics.txt` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Writer { dir: cfg.output_dir.clone(), files: vec![] };
    let truth = truth_image(cfg)?;
    let (dict, mut metrics) = dictionary_for(cfg, &mut out)?;
    let m = |k: &str, v: f64| (k.to_string(), v);
    let step = cfg.dictionary.step;

    let report = match cfg.kind {
        PipelineKind::Fit | PipelineKind::Denoise => {
            let degraded = if cfg.kind == PipelineKind::Denoise {
                add_image_noise(&truth, cfg.noise_sigma, cfg.seed.wrapping_add(17))?
            } else {
                truth.clone()
            };
            let data = Measurement::Image(degraded.clone());
            let r = restore(&data, &ForwardOperator::Identity, &dict, step, &cfg.solver, None)?;
            out.image("truth", &truth)?;
            out.image("result", &r.image)?;
            let s_out = score(&truth, &r.image)?;
            if cfg.kind == PipelineKind::Denoise {
                out.image("noisy", &degraded)?;
                let s_in = score(&truth, &degraded)?;
                let q = q_from_ssim(s_in, s_out);
                metrics.extend([m("ssim_noisy", s_in), m("ssim", s_out), m("q", q.value)]);
            } else {
                metrics.push(m("ssim", s_out));
            }
            metrics.push(m("sparsity", r.report.final_sparsity));
            r.report
        }
        PipelineKind::Reconstruct => {
            let geom = geometry_for(cfg, truth.width(), truth.height())?;
            let clean = project(&truth, &geom)?;
            let sino = add_noise(&clean, cfg.geometry.noise_frac, cfg.seed.wrapping_add(23))?;
            formats::write_sinogram(out.path("sinogram.psn"), &sino)?;
            let baseline = fbp(&sino, &geom, cfg.geometry.filter)?;
            let warm = cfg.solver.warm_start.then_some(&baseline);
            let op = ForwardOperator::Tomographic(geom);
            let r = restore(&Measurement::Sinogram(sino), &op, &dict, step, &cfg.solver, warm)?;
            out.image("truth", &truth)?;
            out.image("fbp", &baseline)?;
            out.image("result", &r.image)?;
            let s_fbp = score(&truth, &baseline)?;
            let s_out = score(&truth, &r.image)?;
            let q = q_from_ssim(s_fbp, s_out);
            metrics.extend([m("ssim_fbp", s_fbp), m("ssim", s_out), m("q", q.value), m("sparsity", r.report.final_sparsity)]);
            r.report
        }
        PipelineKind::DpcReconstruct => {
            let grad = sobel_gradients(&truth)?;
            let geom = geometry_for(cfg, truth.width(), truth.height())?;
            let sx = project(&grad.channel(0), &geom)?;
            let sy = project(&grad.channel(1), &geom)?;
            let signal = add_noise(&combine_dpc(&sx, &sy)?, cfg.geometry.noise_frac, cfg.seed.wrapping_add(29))?;
            formats::write_sinogram(out.path("sinogram.psn"), &signal)?;
            let (px, py) = split_dpc(&signal)?;
            let fx = fbp(&px, &geom, cfg.geometry.filter)?;
            let fy = fbp(&py, &geom, cfg.geometry.filter)?;
            let baseline = Image::from_planes(&[fx, fy])?;
            let data = Measurement::Sinogram(crate::Sinogram::from_channels(&[px, py])?);
            let warm = cfg.solver.warm_start.then_some(&baseline);
            let op = ForwardOperator::Tomographic(geom);
            let r = restore(&data, &op, &dict, step, &cfg.solver, warm)?;
            out.image("truth", &grad)?;
            out.image("fbp", &baseline)?;
            out.image("result", &r.image)?;
            let s_fbp = channel_ssim(&grad, &baseline)?;
            let s_out = channel_ssim(&grad, &r.image)?;
            metrics.extend([
                m("ssim_fbp_x", s_fbp[0]),
                m("ssim_fbp_y", s_fbp[1]),
                m("ssim_x", s_out[0]),
                m("ssim_y", s_out[1]),
                m("sparsity", r.report.final_sparsity),
            ]);
            r.report
        }
    };
    metrics.extend([
        m("iterations", report.iterations as f64),
        m("objective", report.final_objective()),
    ]);
    formats::write_text(out.path("report.csv"), &report.to_csv())?;
    let outcome = Outcome { metrics, files: vec![] };
    formats::write_text(out.path("metrics.txt"), &outcome.to_key_values())?;
    Ok(Outcome { files: out.files, ..outcome })
}

/// Parses and runs a config file.
pub fn run_experiment_file(path: impl AsRef<Path>) -> Result<Outcome> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_experiment(&ExperimentConfig::from_config(&Config::parse(&text)?, base)?)
}
