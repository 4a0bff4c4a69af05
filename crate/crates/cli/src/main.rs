use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patchrecon::bench::{
    add_image_noise, learn_dictionary, restore, run_experiment, run_experiment_file, score, sobel_gradients, DictionarySettings,
    Config, ExperimentConfig, PhantomKind, PipelineKind, SolverSettings,
};
use patchrecon::formats::{self, PgmDepth};
use patchrecon::metrics::{q_from_ssim, ssim, SsimParams};
use patchrecon::tomo::{add_noise, fbp, project, split_dpc, RampFilter};
use patchrecon::{Dictionary, Error, ForwardOperator, Geometry, Image, Measurement, Result, Sinogram};

#[derive(Parser)]
#[command(name = "patchrecon", version, about = "Overlap-constrained patch dictionary denoising and tomographic reconstruction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every randomized step
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// L1 weight
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Overlap penalty weight
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Iteration budget (solver, or K-SVD for `learn`)
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// Patch lattice step
    #[arg(long, global = true)]
    step: Option<usize>,
    #[arg(long, global = true)]
    patch_size: Option<usize>,
    /// Dictionary size
    #[arg(long, global = true)]
    atoms: Option<usize>,
    /// OMP sparsity limit
    #[arg(long, global = true)]
    max_atoms: Option<usize>,
    /// FISTA (true) or plain ISTA (false)
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    accelerate: Option<bool>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn out(&self, name: &str) -> Result<PathBuf> {
        let dir = self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir.join(name))
    }

    fn solver(&self, defaults: SolverSettings) -> SolverSettings {
        SolverSettings {
            beta: self.beta.unwrap_or(defaults.beta),
            rho: self.rho.unwrap_or(defaults.rho),
            iters: self.iters.unwrap_or(defaults.iters),
            accelerate: self.accelerate.unwrap_or(defaults.accelerate),
            ..defaults
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic image
    Phantom {
        /// shepp-logan, ellipses or piecewise
        #[arg(long, default_value = "shepp-logan")]
        kind: String,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Number of random features
        #[arg(long, default_value_t = 12)]
        features: usize,
        #[arg(long, default_value = "phantom")]
        name: String,
    },
    /// Train a K-SVD dictionary on an image
    Learn {
        #[arg(long)]
        input: PathBuf,
        /// Train two-channel atoms on the image's Sobel gradients
        #[arg(long)]
        gradient: bool,
        #[arg(long, default_value_t = 4000)]
        train_patches: usize,
        #[arg(long, default_value = "dictionary")]
        name: String,
    },
    /// Sparse fit of a clean image
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dict: PathBuf,
    },
    /// Denoise an image
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        /// Reference image for SSIM and Q
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Add gaussian noise of this absolute sigma to the input first
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Parallel-beam projection of an image
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 60)]
        angles: usize,
        #[arg(long)]
        detectors: Option<usize>,
        /// Gaussian noise sigma as a fraction of the sinogram maximum
        #[arg(long, default_value_t = 0.0)]
        noise_frac: f64,
        #[arg(long, default_value = "sinogram")]
        name: String,
    },
    /// Filtered backprojection of a sinogram
    Fbp {
        #[arg(long)]
        input: PathBuf,
        /// Image side; inferred from the detector count when omitted
        #[arg(long)]
        size: Option<usize>,
        /// ramlak or hann
        #[arg(long, default_value = "ramlak")]
        filter: String,
        #[arg(long, default_value = "fbp")]
        name: String,
    },
    /// Patch-regularized reconstruction from a sinogram
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        /// Start from zero instead of the FBP fit
        #[arg(long)]
        no_warm_start: bool,
        #[arg(long, default_value = "ramlak")]
        filter: String,
        /// Reference image for SSIM and Q against FBP
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Split a DPC sinogram into cos- and sin-weighted parts
    DpcSplit {
        #[arg(long)]
        input: PathBuf,
        /// Also combine the parts into one two-channel sinogram
        #[arg(long)]
        joint: bool,
    },
    /// SSIM of an image against a reference, and Q when a degraded image is given
    Metrics {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        degraded: Option<PathBuf>,
        #[arg(long)]
        data_range: Option<f64>,
    },
    /// Run a config-driven experiment
    Run { config: PathBuf },
}

type Lines = Vec<(String, String)>;

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn write_image(common: &Common, name: &str, img: &Image<f64>, lines: &mut Lines) -> Result<()> {
    let path = common.out(&format!("{name}.pif"))?;
    formats::write_image(&path, img)?;
    lines.push(kv("wrote", path.display()));
    if img.channels() == 1 {
        let pgm = common.out(&format!("{name}.pgm"))?;
        formats::write_pgm(&pgm, img, PgmDepth::Sixteen)?;
        lines.push(kv("wrote", pgm.display()));
    }
    Ok(())
}

fn write_report(common: &Common, report: &patchrecon::SolveReport, lines: &mut Lines) -> Result<()> {
    let path = common.out("report.csv")?;
    formats::write_text(&path, &report.to_csv())?;
    lines.push(kv("wrote", path.display()));
    lines.push(kv("iterations", report.iterations));
    lines.push(kv("objective", report.final_objective()));
    lines.push(kv("sparsity", report.final_sparsity));
    Ok(())
}

fn load_dictionary(path: &Path, common: &Common) -> Result<Dictionary<f64>> {
    let dict: Dictionary<f64> = formats::read_dictionary(path)?;
    if let Some(m) = common.patch_size {
        if m != dict.patch_size() {
            return Err(Error::Parameter(format!(
                "--patch-size {m} disagrees with dictionary patch size {}",
                dict.patch_size()
            )));
        }
    }
    Ok(dict)
}

/// Square image side whose default geometry has `nd` detector bins.
fn infer_size(nd: usize) -> Result<usize> {
    (1..=nd)
        .rev()
        .find(|&n| Geometry::new(n, n, 1).map(|g| g.n_detectors() == nd).unwrap_or(false))
        .ok_or_else(|| Error::Parameter(format!("cannot infer image size from {nd} detectors; pass --size")))
}

fn sinogram_geometry(sino: &Sinogram<f64>, size: Option<usize>) -> Result<Geometry> {
    let n = match size {
        Some(n) => n,
        None => infer_size(sino.n_detectors())?,
    };
    Geometry::with_angles(n, n, sino.angles().to_vec(), sino.n_detectors(), 1.0)
}

fn filter(name: &str) -> Result<RampFilter> {
    name.parse()
}

fn execute(cli: &Cli) -> Result<Lines> {
    let c = &cli.common;
    let mut lines = Lines::new();
    let seed = c.seed.unwrap_or(1);
    let step = c.step.unwrap_or(3);
    match &cli.command {
        Command::Phantom { kind, size, features, name } => {
            let img = kind.parse::<PhantomKind>()?.generate(*size, *features, seed)?;
            write_image(c, name, &img, &mut lines)?;
        }
        Command::Learn { input, gradient, train_patches, name } => {
            let img: Image<f64> = formats::read_image(input)?;
            let img = if *gradient { sobel_gradients(&img)? } else { img };
            let d = DictionarySettings::default();
            let settings = DictionarySettings {
                patch_size: c.patch_size.unwrap_or(d.patch_size),
                atoms: c.atoms.unwrap_or(d.atoms),
                max_atoms: c.max_atoms.unwrap_or(d.max_atoms),
                ksvd_iters: c.iters.unwrap_or(d.ksvd_iters),
                training_seed: seed,
                train_patches: *train_patches,
                ..d
            };
            let (dict, report) = learn_dictionary(&img, &settings)?;
            let path = c.out(&format!("{name}.pdc"))?;
            formats::write_dictionary(&path, &dict)?;
            lines.push(kv("wrote", path.display()));
            lines.push(kv("initial_error", report.initial_error));
            lines.push(kv("final_error", report.errors.last().copied().unwrap_or(report.initial_error)));
            lines.push(kv("reinitialized", report.reinitialized));
        }
        Command::Fit { input, dict } => {
            let img: Image<f64> = formats::read_image(input)?;
            let dict = load_dictionary(dict, c)?;
            let settings = c.solver(SolverSettings { beta: 0.002, ..SolverSettings::default() });
            let r = restore(&Measurement::Image(img.clone()), &ForwardOperator::Identity, &dict, step, &settings, None)?;
            write_image(c, "fit", &r.image, &mut lines)?;
            write_report(c, &r.report, &mut lines)?;
            lines.push(kv("ssim", score(&img, &r.image)?));
        }
        Command::Denoise { input, dict, truth, noise } => {
            let mut img: Image<f64> = formats::read_image(input)?;
            if let Some(sigma) = noise {
                img = add_image_noise(&img, *sigma, seed)?;
                write_image(c, "noisy", &img, &mut lines)?;
            }
            let dict = load_dictionary(dict, c)?;
            let truth: Option<Image<f64>> = truth.as_ref().map(formats::read_image).transpose()?;
            if let Some(t) = &truth {
                t.check_same_shape(&img)?;
            }
            let settings = c.solver(SolverSettings::default());
            let r = restore(&Measurement::Image(img.clone()), &ForwardOperator::Identity, &dict, step, &settings, None)?;
            write_image(c, "denoised", &r.image, &mut lines)?;
            write_report(c, &r.report, &mut lines)?;
            if let Some(t) = &truth {
                let (s_in, s_out) = (score(t, &img)?, score(t, &r.image)?);
                lines.push(kv("ssim_noisy", s_in));
                lines.push(kv("ssim", s_out));
                lines.push(kv("q", q_from_ssim(s_in, s_out).value));
            }
        }
        Command::Project { input, angles, detectors, noise_frac, name } => {
            let img: Image<f64> = formats::read_image(input)?;
            let base = Geometry::new(img.width(), img.height(), *angles)?;
            let geom = match detectors {
                Some(nd) => Geometry::with_angles(img.width(), img.height(), base.angles().to_vec(), *nd, 1.0)?,
                None => base,
            };
            let sino = add_noise(&project(&img, &geom)?, *noise_frac, seed)?;
            let path = c.out(&format!("{name}.psn"))?;
            formats::write_sinogram(&path, &sino)?;
            lines.push(kv("wrote", path.display()));
            lines.push(kv("angles", geom.n_angles()));
            lines.push(kv("detectors", geom.n_detectors()));
        }
        Command::Fbp { input, size, filter: f, name } => {
            let sino: Sinogram<f64> = formats::read_sinogram(input)?;
            let geom = sinogram_geometry(&sino, *size)?;
            let f = filter(f)?;
            let planes = (0..sino.channels()).map(|ch| fbp(&sino.channel(ch), &geom, f)).collect::<Result<Vec<_>>>()?;
            write_image(c, name, &Image::from_planes(&planes)?, &mut lines)?;
        }
        Command::Reconstruct { input, dict, size, no_warm_start, filter: f, truth } => {
            let sino: Sinogram<f64> = formats::read_sinogram(input)?;
            let geom = sinogram_geometry(&sino, *size)?;
            let dict = load_dictionary(dict, c)?;
            if dict.channels() != sino.channels() {
                return Err(Error::Shape(format!(
                    "dictionary has {} channels, sinogram has {}",
                    dict.channels(),
                    sino.channels()
                )));
            }
            let truth: Option<Image<f64>> = truth.as_ref().map(formats::read_image).transpose()?;
            if let Some(t) = &truth {
                if t.width() != geom.width() || t.height() != geom.height() || t.channels() != sino.channels() {
                    return Err(Error::Shape("truth image does not match the reconstruction".into()));
                }
            }
            let f = filter(f)?;
            let planes = (0..sino.channels()).map(|ch| fbp(&sino.channel(ch), &geom, f)).collect::<Result<Vec<_>>>()?;
            let baseline = Image::from_planes(&planes)?;
            let settings = c.solver(ExperimentConfig::new(PipelineKind::Reconstruct).solver);
            let warm = (!no_warm_start).then_some(&baseline);
            let op = ForwardOperator::Tomographic(geom);
            let r = restore(&Measurement::Sinogram(sino), &op, &dict, step, &settings, warm)?;
            write_image(c, "fbp", &baseline, &mut lines)?;
            write_image(c, "reconstruction", &r.image, &mut lines)?;
            write_report(c, &r.report, &mut lines)?;
            if let Some(t) = &truth {
                let (s_fbp, s_out) = (score(t, &baseline)?, score(t, &r.image)?);
                lines.push(kv("ssim_fbp", s_fbp));
                lines.push(kv("ssim", s_out));
                lines.push(kv("q", q_from_ssim(s_fbp, s_out).value));
            }
        }
        Command::DpcSplit { input, joint } => {
            let sino: Sinogram<f64> = formats::read_sinogram(input)?;
            let (x, y) = split_dpc(&sino)?;
            for (name, part) in [("sinogram_x", &x), ("sinogram_y", &y)] {
                let path = c.out(&format!("{name}.psn"))?;
                formats::write_sinogram(&path, part)?;
                lines.push(kv("wrote", path.display()));
            }
            if *joint {
                let path = c.out("sinogram_xy.psn")?;
                formats::write_sinogram(&path, &Sinogram::from_channels(&[x, y])?)?;
                lines.push(kv("wrote", path.display()));
            }
        }
        Command::Metrics { truth, image, degraded, data_range } => {
            let t: Image<f64> = formats::read_image(truth)?;
            let img: Image<f64> = formats::read_image(image)?;
            let measure = |x: &Image<f64>| -> Result<f64> {
                match data_range {
                    Some(r) => ssim(x, &t, &SsimParams::with_data_range(*r)),
                    None => score(&t, x),
                }
            };
            let s = measure(&img)?;
            lines.push(kv("ssim", s));
            if let Some(d) = degraded {
                let sd = measure(&formats::read_image(d)?)?;
                let q = q_from_ssim(sd, s);
                lines.push(kv("ssim_degraded", sd));
                lines.push(kv("q", q.value));
                lines.push(kv("q_capped", q.capped));
            }
        }
        Command::Run { config } => {
            let tuned = [c.seed.is_some(), c.beta.is_some(), c.rho.is_some(), c.iters.is_some(), c.step.is_some()];
            let dict = [c.patch_size.is_some(), c.atoms.is_some(), c.max_atoms.is_some(), c.accelerate.is_some()];
            if tuned.iter().chain(&dict).any(|&b| b) {
                return Err(Error::Config(
                    "run takes its parameters from the config file; only --output-dir may be given".into(),
                ));
            }
            let out = match &c.output_dir {
                None => run_experiment_file(config)?,
                Some(dir) => {
                    let text = std::fs::read_to_string(config)
                        .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
                    let base = config.parent().unwrap_or(Path::new("."));
                    let mut exp = ExperimentConfig::from_config(&Config::parse(&text)?, base)?;
                    exp.output_dir = dir.clone();
                    run_experiment(&exp)?
                }
            };
            for p in &out.files {
                lines.push(kv("wrote", p.display()));
            }
            for (k, v) in &out.metrics {
                lines.push(kv(k, v));
            }
        }
    }
    Ok(lines)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").replace('"', "'")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("error kind=usage message=\"{}\"", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for (k, v) in lines {
                println!("{k}={v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error kind={} message=\"{}\"", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
