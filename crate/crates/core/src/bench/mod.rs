//! Synthetic data, degradations and experiment pipelines.

mod config;
mod filters;
mod phantom;
mod pipeline;

pub use config::Config;
pub use filters::{add_image_noise, sobel_gradients};
pub use phantom::{gen_phantom, piecewise_smooth, Ellipse, PhantomSpec};
pub use pipeline::{
    channel_ssim, learn_dictionary, restore, run_experiment, run_experiment_file, score, training_patches,
    DictionarySettings, ExperimentConfig, GeometrySettings, Outcome, PhantomKind, PipelineKind, Restoration,
    SolverSettings,
};
