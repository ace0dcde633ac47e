//! Example-based single-image super-resolution with anchored ridge regression.
//!
//! A model is trained offline from a directory of sharp images: gradient
//! features of bicubically upscaled low-resolution patches are PCA-compressed,
//! quantized by a learned dictionary of unit-norm anchors, and each anchor
//! receives a closed-form ridge regressor from its neighborhood of training
//! samples to the high-resolution residual. Upscaling an image is then one
//! nearest-anchor lookup and one matrix multiply per patch, plus overlap
//! averaging.
//!
//! On top of the plain regressor bank the crate implements the refinements
//! that stack into the combined pipeline:
//!
//! - data augmentation of the training corpus (rotations and flips),
//! - hierarchical anchor search (coarse centroids over the anchors),
//! - iterative back projection against the low-resolution input,
//! - cascaded refinement stages trained on the model's own outputs,
//! - enhanced prediction (averaging the eight symmetry transforms),
//! - an internal model trained on the input image's own cross-scale pairs,
//! - context reasoning (per-anchor regressors specialized by surrounding
//!   image content).
//!
//! The crate is deterministic end to end: one seed fixes sampling, dictionary
//! learning, and every tie-break, so identical inputs produce byte-identical
//! models and outputs.
//!
//! ```no_run
//! use anchorsr::{train_model, super_resolve, PipelineFlags, TrainConfig, Image};
//!
//! # fn main() -> anchorsr::Result<()> {
//! let corpus: Vec<Image> = vec![Image::load("train/butterfly.png")?];
//! let (model, report) = train_model(&corpus, &TrainConfig::default())?;
//! println!("trained in {:.1}s", report.seconds);
//!
//! let lr = Image::load("input.png")?;
//! let flags = PipelineFlags { enhanced: true, ..PipelineFlags::default() };
//! let hr = super_resolve(&model, &lr, &flags)?;
//! hr.save("output.png")?;
//! # Ok(())
//! # }
//! ```
//!
//! The `examples/` directory has one runnable walkthrough per capability;
//! start with `train_and_upscale`.

pub mod augment;
pub mod color;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod features;
pub mod image;
pub mod metrics;
pub mod model_io;
pub mod patches;
pub mod pipeline;
pub mod regression;
pub mod resample;
pub mod search;
pub mod synth;
pub mod training;

pub use color::LumaConvention;
pub use error::{Error, Result};
pub use eval::{evaluate_dir, EvalReport};
pub use image::{Colorspace, Image, Scale};
pub use metrics::psnr_luma;
pub use model_io::{load_model, save_model};
pub use pipeline::{sr_color, super_resolve, PipelineFlags, SRModel, SearchMode};
pub use resample::{degrade, upscale};
pub use training::{train_model, TrainConfig};
