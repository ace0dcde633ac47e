//! End-to-end model training: feature projection, pooling, dictionary
//! learning, per-anchor regression, and optional cascade stages trained on
//! the outputs of the stages before them.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::augment::augment_images;
use crate::color::{luminance, LumaConvention};
use crate::dictionary::{ksvd_train, kmeans_train, AnchorDictionary};
use crate::error::{Error, Result};
use crate::features::PCA_ENERGY;
use crate::image::{Image, Scale};
use crate::patches::{
    build_training_set, build_training_set_mid, fit_encoder, fit_encoder_mid, sample_indices,
    window_side, TrainingSet,
};
use crate::pipeline::{
    super_resolve, PipelineFlags, SRModel, SRStage, StageRegressors,
};
use crate::regression::{
    train_bank_atoms, train_bank_samples, train_bank_context, SAMPLE_NEIGHBORHOOD, CONTEXT_COUNT,
    CONTEXT_NEIGHBORHOOD, RIDGE_LAMBDA,
};

/// Dictionary learning algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictMethod {
    Ksvd,
    Kmeans,
}

impl DictMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ksvd" => Ok(DictMethod::Ksvd),
            "kmeans" => Ok(DictMethod::Kmeans),
            other => Err(Error::invalid(format!(
                "unknown dictionary method '{other}' (expected 'ksvd' or 'kmeans')"
            ))),
        }
    }
}

/// Neighborhood flavor for the per-anchor regressors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionMethod {
    /// Neighborhoods of training samples.
    SampleNeighborhoods,
    /// Neighborhoods of dictionary atoms.
    AtomNeighborhoods,
}

/// Everything a training run needs. `Default` mirrors the standard x3
/// benchmark setup.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub scale: u32,
    pub anchors: usize,
    pub samples: usize,
    pub stages: usize,
    pub augment: bool,
    pub context: bool,
    pub dict_method: DictMethod,
    pub regression: RegressionMethod,
    pub dict_samples: usize,
    pub dict_iters: usize,
    pub sparsity: usize,
    pub neighborhood: usize,
    pub lambda: f64,
    pub pca_energy: f64,
    pub pca_windows: usize,
    pub luma: LumaConvention,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            scale: 3,
            anchors: 1024,
            samples: 500_000,
            stages: 1,
            augment: true,
            context: false,
            dict_method: DictMethod::Ksvd,
            regression: RegressionMethod::SampleNeighborhoods,
            dict_samples: 50_000,
            dict_iters: 20,
            sparsity: 3,
            neighborhood: SAMPLE_NEIGHBORHOOD,
            lambda: RIDGE_LAMBDA,
            pca_energy: PCA_ENERGY,
            pca_windows: 200_000,
            luma: LumaConvention::Bt601Studio,
            seed: 0,
        }
    }
}

/// Above this anchor count the dictionary falls back to k-means regardless
/// of the configured method; K-SVD sweeps would dominate the training time.
pub const KSVD_ANCHOR_LIMIT: usize = 8192;

/// Summary of a finished training run.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub pool_sizes: Vec<usize>,
    pub encoder_dims: Vec<(usize, usize)>,
    pub dict_objective: Option<Vec<f64>>,
    pub flagged_anchors: usize,
    pub seconds: f64,
}

fn phase_seed(base: u64, phase: u64) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(phase)
}

fn pool_features_f64(pool: &TrainingSet, max: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let idx = sample_indices(pool.len(), max, &mut rng);
    let mut m = DMatrix::zeros(pool.dim, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        for (r, &v) in pool.feature(i).iter().enumerate() {
            m[(r, c)] = v as f64;
        }
    }
    m
}

fn learn_dictionary(
    pool: &TrainingSet,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(AnchorDictionary, Option<Vec<f64>>)> {
    let data = pool_features_f64(pool, cfg.dict_samples, phase_seed(seed, 1));
    let method = if cfg.anchors > KSVD_ANCHOR_LIMIT { DictMethod::Kmeans } else { cfg.dict_method };
    match method {
        DictMethod::Ksvd => {
            let (dict, report) =
                ksvd_train(&data, cfg.anchors, cfg.sparsity, cfg.dict_iters, phase_seed(seed, 2))?;
            Ok((dict, Some(report.objective)))
        }
        DictMethod::Kmeans => {
            let dict = kmeans_train(&data, cfg.anchors, cfg.dict_iters, phase_seed(seed, 2))?;
            Ok((dict, None))
        }
    }
}

fn fit_regressors(
    pool: &TrainingSet,
    dict: &AnchorDictionary,
    cfg: &TrainConfig,
    with_context: bool,
    seed: u64,
) -> Result<(StageRegressors, usize)> {
    if with_context {
        let model = train_bank_context(
            pool,
            dict,
            cfg.lambda,
            CONTEXT_NEIGHBORHOOD.min(pool.len()),
            CONTEXT_COUNT,
            phase_seed(seed, 3),
        )?;
        let flagged = model.banks.iter().map(|b| b.flagged_anchors()).sum();
        Ok((StageRegressors::Context(model), flagged))
    } else {
        let bank = match cfg.regression {
            RegressionMethod::SampleNeighborhoods => {
                train_bank_samples(pool, dict, cfg.lambda, cfg.neighborhood.min(pool.len()))?
            }
            RegressionMethod::AtomNeighborhoods => {
                train_bank_atoms(pool, dict, cfg.lambda, cfg.neighborhood, cfg.sparsity)?
            }
        };
        let flagged = bank.flagged_anchors();
        Ok((StageRegressors::Plain(bank), flagged))
    }
}

/// Extract luminance and optionally augment with the eight grid symmetries.
pub fn prepare_training_images(images: &[Image], cfg: &TrainConfig) -> Result<Vec<Image>> {
    let lumas: Vec<Image> =
        images.iter().map(|im| luminance(im, cfg.luma)).collect::<Result<_>>()?;
    Ok(if cfg.augment { augment_images(&lumas) } else { lumas })
}

/// Train the first (upscaling) stage.
fn train_stage0(lumas: &[Image], cfg: &TrainConfig, report: &mut TrainReport) -> Result<SRStage> {
    let scale = Scale::new(cfg.scale)?;
    let encoder = fit_encoder(
        lumas,
        scale,
        1,
        cfg.pca_windows,
        cfg.pca_energy,
        phase_seed(cfg.seed, 10),
    )?;
    report.encoder_dims.push((encoder.input_dim(), encoder.output_dim()));
    let pool = build_training_set(
        lumas,
        scale,
        1,
        cfg.samples,
        &encoder,
        cfg.context,
        phase_seed(cfg.seed, 11),
    )?;
    report.pool_sizes.push(pool.len());
    if pool.len() < cfg.anchors {
        return Err(Error::insufficient(format!(
            "pool of {} samples cannot support {} anchors",
            pool.len(),
            cfg.anchors
        )));
    }
    let (dict, objective) = learn_dictionary(&pool, cfg, cfg.seed)?;
    report.dict_objective = objective;
    let (regressors, flagged) = fit_regressors(&pool, &dict, cfg, cfg.context, cfg.seed)?;
    report.flagged_anchors += flagged;
    Ok(SRStage { scale, window: window_side(scale), encoder, regressors })
}

/// Train one refinement stage on interpolated/reference pairs. The stage
/// runs at scale 1 but keeps the upscaling stage's window so its features
/// see enough context to predict the remaining error.
fn train_refiner(
    pairs: &[(Image, Image)],
    model_scale: Scale,
    cfg: &TrainConfig,
    stage_index: usize,
    report: &mut TrainReport,
) -> Result<SRStage> {
    let scale = Scale::new(1)?;
    let win = window_side(model_scale);
    let seed = phase_seed(cfg.seed, 100 + stage_index as u64);
    let encoder = fit_encoder_mid(pairs, scale, win, 1, cfg.pca_windows, cfg.pca_energy, seed)?;
    report.encoder_dims.push((encoder.input_dim(), encoder.output_dim()));
    let pool = build_training_set_mid(
        pairs,
        scale,
        win,
        1,
        cfg.samples,
        &encoder,
        false,
        phase_seed(seed, 1),
    )?;
    report.pool_sizes.push(pool.len());
    if pool.len() < cfg.anchors {
        return Err(Error::insufficient(format!(
            "refiner pool of {} samples cannot support {} anchors",
            pool.len(),
            cfg.anchors
        )));
    }
    let (dict, _) = learn_dictionary(&pool, cfg, phase_seed(seed, 2))?;
    let (regressors, flagged) = fit_regressors(&pool, &dict, cfg, false, phase_seed(seed, 3))?;
    report.flagged_anchors += flagged;
    Ok(SRStage { scale, window: win, encoder, regressors })
}

/// Append `extra` refinement stages to a model. Each stage trains on the
/// outputs the current model produces for the training images, so stage t
/// corrects exactly the mistakes stages 0..t leave behind.
pub fn train_cascade(
    model: &mut SRModel,
    lumas: &[Image],
    extra: usize,
    cfg: &TrainConfig,
    report: &mut TrainReport,
) -> Result<()> {
    let scale = model.scale();
    let flags = PipelineFlags::default();
    for stage_index in 0..extra {
        let mut pairs = Vec::with_capacity(lumas.len());
        for hr in lumas {
            let cropped = hr.crop_to_multiple(scale)?;
            let lr = crate::resample::degrade(&cropped, scale)?;
            let out = super_resolve(model, &lr, &flags)?;
            pairs.push((out, cropped));
        }
        let stage = train_refiner(&pairs, scale, cfg, model.stages.len(), report)?;
        model.stages.push(stage);
        let _ = stage_index;
    }
    Ok(())
}

/// Full training run: stage 0 plus `cfg.stages - 1` cascade refiners.
pub fn train_model(images: &[Image], cfg: &TrainConfig) -> Result<(SRModel, TrainReport)> {
    if cfg.stages == 0 {
        return Err(Error::invalid("a model needs at least one stage"));
    }
    let start = Instant::now();
    let mut report = TrainReport::default();
    let lumas = prepare_training_images(images, cfg)?;
    let stage0 = train_stage0(&lumas, cfg, &mut report)?;
    let mut model = SRModel::new(cfg.luma, vec![stage0])?;
    if cfg.stages > 1 {
        train_cascade(&mut model, &lumas, cfg.stages - 1, cfg, &mut report)?;
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok((model, report))
}
