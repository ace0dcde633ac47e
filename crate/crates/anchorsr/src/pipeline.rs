//! The super-resolution pipeline: per-stage residual prediction with
//! overlap averaging, plus the optional refinements that wrap it (symmetry
//! averaging, iterative back projection, cascaded stages, and an internal
//! model trained on the input image itself).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::augment::Transform;
use crate::color::LumaConvention;
use crate::dictionary::kmeans_train;
use crate::error::{Error, Result};
use crate::features::{filter_responses, FeatureEncoder, FILTER_COUNT, PCA_ENERGY};
use crate::image::{Colorspace, Image, Scale};
use crate::metrics::rmse;
use crate::patches::{
    build_training_set, fit_encoder, gather_window, window_grid, window_side, WindowGrid,
};
use crate::regression::{train_bank_samples, ContextModel, RegressorBank, RIDGE_LAMBDA};
use crate::resample::{bicubic_resize, degrade, upscale};
use crate::search::{linear_lookup_batch, HierIndex, HIER_BRANCH};

/// Iteration cap for back projection.
pub const BACK_PROJECT_ITERS: usize = 20;

/// Back projection stops once the reconstruction error falls below this.
pub const BACK_PROJECT_TOL: f64 = 1e-4;

/// Anchor count for the model trained on the input image itself.
pub const INTERNAL_ANCHORS: usize = 256;

/// Neighborhood size for the internal model.
pub const INTERNAL_NEIGHBORHOOD: usize = 512;

/// Blend weight of the internal prediction against the external one.
pub const INTERNAL_BLEND: f64 = 0.5;

/// Seed for auxiliary structures built during inference.
const PIPELINE_SEED: u64 = 17;

/// Windows processed per prediction batch.
const WINDOW_CHUNK: usize = 2048;

/// How anchors are matched at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Linear,
    Hierarchical,
}

/// Optional refinements applied around the trained stages.
#[derive(Debug, Clone, Copy)]
pub struct PipelineFlags {
    /// Average the eight symmetry-transformed predictions.
    pub enhanced: bool,
    /// Iterative back projection after the final stage.
    pub back_project: bool,
    /// Train a small model on the input image and blend it in.
    pub internal: bool,
    pub search: SearchMode,
}

impl Default for PipelineFlags {
    fn default() -> Self {
        PipelineFlags {
            enhanced: false,
            back_project: false,
            internal: false,
            search: SearchMode::Linear,
        }
    }
}

/// Regressors of one stage: one bank, or one bank per context cell.
#[derive(Debug, Clone, PartialEq)]
pub enum StageRegressors {
    Plain(RegressorBank),
    Context(ContextModel),
}

impl StageRegressors {
    pub fn primary_bank(&self) -> &RegressorBank {
        match self {
            StageRegressors::Plain(b) => b,
            StageRegressors::Context(m) => &m.banks[0],
        }
    }
}

/// One trained stage: a feature projection and anchored regressors that map
/// windows of an interpolated image to high-resolution residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SRStage {
    pub scale: Scale,
    /// Window side in pixels. Refinement stages run at scale 1 but keep the
    /// receptive field of the stage whose output they correct.
    pub window: usize,
    pub encoder: FeatureEncoder,
    pub regressors: StageRegressors,
}

impl SRStage {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn stride(&self) -> usize {
        self.scale.factor()
    }
}

/// A trained model: the first stage performs the upscale, later stages
/// refine at the target resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SRModel {
    pub luma: LumaConvention,
    pub stages: Vec<SRStage>,
}

impl SRModel {
    pub fn new(luma: LumaConvention, stages: Vec<SRStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("a model needs at least one stage"));
        }
        for (t, stage) in stages.iter().enumerate() {
            if t > 0 && stage.scale.factor() != 1 {
                return Err(Error::invalid(format!(
                    "stage {t} must run at the target resolution (scale 1)"
                )));
            }
            let raw = crate::features::FILTER_COUNT * stage.window * stage.window;
            if stage.encoder.input_dim() != raw {
                return Err(Error::mismatch(format!(
                    "stage {t} encoder expects {} inputs but its {}px window yields {raw}",
                    stage.encoder.input_dim(),
                    stage.window
                )));
            }
        }
        Ok(SRModel { luma, stages })
    }

    /// Overall upscaling factor.
    pub fn scale(&self) -> Scale {
        self.stages[0].scale
    }
}

/// Interpolated stage input with precomputed responses and window grid.
struct StageInput {
    width: usize,
    win: usize,
    responses: [Vec<f64>; FILTER_COUNT],
    ctx_responses: Option<[Vec<f64>; FILTER_COUNT]>,
    grid: WindowGrid,
}

impl StageInput {
    fn new(stage: &SRStage, mid: &Image, with_context: bool) -> Result<Self> {
        let win = stage.window();
        let grid = window_grid(mid.width(), mid.height(), win, stage.stride())?;
        let ctx_responses = if with_context {
            let ctx = upscale(&degrade(mid, stage.scale)?, stage.scale)?;
            Some(filter_responses(&ctx))
        } else {
            None
        };
        Ok(StageInput {
            width: mid.width(),
            win,
            responses: filter_responses(mid),
            ctx_responses,
            grid,
        })
    }

    fn raw_dim(&self) -> usize {
        FILTER_COUNT * self.win * self.win
    }

    fn gather_batch(
        &self,
        planes: &[Vec<f64>],
        range: std::ops::Range<usize>,
        dim: usize,
    ) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, range.len());
        let mut buf = vec![0.0; dim];
        for (c, idx) in range.enumerate() {
            gather_window(planes, self.width, self.grid.origin(idx), self.win, &mut buf);
            m.column_mut(c).copy_from_slice(&buf);
        }
        m
    }
}

/// Overlap-averaging residual canvas.
struct ResidualAccumulator {
    w: usize,
    h: usize,
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl ResidualAccumulator {
    fn new(w: usize, h: usize) -> Self {
        ResidualAccumulator { w, h, sum: vec![0.0; w * h], count: vec![0; w * h] }
    }

    fn add_window(&mut self, origin: (usize, usize), win: usize, values: &[f64]) {
        let (x0, y0) = origin;
        for dy in 0..win {
            let row = (y0 + dy) * self.w + x0;
            for dx in 0..win {
                self.sum[row + dx] += values[dy * win + dx];
                self.count[row + dx] += 1;
            }
        }
    }

    fn into_plane(self) -> Vec<f64> {
        self.sum
            .into_iter()
            .zip(self.count)
            .map(|(s, c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    }

    fn dims(&self) -> (usize, usize) {
        (self.w, self.h)
    }
}

/// Predict the residual plane for an interpolated stage input.
fn predict_residual(
    stage: &SRStage,
    mid: &Image,
    index: Option<&HierIndex>,
) -> Result<Image> {
    let with_context = matches!(stage.regressors, StageRegressors::Context(_));
    let input = StageInput::new(stage, mid, with_context)?;
    if stage.encoder.input_dim() != input.raw_dim() {
        return Err(Error::mismatch("stage encoder does not fit the window size"));
    }
    let (anchors_f32, centroids_f32): (DMatrix<f32>, Option<DMatrix<f32>>) =
        match &stage.regressors {
            StageRegressors::Plain(b) => (b.dict().atoms().map(|v| v as f32), None),
            StageRegressors::Context(m) => (
                m.banks[0].dict().atoms().map(|v| v as f32),
                Some(m.centroids.map(|v| v as f32)),
            ),
        };

    let total = input.grid.count();
    let chunk_ranges: Vec<std::ops::Range<usize>> = (0..total)
        .step_by(WINDOW_CHUNK)
        .map(|s| s..(s + WINDOW_CHUNK).min(total))
        .collect();

    let chunks: Vec<(usize, DMatrix<f64>)> = chunk_ranges
        .into_par_iter()
        .map(|range| -> Result<(usize, DMatrix<f64>)> {
            let start = range.start;
            let m = range.len();
            let raw = input.gather_batch(&input.responses, range.clone(), input.raw_dim());
            let encoded = stage.encoder.encode_batch(&raw);
            let encoded_f32 = encoded.map(|v| v as f32);
            let anchor_idx = match index {
                Some(ix) => ix.lookup_batch(&encoded_f32),
                None => linear_lookup_batch(&anchors_f32, &encoded_f32),
            };
            let cells: Vec<u8> = match (&centroids_f32, &input.ctx_responses) {
                (Some(cent), Some(ctx_planes)) => {
                    let ctx_raw =
                        input.gather_batch(ctx_planes, range.clone(), input.raw_dim());
                    let ctx_encoded = stage.encoder.encode_batch(&ctx_raw).map(|v| v as f32);
                    let sims = cent.transpose() * ctx_encoded;
                    (0..m)
                        .map(|c| {
                            let mut best = 0u8;
                            let mut best_v = f32::NEG_INFINITY;
                            for cc in 0..cent.ncols() {
                                if sims[(cc, c)] > best_v {
                                    best_v = sims[(cc, c)];
                                    best = cc as u8;
                                }
                            }
                            best
                        })
                        .collect()
                }
                _ => vec![0; m],
            };
            // Group windows sharing a regressor, then predict per group.
            let mut groups: BTreeMap<(u32, u8), Vec<usize>> = BTreeMap::new();
            for c in 0..m {
                groups.entry((anchor_idx[c], cells[c])).or_default().push(c);
            }
            let target_dim = stage.regressors.primary_bank().target_dim();
            let mut targets = DMatrix::zeros(target_dim, m);
            for ((anchor, cell), members) in groups {
                let proj = match &stage.regressors {
                    StageRegressors::Plain(b) => b.projection(anchor as usize),
                    StageRegressors::Context(cm) => {
                        cm.banks[cell as usize].projection(anchor as usize)
                    }
                };
                let mut cols = DMatrix::zeros(encoded.nrows(), members.len());
                for (k, &c) in members.iter().enumerate() {
                    cols.set_column(k, &encoded.column(c));
                }
                let pred = proj * cols;
                for (k, &c) in members.iter().enumerate() {
                    targets.set_column(c, &pred.column(k));
                }
            }
            Ok((start, targets))
        })
        .collect::<Result<_>>()?;

    let mut acc = ResidualAccumulator::new(mid.width(), mid.height());
    let win = input.win;
    for (start, targets) in chunks {
        for c in 0..targets.ncols() {
            acc.add_window(input.grid.origin(start + c), win, targets.column(c).as_slice());
        }
    }
    let (w, h) = acc.dims();
    Image::from_luma(w, h, acc.into_plane())
}

/// Run one stage on an interpolated input: predicted residuals are overlap
/// averaged and added on top of the input.
pub fn sr_stage(stage: &SRStage, mid: &Image, index: Option<&HierIndex>) -> Result<Image> {
    let residual = predict_residual(stage, mid, index)?;
    let data = mid
        .plane(0)
        .iter()
        .zip(residual.plane(0))
        .map(|(m, r)| m + r)
        .collect();
    Image::from_luma(mid.width(), mid.height(), data)
}

/// Average the eight symmetry-transformed runs of `predict`: the output is
/// equivariant under the transform group.
pub fn enhanced_predict<F>(input: &Image, mut predict: F) -> Result<Image>
where
    F: FnMut(&Image) -> Result<Image>,
{
    let mut outs = Vec::with_capacity(Transform::ALL.len());
    for t in Transform::ALL {
        outs.push(t.inverse().apply(&predict(&t.apply(input))?));
    }
    combine_predictions(&outs, &[1.0; 8])
}

/// Weighted per-pixel average of equally sized predictions.
pub fn combine_predictions(predictions: &[Image], weights: &[f64]) -> Result<Image> {
    if predictions.is_empty() || predictions.len() != weights.len() {
        return Err(Error::mismatch("need one weight per prediction"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::invalid("weights must sum to a positive value"));
    }
    let first = &predictions[0];
    let mut data = vec![0.0; first.data().len()];
    for (img, &w) in predictions.iter().zip(weights) {
        if img.width() != first.width()
            || img.height() != first.height()
            || img.channels() != first.channels()
        {
            return Err(Error::mismatch("prediction sizes differ"));
        }
        for (d, v) in data.iter_mut().zip(img.data()) {
            *d += w / total * v;
        }
    }
    Image::new(first.width(), first.height(), first.channels(), first.colorspace(), data)
}

/// Iterative back projection: re-degrade the estimate, upscale the
/// low-resolution error, and add it back until the reconstruction error is
/// tiny, stops improving, or the iteration cap is hit. Returns the refined
/// image and the error trace (never increasing).
pub fn back_project(
    hr: &Image,
    lr: &Image,
    scale: Scale,
    max_iters: usize,
    tol: f64,
) -> Result<(Image, Vec<f64>)> {
    let s = scale.factor();
    if hr.width() != lr.width() * s || hr.height() != lr.height() * s {
        return Err(Error::mismatch("estimate is not `scale` times the low-resolution input"));
    }
    let mut current = hr.clone();
    let mut err = error_image(&current, lr, scale)?;
    let mut trace = vec![rmse(&err, &Image::zeros(err.width(), err.height(), 1, Colorspace::Luma))?];
    for _ in 0..max_iters {
        let last = *trace.last().expect("trace starts non-empty");
        if last < tol {
            break;
        }
        let correction = upscale(&err, scale)?;
        let candidate_data: Vec<f64> = current
            .plane(0)
            .iter()
            .zip(correction.plane(0))
            .map(|(c, e)| c + e)
            .collect();
        let candidate = Image::from_luma(current.width(), current.height(), candidate_data)?;
        let cand_err = error_image(&candidate, lr, scale)?;
        let cand_rmse =
            rmse(&cand_err, &Image::zeros(cand_err.width(), cand_err.height(), 1, Colorspace::Luma))?;
        if cand_rmse >= last {
            break;
        }
        current = candidate;
        err = cand_err;
        trace.push(cand_rmse);
    }
    Ok((current, trace))
}

fn error_image(hr: &Image, lr: &Image, scale: Scale) -> Result<Image> {
    let down = degrade(hr, scale)?;
    let data = lr.plane(0).iter().zip(down.plane(0)).map(|(l, d)| l - d).collect();
    Image::from_luma(lr.width(), lr.height(), data)
}

/// Train a single-stage model on the input image itself: the image is
/// degraded once more, and windows of that pair become the dictionary and
/// neighborhoods. Captures patterns that repeat across scales within the
/// image.
pub fn internal_model(lr: &Image, scale: Scale, seed: u64) -> Result<SRStage> {
    let images = std::slice::from_ref(lr);
    let encoder = fit_encoder(images, scale, 1, 60_000, PCA_ENERGY, seed)?;
    let pool = build_training_set(images, scale, 1, 120_000, &encoder, false, seed ^ 1)?;
    if pool.len() < 16 {
        return Err(Error::insufficient("input image has too few usable windows"));
    }
    let feats = DMatrix::from_iterator(
        pool.dim,
        pool.len(),
        pool.features.iter().map(|&v| v as f64),
    );
    let mut k = INTERNAL_ANCHORS.min(pool.len() / 2).max(4);
    let dict = loop {
        match kmeans_train(&feats, k, 15, seed ^ 2) {
            Ok(d) => break d,
            Err(_) if k > 4 => k /= 2,
            Err(e) => return Err(e),
        }
    };
    let bank = train_bank_samples(&pool, &dict, RIDGE_LAMBDA, INTERNAL_NEIGHBORHOOD.min(pool.len()))?;
    Ok(SRStage {
        scale,
        window: window_side(scale),
        encoder,
        regressors: StageRegressors::Plain(bank),
    })
}

/// Geometric check that an input is large enough for internal training;
/// `super_resolve` silently falls back to the external model when it is not.
pub fn internal_feasible(lr: &Image, scale: Scale) -> bool {
    let s = scale.factor();
    let win = crate::patches::window_side(scale);
    let w = (lr.width() / s) * s;
    let h = (lr.height() / s) * s;
    w >= win && h >= win && (w - win + 1) * (h - win + 1) >= 16
}

fn stage_index(stage: &SRStage, mode: SearchMode) -> Result<Option<HierIndex>> {
    match mode {
        SearchMode::Linear => Ok(None),
        SearchMode::Hierarchical => Ok(Some(HierIndex::build(
            stage.regressors.primary_bank().dict(),
            HIER_BRANCH,
            PIPELINE_SEED,
        )?)),
    }
}

/// Run every stage of the model on a low-resolution luminance image, with
/// the requested refinements.
pub fn super_resolve(model: &SRModel, lr: &Image, flags: &PipelineFlags) -> Result<Image> {
    if lr.channels() != 1 {
        return Err(Error::invalid("expected a single-channel luminance image"));
    }
    let internal = if flags.internal && internal_feasible(lr, model.scale()) {
        match internal_model(lr, model.scale(), PIPELINE_SEED) {
            Ok(stage) => Some(stage),
            Err(Error::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let mut current = lr.clone();
    for (t, stage) in model.stages.iter().enumerate() {
        let index = stage_index(stage, flags.search)?;
        let internal_stage = if t == 0 { internal.as_ref() } else { None };
        let step = |img: &Image| -> Result<Image> {
            let mid = if stage.scale.factor() > 1 {
                upscale(img, stage.scale)?
            } else {
                img.clone()
            };
            let external = sr_stage(stage, &mid, index.as_ref())?;
            match internal_stage {
                Some(int) => {
                    let internal_pred = sr_stage(int, &mid, None)?;
                    combine_predictions(
                        &[external, internal_pred],
                        &[1.0 - INTERNAL_BLEND, INTERNAL_BLEND],
                    )
                }
                None => Ok(external),
            }
        };
        current = if flags.enhanced {
            enhanced_predict(&current, step)?
        } else {
            step(&current)?
        };
    }
    if flags.back_project {
        current = back_project(&current, lr, model.scale(), BACK_PROJECT_ITERS, BACK_PROJECT_TOL)?.0;
    }
    Ok(current)
}

/// Super-resolve a color image: the luminance channel goes through the
/// model, chrominance is bicubic-enlarged, and the result converts back to
/// RGB.
pub fn sr_color(model: &SRModel, img: &Image, flags: &PipelineFlags) -> Result<Image> {
    let s = model.scale().factor();
    match img.colorspace() {
        Colorspace::Luma => super_resolve(model, img, flags),
        Colorspace::Rgb => {
            let ycbcr = match model.luma {
                LumaConvention::Bt601Studio => crate::color::rgb_to_ycbcr_studio(img)?,
                LumaConvention::Bt601Full => crate::color::rgb_to_ycbcr(img)?,
            };
            let y = Image::from_luma(img.width(), img.height(), ycbcr.plane(0).to_vec())?;
            let sr_y = super_resolve(model, &y, flags)?;
            let (w, h) = (img.width() * s, img.height() * s);
            let cb = resize_plane(&ycbcr, 1, w, h)?;
            let cr = resize_plane(&ycbcr, 2, w, h)?;
            let mut data = Vec::with_capacity(3 * w * h);
            data.extend_from_slice(sr_y.plane(0));
            data.extend_from_slice(cb.plane(0));
            data.extend_from_slice(cr.plane(0));
            let out = Image::new(w, h, 3, Colorspace::Ycbcr, data)?;
            let rgb = match model.luma {
                LumaConvention::Bt601Studio => crate::color::ycbcr_studio_to_rgb(&out)?,
                LumaConvention::Bt601Full => crate::color::ycbcr_to_rgb(&out)?,
            };
            Ok(rgb.quantize())
        }
        Colorspace::Ycbcr => Err(Error::invalid("convert YCbCr input to RGB or luminance first")),
    }
}

fn resize_plane(img: &Image, ch: usize, w: usize, h: usize) -> Result<Image> {
    let plane = Image::from_luma(img.width(), img.height(), img.plane(ch).to_vec())?;
    bicubic_resize(&plane, w, h)
}
