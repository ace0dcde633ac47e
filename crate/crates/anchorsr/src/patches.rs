//! Training-pair extraction: sliding windows over the gradient features of a
//! bicubic-enlarged image paired with the high-resolution residual they
//! should predict.
//!
//! Window side is three times the upscaling factor. Pools are built in two
//! streaming passes so multi-million-sample sets never materialize raw
//! features: pass one fits the projection from sampled windows, pass two
//! re-extracts exactly the sampled windows and encodes them on the fly.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::features::{filter_responses, FeatureEncoder, PcaAccumulator, FILTER_COUNT};
use crate::image::{Image, Scale};
use crate::resample::{degrade, upscale};

/// Window side length for an upscaling factor.
pub fn window_side(scale: Scale) -> usize {
    3 * scale.factor()
}

/// Gradient-energy floor (gray-level units) below which a window is treated
/// as flat and skipped when pooling training samples. Targets are scaled by
/// the inverse feature norm, so near-flat windows would otherwise contribute
/// huge, noise-dominated regression targets that poison the ridge fits.
pub const FLAT_NORM: f64 = 0.5;

/// Sliding-window origins covering a plane. Origins advance by `stride` and
/// the final origin is forced so the last window touches the border.
#[derive(Debug, Clone)]
pub struct WindowGrid {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub win: usize,
}

fn axis_origins(len: usize, win: usize, stride: usize) -> Vec<usize> {
    let last = len - win;
    let mut v: Vec<usize> = (0..=last).step_by(stride).collect();
    if *v.last().expect("at least origin 0") != last {
        v.push(last);
    }
    v
}

/// Copy a `win` x `win` window at `origin` from each plane into `out`,
/// row-major per plane, planes concatenated.
pub fn gather_window(
    planes: &[Vec<f64>],
    width: usize,
    origin: (usize, usize),
    win: usize,
    out: &mut [f64],
) {
    let (x0, y0) = origin;
    let mut k = 0;
    for plane in planes {
        for dy in 0..win {
            let row = (y0 + dy) * width + x0;
            out[k..k + win].copy_from_slice(&plane[row..row + win]);
            k += win;
        }
    }
}

pub fn window_grid(w: usize, h: usize, win: usize, stride: usize) -> Result<WindowGrid> {
    if stride == 0 {
        return Err(Error::invalid("window stride must be positive"));
    }
    if win == 0 || win > w || win > h {
        return Err(Error::invalid(format!(
            "window {win} does not fit a {w}x{h} plane"
        )));
    }
    Ok(WindowGrid { xs: axis_origins(w, win, stride), ys: axis_origins(h, win, stride), win })
}

impl WindowGrid {
    pub fn count(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    /// Origin of window `idx` in row-major order over (ys, xs).
    pub fn origin(&self, idx: usize) -> (usize, usize) {
        (self.xs[idx % self.xs.len()], self.ys[idx / self.xs.len()])
    }
}

/// One raw training pair: concatenated filter responses over a window and
/// the high-resolution residual of the same window.
#[derive(Debug, Clone)]
pub struct PatchPair {
    pub feature: Vec<f64>,
    pub target: Vec<f64>,
}

/// Gradient responses and residual plane of one image pair, ready for
/// window gathering.
pub struct PairSource {
    width: usize,
    win: usize,
    responses: [Vec<f64>; FILTER_COUNT],
    residual: Vec<f64>,
    context_responses: Option<[Vec<f64>; FILTER_COUNT]>,
    grid: WindowGrid,
}

impl PairSource {
    /// Degrade a high-resolution luminance image by `scale` and pair the
    /// bicubic re-enlargement against the (cropped) original.
    pub fn from_hr(hr: &Image, scale: Scale, stride: usize, with_context: bool) -> Result<Self> {
        let cropped = hr.crop_to_multiple(scale)?;
        let lr = degrade(&cropped, scale)?;
        Self::from_pair(&lr, &cropped, scale, stride, with_context)
    }

    /// Pair an explicit low/high resolution image pair. `hr` dimensions must
    /// be exactly `scale` times those of `lr`.
    pub fn from_pair(
        lr: &Image,
        hr: &Image,
        scale: Scale,
        stride: usize,
        with_context: bool,
    ) -> Result<Self> {
        let s = scale.factor();
        if hr.width() != lr.width() * s || hr.height() != lr.height() * s {
            return Err(Error::mismatch(format!(
                "high-resolution size {}x{} is not {s}x the low-resolution {}x{}",
                hr.width(),
                hr.height(),
                lr.width(),
                lr.height()
            )));
        }
        let mid = upscale(lr, scale)?;
        Self::from_mid(&mid, hr, scale, window_side(scale), stride, with_context)
    }

    /// Pair an already-interpolated image against its reference. Both live on
    /// the same grid; this is the form cascade stages train on. The window
    /// side is explicit so refinement stages can keep the receptive field of
    /// the upscaling stage; `scale` only drives the context degradation.
    pub fn from_mid(
        mid: &Image,
        hr: &Image,
        scale: Scale,
        win: usize,
        stride: usize,
        with_context: bool,
    ) -> Result<Self> {
        if hr.width() != mid.width() || hr.height() != mid.height() {
            return Err(Error::mismatch("interpolated and reference sizes differ"));
        }
        let grid = window_grid(mid.width(), mid.height(), win, stride)?;
        let responses = filter_responses(mid);
        let residual: Vec<f64> =
            hr.plane(0).iter().zip(mid.plane(0)).map(|(h, m)| h - m).collect();
        let context_responses = if with_context {
            let ctx = upscale(&degrade(mid, scale)?, scale)?;
            Some(filter_responses(&ctx))
        } else {
            None
        };
        Ok(PairSource {
            width: mid.width(),
            win,
            responses,
            residual,
            context_responses,
            grid,
        })
    }

    pub fn count(&self) -> usize {
        self.grid.count()
    }

    pub fn raw_dim(&self) -> usize {
        FILTER_COUNT * self.win * self.win
    }

    pub fn target_dim(&self) -> usize {
        self.win * self.win
    }

    pub fn has_context(&self) -> bool {
        self.context_responses.is_some()
    }

    pub fn origin(&self, idx: usize) -> (usize, usize) {
        self.grid.origin(idx)
    }

    fn gather(&self, planes: &[Vec<f64>], idx: usize, out: &mut [f64]) {
        gather_window(planes, self.width, self.grid.origin(idx), self.win, out);
    }

    pub fn raw_feature_into(&self, idx: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.raw_dim());
        self.gather(&self.responses, idx, out);
    }

    pub fn target_into(&self, idx: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.target_dim());
        self.gather(std::slice::from_ref(&self.residual), idx, out);
    }

    /// Raw context feature, if the source was built with context planes.
    pub fn context_into(&self, idx: usize, out: &mut [f64]) {
        let ctx = self.context_responses.as_ref().expect("source has no context planes");
        self.gather(ctx, idx, out);
    }
}

/// Every raw pair of an image at the given stride; nothing is filtered.
pub fn extract_pairs(hr: &Image, scale: Scale, stride: usize) -> Result<Vec<PatchPair>> {
    let src = PairSource::from_hr(hr, scale, stride, false)?;
    let mut out = Vec::with_capacity(src.count());
    for i in 0..src.count() {
        let mut feature = vec![0.0; src.raw_dim()];
        let mut target = vec![0.0; src.target_dim()];
        src.raw_feature_into(i, &mut feature);
        src.target_into(i, &mut target);
        out.push(PatchPair { feature, target });
    }
    Ok(out)
}

/// Distinct sorted indices sampled uniformly from `0..total` without
/// materializing the range (Floyd's algorithm).
pub fn sample_indices(total: usize, want: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    if want >= total {
        return (0..total).collect();
    }
    let mut chosen = HashSet::with_capacity(want);
    for j in total - want..total {
        let pick = rng.random_range(0..=j);
        if !chosen.insert(pick) {
            chosen.insert(j);
        }
    }
    let mut v: Vec<usize> = chosen.into_iter().collect();
    v.sort_unstable();
    v
}

/// Deterministic uniform subsample of materialized pairs.
pub fn sample_pairs(pairs: &[PatchPair], want: usize, seed: u64) -> Vec<PatchPair> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_indices(pairs.len(), want, &mut rng)
        .into_iter()
        .map(|i| pairs[i].clone())
        .collect()
}

/// Pooled, encoded, per-sample-normalized training data. Features (and
/// context descriptors, when present) are unit length; targets carry the
/// inverse feature norm so a regressor fitted on this pool applies to raw
/// encoded features unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub dim: usize,
    pub target_dim: usize,
    pub features: Vec<f32>,
    pub targets: Vec<f32>,
    pub context: Option<Vec<f32>>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.features.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target(&self, i: usize) -> &[f32] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }

    pub fn context(&self, i: usize) -> Option<&[f32]> {
        self.context.as_ref().map(|c| &c[i * self.dim..(i + 1) * self.dim])
    }
}

fn window_count_after_crop(img: &Image, scale: Scale, stride: usize) -> Result<usize> {
    let s = scale.factor();
    let w = (img.width() / s) * s;
    let h = (img.height() / s) * s;
    if w == 0 || h == 0 {
        return Err(Error::invalid("image smaller than the upscaling factor"));
    }
    Ok(window_grid(w, h, window_side(scale), stride)?.count())
}

/// Streaming pass over sampled windows: `counts[i]` windows per item,
/// `build(i)` materializes item i only when some of its windows are chosen,
/// `consume` receives (source, chosen global indices, item offset).
fn visit_sampled_windows<B, C>(
    counts: &[usize],
    max_windows: usize,
    seed: u64,
    mut build: B,
    mut consume: C,
) -> Result<()>
where
    B: FnMut(usize) -> Result<PairSource>,
    C: FnMut(&PairSource, &[usize], usize) -> Result<()>,
{
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::insufficient("no windows available"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let picked = sample_indices(total, max_windows, &mut rng);
    let mut offset = 0usize;
    let mut cursor = 0usize;
    for (i, &count) in counts.iter().enumerate() {
        let end = offset + count;
        let local_start = cursor;
        while cursor < picked.len() && picked[cursor] < end {
            cursor += 1;
        }
        if cursor > local_start {
            let src = build(i)?;
            consume(&src, &picked[local_start..cursor], offset)?;
        }
        offset = end;
    }
    Ok(())
}

fn fit_encoder_impl<B>(
    counts: &[usize],
    win: usize,
    max_windows: usize,
    energy: f64,
    seed: u64,
    build: B,
) -> Result<FeatureEncoder>
where
    B: FnMut(usize) -> Result<PairSource>,
{
    let raw_dim = FILTER_COUNT * win * win;
    let mut acc = PcaAccumulator::new(raw_dim);
    visit_sampled_windows(counts, max_windows, seed, build, |src, locals, offset| {
        let mut batch = DMatrix::zeros(raw_dim, locals.len());
        let mut buf = vec![0.0; raw_dim];
        for (k, &g) in locals.iter().enumerate() {
            src.raw_feature_into(g - offset, &mut buf);
            batch.column_mut(k).copy_from_slice(&buf);
        }
        acc.add_batch(&batch);
        Ok(())
    })?;
    acc.fit(energy)
}

fn build_set_impl<B>(
    counts: &[usize],
    win: usize,
    max_samples: usize,
    encoder: &FeatureEncoder,
    with_context: bool,
    seed: u64,
    build: B,
) -> Result<TrainingSet>
where
    B: FnMut(usize) -> Result<PairSource>,
{
    let dim = encoder.output_dim();
    let target_dim = win * win;
    let mut set = TrainingSet {
        dim,
        target_dim,
        features: Vec::new(),
        targets: Vec::new(),
        context: with_context.then(Vec::new),
    };
    visit_sampled_windows(counts, max_samples, seed, build, |src, locals, offset| {
        append_windows(src, locals, offset, encoder, &mut set)
    })?;
    Ok(set)
}

/// Fit the feature projection from up to `max_windows` windows sampled
/// uniformly across all images.
pub fn fit_encoder(
    images: &[Image],
    scale: Scale,
    stride: usize,
    max_windows: usize,
    energy: f64,
    seed: u64,
) -> Result<FeatureEncoder> {
    let counts: Vec<usize> = images
        .iter()
        .map(|im| window_count_after_crop(im, scale, stride))
        .collect::<Result<_>>()?;
    fit_encoder_impl(&counts, window_side(scale), max_windows, energy, seed, |i| {
        PairSource::from_hr(&images[i], scale, stride, false)
    })
}

/// Build a pooled training set of up to `max_samples` windows sampled
/// uniformly across all images, encoded with `encoder` and normalized per
/// sample. Near-flat windows are dropped, so the pool may come up short.
pub fn build_training_set(
    images: &[Image],
    scale: Scale,
    stride: usize,
    max_samples: usize,
    encoder: &FeatureEncoder,
    with_context: bool,
    seed: u64,
) -> Result<TrainingSet> {
    let counts: Vec<usize> = images
        .iter()
        .map(|im| window_count_after_crop(im, scale, stride))
        .collect::<Result<_>>()?;
    build_set_impl(&counts, window_side(scale), max_samples, encoder, with_context, seed, |i| {
        PairSource::from_hr(&images[i], scale, stride, with_context)
    })
}

fn mid_counts(pairs: &[(Image, Image)], win: usize, stride: usize) -> Result<Vec<usize>> {
    pairs
        .iter()
        .map(|(mid, _)| Ok(window_grid(mid.width(), mid.height(), win, stride)?.count()))
        .collect()
}

/// [`fit_encoder`] over explicit (interpolated, reference) pairs on a shared
/// grid, as used by refinement stages. `win` sets the window side so those
/// stages keep the receptive field of the stage whose output they refine.
pub fn fit_encoder_mid(
    pairs: &[(Image, Image)],
    scale: Scale,
    win: usize,
    stride: usize,
    max_windows: usize,
    energy: f64,
    seed: u64,
) -> Result<FeatureEncoder> {
    let counts = mid_counts(pairs, win, stride)?;
    fit_encoder_impl(&counts, win, max_windows, energy, seed, |i| {
        PairSource::from_mid(&pairs[i].0, &pairs[i].1, scale, win, stride, false)
    })
}

/// [`build_training_set`] over explicit (interpolated, reference) pairs.
#[allow(clippy::too_many_arguments)]
pub fn build_training_set_mid(
    pairs: &[(Image, Image)],
    scale: Scale,
    win: usize,
    stride: usize,
    max_samples: usize,
    encoder: &FeatureEncoder,
    with_context: bool,
    seed: u64,
) -> Result<TrainingSet> {
    let counts = mid_counts(pairs, win, stride)?;
    build_set_impl(&counts, win, max_samples, encoder, with_context, seed, |i| {
        PairSource::from_mid(&pairs[i].0, &pairs[i].1, scale, win, stride, with_context)
    })
}

/// Encode the listed windows of one source and append the usable ones.
pub fn append_windows(
    src: &PairSource,
    global_indices: &[usize],
    offset: usize,
    encoder: &FeatureEncoder,
    set: &mut TrainingSet,
) -> Result<()> {
    if encoder.input_dim() != src.raw_dim() {
        return Err(Error::mismatch("encoder and window dimensions differ"));
    }
    let raw_dim = src.raw_dim();
    let n = global_indices.len();
    let mut raw = DMatrix::zeros(raw_dim, n);
    let mut buf = vec![0.0; raw_dim];
    for (k, &g) in global_indices.iter().enumerate() {
        src.raw_feature_into(g - offset, &mut buf);
        raw.column_mut(k).copy_from_slice(&buf);
    }
    let encoded = encoder.encode_batch(&raw);
    let ctx_encoded = if set.context.is_some() {
        let mut raw_ctx = DMatrix::zeros(raw_dim, n);
        for (k, &g) in global_indices.iter().enumerate() {
            src.context_into(g - offset, &mut buf);
            raw_ctx.column_mut(k).copy_from_slice(&buf);
        }
        Some(encoder.encode_batch(&raw_ctx))
    } else {
        None
    };

    let mut target = vec![0.0; src.target_dim()];
    for (k, &g) in global_indices.iter().enumerate() {
        let col = encoded.column(k);
        let norm = col.norm();
        if norm < FLAT_NORM {
            continue;
        }
        set.features.extend(col.iter().map(|v| (v / norm) as f32));
        src.target_into(g - offset, &mut target);
        set.targets.extend(target.iter().map(|v| (v / norm) as f32));
        if let Some(ctx_cols) = &ctx_encoded {
            let ctx = ctx_cols.column(k);
            let cn = ctx.norm();
            if cn < FLAT_NORM {
                // Flat context still anchors somewhere: keep the zero vector.
                set.context.as_mut().unwrap().extend(std::iter::repeat_n(0.0f32, set.dim));
            } else {
                set.context.as_mut().unwrap().extend(ctx.iter().map(|v| (v / cn) as f32));
            }
        }
    }
    Ok(())
}
