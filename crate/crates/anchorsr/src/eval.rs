//! Benchmark protocol: crop ground truth to a scale multiple, round its luma
//! to the 8-bit grid, downscale, super-resolve, and score border-excluded
//! luma PSNR against the rounded ground truth.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::color::luminance;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::psnr_luma;
use crate::pipeline::{super_resolve, PipelineFlags, SRModel};
use crate::resample::{degrade, upscale};

/// One scored image.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub name: String,
    pub psnr_db: f64,
    pub seconds: f64,
}

/// Scores for a whole directory.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scale: u32,
    pub records: Vec<EvalRecord>,
    /// SHA-256 of the model file, when the model came from disk.
    pub model_digest: Option<String>,
}

impl EvalReport {
    pub fn mean_psnr(&self) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return f64::NAN;
        }
        self.records.iter().map(|r| r.psnr_db).sum::<f64>() / n as f64
    }

    pub fn mean_seconds(&self) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return f64::NAN;
        }
        self.records.iter().map(|r| r.seconds).sum::<f64>() / n as f64
    }

    /// Plain-text rows `name psnr_db seconds` plus a mean row; the shape the
    /// eval command prints and the sweep harness parses.
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# scale {}", self.scale)?;
        if let Some(digest) = &self.model_digest {
            writeln!(w, "# model sha256 {digest}")?;
        }
        for r in &self.records {
            writeln!(w, "{} {:.4} {:.3}", r.name, r.psnr_db, r.seconds)?;
        }
        writeln!(w, "mean {:.4} {:.3}", self.mean_psnr(), self.mean_seconds())
    }
}

/// Ground truth prepared for scoring: luma plane cropped to a multiple of the
/// scale and rounded to the integer grid.
pub fn prepare_ground_truth(img: &Image, model: &SRModel) -> Result<Image> {
    let luma = luminance(img, model.luma)?;
    Ok(luma.crop_to_multiple(model.scale())?.quantize())
}

/// Score one prepared ground-truth luma image. Returns the record and the
/// super-resolved (quantized) output.
pub fn evaluate_image(
    model: &SRModel,
    flags: &PipelineFlags,
    name: &str,
    gt: &Image,
) -> Result<(EvalRecord, Image)> {
    let scale = model.scale();
    let lr = degrade(gt, scale)?;
    let start = Instant::now();
    let sr = super_resolve(model, &lr, flags)?;
    let seconds = start.elapsed().as_secs_f64();
    let sr = sr.quantize();
    let psnr_db = psnr_luma(gt, &sr, scale.factor())?;
    Ok((EvalRecord { name: name.into(), psnr_db, seconds }, sr))
}

/// PNG and BMP files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png") | Some("bmp")) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!("no png/bmp images in {}", dir.display())));
    }
    Ok(paths)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Run the protocol over every image in a directory.
pub fn evaluate_dir(
    model: &SRModel,
    flags: &PipelineFlags,
    dir: &Path,
    model_digest: Option<String>,
) -> Result<EvalReport> {
    let mut records = Vec::new();
    for path in list_images(dir)? {
        let img = Image::load(&path)?;
        let gt = prepare_ground_truth(&img, model)?;
        let (record, _) = evaluate_image(model, flags, &stem(&path), &gt)?;
        records.push(record);
    }
    Ok(EvalReport { scale: model.scale().get(), records, model_digest })
}

/// Same protocol with plain upscaling in place of the model; the reference
/// every trained result is compared against.
pub fn bicubic_dir(model: &SRModel, dir: &Path) -> Result<EvalReport> {
    let scale = model.scale();
    let mut records = Vec::new();
    for path in list_images(dir)? {
        let img = Image::load(&path)?;
        let gt = prepare_ground_truth(&img, model)?;
        let lr = degrade(&gt, scale)?;
        let start = Instant::now();
        let up = upscale(&lr, scale)?.quantize();
        let seconds = start.elapsed().as_secs_f64();
        let psnr_db = psnr_luma(&gt, &up, scale.factor())?;
        records.push(EvalRecord { name: stem(&path), psnr_db, seconds });
    }
    Ok(EvalReport { scale: scale.get(), records, model_digest: None })
}
