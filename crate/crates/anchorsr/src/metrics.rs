//! Fidelity metrics used by the benchmark protocol.

use crate::error::{Error, Result};
use crate::image::Image;

/// Mean squared error between the first planes of two equally sized images,
/// excluding a border of `border` pixels on every side.
pub fn mse_luma(a: &Image, b: &Image, border: usize) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::mismatch(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = (a.width(), a.height());
    if w <= 2 * border || h <= 2 * border {
        return Err(Error::invalid(format!(
            "border {border} leaves no interior in a {w}x{h} image"
        )));
    }
    let (pa, pb) = (a.plane(0), b.plane(0));
    let mut sum = 0.0;
    for y in border..h - border {
        for x in border..w - border {
            let d = pa[y * w + x] - pb[y * w + x];
            sum += d * d;
        }
    }
    let count = (w - 2 * border) * (h - 2 * border);
    Ok(sum / count as f64)
}

/// Peak signal-to-noise ratio in dB on the luminance plane with peak 255,
/// skipping a `border`-pixel frame (the upscaling factor in the benchmark
/// protocol). Identical interiors yield `f64::INFINITY`.
pub fn psnr_luma(a: &Image, b: &Image, border: usize) -> Result<f64> {
    let mse = mse_luma(a, b, border)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Root mean squared difference over the full first plane (no border).
pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    Ok(mse_luma(a, b, 0)?.sqrt())
}
