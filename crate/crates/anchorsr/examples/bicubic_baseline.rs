//! The measurement protocol every other example builds on.
//!
//! Super-resolution quality is reported as PSNR between a ground-truth
//! image and the reconstruction of its downscaled version:
//!
//! 1. take a high-resolution luma image,
//! 2. downscale it by the target factor (antialiased),
//! 3. upscale it back with plain bicubic interpolation,
//! 4. compare, ignoring a border as wide as the scale factor.
//!
//! The bicubic number is the floor a trained model has to beat. Run with:
//!
//! ```bash
//! cargo run --release --example bicubic_baseline
//! ```

use anchorsr::synth::{blobs, edges, textured};
use anchorsr::{degrade, psnr_luma, upscale, Image, Scale};

fn main() -> anchorsr::Result<()> {
    let scale = Scale::new(3)?;

    println!("bicubic ×{} reconstruction on synthetic scenes:", scale.get());
    for (name, gt) in [
        ("textured", textured(96, 96, 11)),
        ("edges", edges(96, 96, 12)),
        ("blobs", blobs(96, 96, 13)),
    ] {
        // Quantize first so the reference lives on the 8-bit grid, exactly
        // like a PNG ground truth would.
        let gt = gt.quantize();
        let lr = degrade(&gt, scale)?;
        let up = upscale(&lr, scale)?.quantize();
        let psnr = psnr_luma(&gt, &up, scale.factor())?;
        println!("  {name:9} {}x{} -> {psnr:6.2} dB", gt.width(), gt.height());
    }

    // Interpolation is exact on constant images: the protocol's sanity check.
    let flat = Image::constant(30, 24, 128.0);
    let round = upscale(&degrade(&flat, scale)?, scale)?;
    let drift = round.plane(0).iter().map(|v| (v - 128.0).abs()).fold(0.0, f64::max);
    println!("constant image round trip deviates by {drift:.2e} gray levels");
    Ok(())
}
