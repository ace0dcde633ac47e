//! Internal dictionaries: learn from the input image itself.
//!
//! Natural images repeat their own structure across scales, so the input
//! image is also a tiny, perfectly relevant training set: degrade it once
//! more, train a small single-stage model on that (coarser, input) pair, and
//! blend its prediction with the externally trained model.
//!
//! The internal model earns its keep on content the external corpus never
//! saw. This example trains the external model on smooth scenes only (blobs
//! and edges, no fine texture) and then upscales textured inputs: the blend
//! recovers part of what the mismatched external model misses. On content
//! the corpus already covers, blending can just as well cost a little — it
//! is an option, not a default.
//!
//! The input must also be large enough to yield training windows after the
//! extra degradation; `internal_feasible` performs that geometric check and
//! the pipeline silently falls back to the external model when it fails.
//!
//! ```bash
//! cargo run --release --example self_similarity
//! ```

use anchorsr::pipeline::internal_feasible;
use anchorsr::synth::{blobs, edges, textured};
use anchorsr::{degrade, psnr_luma, super_resolve, Image, PipelineFlags, TrainConfig};

/// A periodic tiling of a fine texture: strongly self-similar content.
fn tiled(width: usize, height: usize, seed: u64) -> Image {
    let tile = textured(24, 24, seed);
    let mut data = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            data[y * width + x] = tile.at(0, x % 24, y % 24);
        }
    }
    Image::from_luma(width, height, data).expect("dimensions match the buffer")
}

fn main() -> anchorsr::Result<()> {
    // An external corpus with no fine texture in it at all.
    let corpus: Vec<Image> = (0..8)
        .map(|i| if i % 2 == 0 { blobs(60, 60, 300 + i) } else { edges(60, 60, 300 + i) })
        .collect();
    let cfg = TrainConfig {
        anchors: 64,
        samples: 20_000,
        dict_samples: 4_000,
        dict_iters: 6,
        neighborhood: 256,
        augment: false,
        seed: 42,
        ..TrainConfig::default()
    };
    let (model, _) = anchorsr::train_model(&corpus, &cfg)?;
    let border = model.scale().factor();
    let external = PipelineFlags::default();
    let blended = PipelineFlags { internal: true, ..PipelineFlags::default() };

    println!("external model trained on smooth scenes; inputs are fine texture:");
    for (label, gt) in [("tiled texture", tiled(96, 96, 777)), ("texture field", textured(144, 144, 901))]
    {
        let gt = gt.quantize();
        let lr = degrade(&gt, model.scale())?;
        let p = psnr_luma(&gt, &super_resolve(&model, &lr, &external)?.quantize(), border)?;
        let s = psnr_luma(&gt, &super_resolve(&model, &lr, &blended)?.quantize(), border)?;
        println!(
            "  {label:13} ({}x{} input): external {p:6.2} dB, blended {s:6.2} dB ({:+.3})",
            lr.width(),
            lr.height(),
            s - p,
        );
    }

    // Too small to train on: the flag degrades gracefully to external-only.
    let tiny_gt = tiled(27, 27, 778).quantize();
    let tiny_lr = degrade(&tiny_gt, model.scale())?;
    println!(
        "{}x{} input, internal training feasible: {}",
        tiny_lr.width(),
        tiny_lr.height(),
        internal_feasible(&tiny_lr, model.scale()),
    );
    let a = super_resolve(&model, &tiny_lr, &external)?;
    let b = super_resolve(&model, &tiny_lr, &blended)?;
    println!("fallback output identical to external-only: {}", a.max_abs_diff(&b) == 0.0);
    Ok(())
}
