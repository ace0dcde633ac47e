//! Context-split regression: one regressor per (anchor, surroundings) pair.
//!
//! Two windows can share the same gradient direction yet sit in very
//! different neighborhoods — one on a crisp edge, one in smooth shading.
//! Context reasoning describes each window by a strongly blurred view of its
//! surroundings, clusters those descriptions into a few context groups, and
//! fits a separate ridge regressor per anchor within each group. At
//! inference the window picks its anchor as usual, then the context picks
//! which of that anchor's regressors to apply.
//!
//! The price is context-times more regressors to train on the same sample
//! budget, so the technique needs enough samples per (anchor, context) cell.
//!
//! ```bash
//! cargo run --release --example context_regression
//! ```

use anchorsr::synth::{synth_corpus, textured};
use anchorsr::{degrade, psnr_luma, super_resolve, PipelineFlags, TrainConfig};

fn main() -> anchorsr::Result<()> {
    let corpus = synth_corpus(8, 60, 60, 100);
    let base = TrainConfig {
        anchors: 64,
        samples: 20_000,
        dict_samples: 4_000,
        dict_iters: 6,
        neighborhood: 256,
        augment: false,
        seed: 42,
        ..TrainConfig::default()
    };
    let (plain, _) = anchorsr::train_model(&corpus, &base)?;
    let (contextual, _) =
        anchorsr::train_model(&corpus, &TrainConfig { context: true, ..base.clone() })?;

    let border = plain.scale().factor();
    let flags = PipelineFlags::default();
    println!("plain vs context-split regressors:");
    let mut gain = 0.0;
    for seed in [777, 778, 779] {
        let gt = textured(90, 90, seed).quantize();
        let lr = degrade(&gt, plain.scale())?;
        let p = psnr_luma(&gt, &super_resolve(&plain, &lr, &flags)?.quantize(), border)?;
        let c = psnr_luma(&gt, &super_resolve(&contextual, &lr, &flags)?.quantize(), border)?;
        println!("  image {seed}: {p:6.2} dB -> {c:6.2} dB ({:+.3})", c - p);
        gain += c - p;
    }
    println!("mean gain {:+.3} dB", gain / 3.0);
    Ok(())
}
