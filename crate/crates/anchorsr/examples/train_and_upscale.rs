//! End-to-end core workflow: train a model, save it, load it back, and
//! upscale an image it has never seen.
//!
//! Training pairs each exemplar image with an antialiased downscale of
//! itself, extracts gradient features from overlapping windows of the
//! re-interpolated version, clusters them into anchor directions, and fits
//! one ridge regressor per anchor that maps a window's feature vector to the
//! missing high-frequency detail. Inference is then a nearest-anchor lookup
//! plus one matrix–vector product per window.
//!
//! The budgets here are deliberately tiny so the example runs in seconds;
//! quality scales with anchors and samples (see the `eval`/`sweep`
//! subcommands of the CLI for the full protocol).
//!
//! ```bash
//! cargo run --release --example train_and_upscale
//! ```

use anchorsr::synth::{synth_corpus, textured};
use anchorsr::{
    degrade, load_model, psnr_luma, save_model, super_resolve, upscale, PipelineFlags,
    TrainConfig,
};

fn main() -> anchorsr::Result<()> {
    // 1. Train on a small synthetic corpus.
    let corpus = synth_corpus(8, 60, 60, 100);
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
    let (model, report) = anchorsr::train_model(&corpus, &cfg)?;
    println!(
        "trained {} anchors from {} samples in {:.1}s (feature dim {} -> {})",
        cfg.anchors,
        report.pool_sizes[0],
        report.seconds,
        report.encoder_dims[0].0,
        report.encoder_dims[0].1,
    );

    // 2. Persist and reload; the file round trip is bit-exact.
    let path = std::env::temp_dir().join("anchorsr_example_model.asrm");
    save_model(&model, &path)?;
    let model = load_model(&path)?;
    println!("model file: {}", path.display());

    // 3. Upscale a held-out image and compare against plain interpolation.
    let gt = textured(90, 90, 777).quantize();
    let lr = degrade(&gt, model.scale())?;
    let bicubic = upscale(&lr, model.scale())?.quantize();
    let sr = super_resolve(&model, &lr, &PipelineFlags::default())?.quantize();
    let border = model.scale().factor();
    println!("held-out image ({}x{}):", gt.width(), gt.height());
    println!("  bicubic {:6.2} dB", psnr_luma(&gt, &bicubic, border)?);
    println!("  trained {:6.2} dB", psnr_luma(&gt, &sr, border)?);

    // 4. Images save as ordinary PNGs for visual inspection.
    let out = std::env::temp_dir().join("anchorsr_example_sr.png");
    sr.save(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
