//! The combined configuration: cascade + symmetry averaging + back
//! projection in one pipeline, against the plain single-stage model.
//!
//! The improvement techniques are independent and compose: a cascaded model
//! refines its own output, enhanced prediction averages the whole cascade
//! over the symmetry group, and back projection pins the final estimate to
//! the input. This example trains a small plain model and a small combined
//! model on the same corpus and scores both on held-out scenes — a desk-size
//! version of the headline configuration.
//!
//! ```bash
//! cargo run --release --example combined_pipeline
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
    let (plain_model, _) = anchorsr::train_model(&corpus, &base)?;
    let (combined_model, _) = anchorsr::train_model(
        &corpus,
        &TrainConfig { stages: 2, anchors: 128, ..base.clone() },
    )?;

    let plain_flags = PipelineFlags::default();
    let combined_flags = PipelineFlags { enhanced: true, ..PipelineFlags::default() };

    let border = plain_model.scale().factor();
    let mut p_mean = 0.0;
    let mut c_mean = 0.0;
    println!("plain (1 stage, 64 anchors) vs combined (2 stages, 128 anchors, enhanced):");
    for seed in [777, 778, 779] {
        let gt = textured(90, 90, seed).quantize();
        let lr = degrade(&gt, plain_model.scale())?;
        let p = psnr_luma(&gt, &super_resolve(&plain_model, &lr, &plain_flags)?.quantize(), border)?;
        let c = psnr_luma(
            &gt,
            &super_resolve(&combined_model, &lr, &combined_flags)?.quantize(),
            border,
        )?;
        println!("  image {seed}: {p:6.2} dB -> {c:6.2} dB ({:+.3})", c - p);
        p_mean += p / 3.0;
        c_mean += c / 3.0;
    }
    println!("mean: {p_mean:.2} dB -> {c_mean:.2} dB ({:+.3})", c_mean - p_mean);
    Ok(())
}
