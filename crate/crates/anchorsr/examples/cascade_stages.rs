//! Cascaded refinement: stack regression stages on the model's own output.
//!
//! The first stage upscales. Each further stage runs at scale 1: it is
//! trained on (previous stage output, ground truth) pairs, so it learns to
//! predict exactly the error the cascade still makes. Refinement stages keep
//! the upscaling stage's window size — the residual error spreads over the
//! same receptive field that produced it, and a smaller window would see
//! only noise.
//!
//! Stage training never looks ahead, so any prefix of a trained cascade is
//! itself a valid (shorter) model; this example scores each prefix.
//!
//! ```bash
//! cargo run --release --example cascade_stages
//! ```

use anchorsr::synth::{synth_corpus, textured};
use anchorsr::{degrade, psnr_luma, super_resolve, PipelineFlags, SRModel, TrainConfig};

fn main() -> anchorsr::Result<()> {
    let corpus = synth_corpus(8, 60, 60, 100);
    let cfg = TrainConfig {
        anchors: 64,
        samples: 20_000,
        stages: 2,
        dict_samples: 4_000,
        dict_iters: 6,
        neighborhood: 256,
        augment: false,
        seed: 42,
        ..TrainConfig::default()
    };
    let (full, report) = anchorsr::train_model(&corpus, &cfg)?;
    println!(
        "trained {} stages (training pool per stage: {:?})",
        full.stages.len(),
        report.pool_sizes
    );
    for (t, stage) in full.stages.iter().enumerate() {
        println!(
            "  stage {t}: scale ×{}, window {}px, {} anchors",
            stage.scale.get(),
            stage.window,
            stage.regressors.primary_bank().anchor_count(),
        );
    }

    let border = full.scale().factor();
    let holdout: Vec<_> = (0..3).map(|i| textured(90, 90, 900 + i).quantize()).collect();
    for n in 1..=full.stages.len() {
        let prefix = SRModel::new(full.luma, full.stages[..n].to_vec())?;
        let mut mean = 0.0;
        for gt in &holdout {
            let lr = degrade(gt, prefix.scale())?;
            let sr = super_resolve(&prefix, &lr, &PipelineFlags::default())?.quantize();
            mean += psnr_luma(gt, &sr, border)?;
        }
        println!("{n} stage(s): {:6.2} dB mean over {} held-out images", mean / 3.0, holdout.len());
    }
    Ok(())
}
