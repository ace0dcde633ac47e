//! Iterative back projection: make the output consistent with its input.
//!
//! Downscaling the super-resolved estimate should reproduce the
//! low-resolution input exactly — any difference is information the model
//! left on the table. Back projection upscales that residual and adds it
//! back, repeating while the consistency error shrinks. Each accepted
//! iteration provably reduces the residual, so the trace below is monotone.
//!
//! The correction is strongest for weak models (here: a bank with all-zero
//! regressors, i.e. plain interpolation) and nearly neutral for strong ones.
//!
//! ```bash
//! cargo run --release --example back_projection
//! ```

use anchorsr::pipeline::{back_project, SRModel, SRStage, StageRegressors};
use anchorsr::regression::RegressorBank;
use anchorsr::synth::{synth_corpus, textured};
use anchorsr::{degrade, psnr_luma, super_resolve, PipelineFlags, TrainConfig};

fn main() -> anchorsr::Result<()> {
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
    let (model, _) = anchorsr::train_model(&corpus, &cfg)?;

    // A deliberately weak sibling: same features and anchors, zero
    // regressors. Its output is exactly bicubic interpolation.
    let s0 = &model.stages[0];
    let weak = SRModel::new(
        model.luma,
        vec![SRStage {
            scale: s0.scale,
            window: s0.window,
            encoder: s0.encoder.clone(),
            regressors: StageRegressors::Plain(RegressorBank::zeros(
                s0.regressors.primary_bank().dict().clone(),
                s0.window * s0.window,
            )),
        }],
    )?;

    let gt = textured(90, 90, 777).quantize();
    let lr = degrade(&gt, model.scale())?;
    let border = model.scale().factor();
    let plain = PipelineFlags::default();
    let with_b = PipelineFlags { back_project: true, ..PipelineFlags::default() };

    for (name, m) in [("weak (zero bank)", &weak), ("trained", &model)] {
        let before = psnr_luma(&gt, &super_resolve(m, &lr, &plain)?.quantize(), border)?;
        let after = psnr_luma(&gt, &super_resolve(m, &lr, &with_b)?.quantize(), border)?;
        println!("{name:17} {before:6.2} dB -> {after:6.2} dB ({:+.3})", after - before);
    }

    // The consistency residual, iteration by iteration.
    let estimate = super_resolve(&weak, &lr, &plain)?;
    let (_, trace) = back_project(&estimate, &lr, model.scale(), 20, 1e-4)?;
    println!("residual trace (RMS gray levels per accepted iteration):");
    for (i, r) in trace.iter().enumerate() {
        println!("  iter {i:2}: {r:.5}");
    }
    Ok(())
}
