//! The benchmark harness: score a model over a directory of images.
//!
//! `evaluate_dir` applies the standard protocol to every PNG/BMP in a
//! directory — convert to luma, crop to a multiple of the scale, degrade,
//! super-resolve, PSNR against the original — and returns per-image records
//! plus the mean. `bicubic_dir` runs the same protocol with plain
//! interpolation, giving the baseline column of a results table. Reports
//! serialize to line-delimited text (`name psnr_db seconds`) for diffing.
//!
//! This is the engine behind the CLI's `eval` subcommand; point it at Set5
//! or any benchmark directory for the published protocol.
//!
//! ```bash
//! cargo run --release --example evaluate_directory
//! ```

use anchorsr::eval::bicubic_dir;
use anchorsr::synth::{synth_corpus, textured};
use anchorsr::{evaluate_dir, PipelineFlags, TrainConfig};

fn main() -> anchorsr::Result<()> {
    // A throwaway benchmark directory of held-out synthetic scenes.
    let dir = std::env::temp_dir().join("anchorsr_example_benchmark");
    std::fs::create_dir_all(&dir).map_err(|e| anchorsr::Error::io(&dir, e))?;
    for seed in 0..4u64 {
        let img = textured(72 + 6 * seed as usize, 72, 900 + seed).quantize();
        img.save(dir.join(format!("scene{seed}.png")))?;
    }

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

    let report = evaluate_dir(&model, &PipelineFlags::default(), &dir, None)?;
    let baseline = bicubic_dir(&model, &dir)?;

    println!("model report ({} images):", report.records.len());
    let mut text = Vec::new();
    report.write_text(&mut text).expect("writing to a Vec cannot fail");
    print!("{}", String::from_utf8_lossy(&text));

    println!("\nbicubic baseline:");
    let mut text = Vec::new();
    baseline.write_text(&mut text).expect("writing to a Vec cannot fail");
    print!("{}", String::from_utf8_lossy(&text));

    println!(
        "\nmean gain over bicubic: {:+.3} dB",
        report.mean_psnr() - baseline.mean_psnr()
    );
    Ok(())
}
