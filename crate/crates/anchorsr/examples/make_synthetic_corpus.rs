//! Write the built-in synthetic scenes to disk as PNGs, so the CLI can be
//! exercised without downloading any benchmark data:
//!
//! ```bash
//! cargo run --release --example make_synthetic_corpus -- /tmp/corpus
//! cargo run --release -- train --input /tmp/corpus/train --output /tmp/model.asrm \
//!     --anchors 64 --samples 20000 --dict-samples 4000 --dict-iters 6 \
//!     --neighborhood 256 --no-augment --seed 42
//! cargo run --release -- eval --model /tmp/model.asrm --input /tmp/corpus/val --baseline
//! ```
//!
//! `train/` holds eight 60×60 training scenes, `val/` three held-out 45×45
//! scenes from a different seed.

use anchorsr::synth::synth_corpus;

fn main() -> anchorsr::Result<()> {
    let root = std::path::PathBuf::from(
        std::env::args().nth(1).unwrap_or_else(|| "synthetic_corpus".into()),
    );
    let train = root.join("train");
    let val = root.join("val");
    for dir in [&train, &val] {
        std::fs::create_dir_all(dir).map_err(|e| anchorsr::Error::io(dir, e))?;
    }
    for (i, img) in synth_corpus(8, 60, 60, 100).iter().enumerate() {
        img.save(train.join(format!("img{i:02}.png")))?;
    }
    for (i, img) in synth_corpus(3, 45, 45, 999).iter().enumerate() {
        img.save(val.join(format!("val{i:02}.png")))?;
    }
    println!("wrote 8 training and 3 validation scenes under {}", root.display());
    Ok(())
}
