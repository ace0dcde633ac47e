//! Two-level anchor search: sublinear lookups with near-identical output.
//!
//! Every window must find its nearest anchor (by absolute cosine
//! similarity). A linear scan costs K dot products per window; with
//! thousands of anchors that dominates inference. The two-level index
//! clusters anchors under ~√K centroids and assigns every anchor to its 4
//! nearest centroid lists (redundancy absorbs boundary errors), so a lookup
//! scans the centroids plus one list — about √K + 4·√K work instead of K.
//!
//! A coverage pass guarantees every anchor appears in at least one list, so
//! on small dictionaries the index saturates and agrees with the linear scan
//! exactly.
//!
//! ```bash
//! cargo run --release --example hierarchical_search
//! ```

use anchorsr::patches::build_training_set;
use anchorsr::search::{linear_lookup_counted, HierIndex, HIER_BRANCH};
use anchorsr::synth::{synth_corpus, textured};
use anchorsr::{degrade, psnr_luma, super_resolve, PipelineFlags, SearchMode, TrainConfig};

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
    let stage = &model.stages[0];
    let dict = stage.regressors.primary_bank().dict();

    // Probe the index with real encoded features from a held-out image.
    let index = HierIndex::build(dict, HIER_BRANCH, 17)?;
    let probe = vec![textured(90, 90, 777)];
    let pool = build_training_set(&probe, model.scale(), 3, 5_000, &stage.encoder, false, 17)?;
    let mut hier_worst = 0;
    let mut linear_cost = 0;
    let mut agree = 0usize;
    let mut total = 0usize;
    for feature in pool.features.chunks_exact(pool.dim) {
        let f: Vec<f64> = feature.iter().map(|&v| v as f64).collect();
        let (h, hc) = index.lookup_counted(&f);
        let (l, lc) = linear_lookup_counted(dict, &f);
        hier_worst = hier_worst.max(hc);
        linear_cost = lc;
        agree += usize::from(h == l);
        total += 1;
    }
    println!(
        "K = {} anchors, {} centroids; worst lookup cost {} vs {} linear",
        dict.len(),
        index.centroid_count(),
        hier_worst,
        linear_cost,
    );
    println!(
        "exact-match rate over {total} real queries: {:.1}% (covers all anchors: {})",
        100.0 * agree as f64 / total as f64,
        index.covers_all_anchors(),
    );

    // What the occasional mismatch costs end to end.
    let border = model.scale().factor();
    let gt = textured(90, 90, 778).quantize();
    let lr = degrade(&gt, model.scale())?;
    let linear_flags = PipelineFlags::default();
    let hier_flags = PipelineFlags { search: SearchMode::Hierarchical, ..PipelineFlags::default() };
    let p_lin = psnr_luma(&gt, &super_resolve(&model, &lr, &linear_flags)?.quantize(), border)?;
    let p_hier = psnr_luma(&gt, &super_resolve(&model, &lr, &hier_flags)?.quantize(), border)?;
    println!("PSNR linear {p_lin:.3} dB, hierarchical {p_hier:.3} dB ({:+.3})", p_hier - p_lin);
    Ok(())
}
