//! Randomized invariants: algebraic identities that must hold for every
//! input, exercised over generated images, vectors, and geometries.

use proptest::prelude::*;

use anchorsr::augment::Transform;
use anchorsr::dictionary::AnchorDictionary;
use anchorsr::image::{quantize_sample, Image, Scale};
use anchorsr::metrics::psnr_luma;
use anchorsr::patches::window_grid;
use anchorsr::resample::bicubic_resize;
use anchorsr::search::linear_lookup;
use nalgebra::DMatrix;

fn luma_image(max_side: usize) -> impl Strategy<Value = Image> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(0.0..255.0f64, w * h)
            .prop_map(move |data| Image::from_luma(w, h, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    // Resampling is affine: resize(a*X + b) == a*resize(X) + b.
    #[test]
    fn resize_commutes_with_affine_remapping(
        img in luma_image(16),
        ow in 1usize..24,
        oh in 1usize..24,
        a in 0.1..2.0f64,
        b in -40.0..40.0f64,
    ) {
        let remapped = img.with_data(img.data().iter().map(|v| a * v + b).collect()).unwrap();
        let lhs = bicubic_resize(&remapped, ow, oh).unwrap();
        let base = bicubic_resize(&img, ow, oh).unwrap();
        let rhs = base.with_data(base.data().iter().map(|v| a * v + b).collect()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-9 * (1.0 + a * 255.0 + b.abs()));
    }

    // Constant images resize to the same constant: kernel weights sum to one.
    #[test]
    fn resize_preserves_constant_images(
        w in 1usize..20, h in 1usize..20,
        ow in 1usize..30, oh in 1usize..30,
        v in 0.0..255.0f64,
    ) {
        let img = Image::from_luma(w, h, vec![v; w * h]).unwrap();
        let out = bicubic_resize(&img, ow, oh).unwrap();
        for &s in out.plane(0) {
            prop_assert!((s - v).abs() <= 1e-9 * (1.0 + v));
        }
    }

    #[test]
    fn psnr_is_symmetric(a in luma_image(12)) {
        let noisy = a
            .with_data(a.data().iter().enumerate().map(|(i, v)| (v + (i % 7) as f64).min(255.0)).collect())
            .unwrap();
        if a.width() > 2 && a.height() > 2 {
            let x = psnr_luma(&a, &noisy, 1).unwrap();
            let y = psnr_luma(&noisy, &a, 1).unwrap();
            prop_assert!((x - y).abs() <= 1e-9 || (x.is_infinite() && y.is_infinite()));
        }
    }

    // Every transform is a bijection on the pixel grid with an exact inverse.
    #[test]
    fn transforms_round_trip_exactly(img in luma_image(10), t_idx in 0usize..8) {
        let t = Transform::ALL[t_idx];
        let there = t.apply(&img);
        let back = t.inverse().apply(&there);
        prop_assert_eq!(back.data(), img.data());
        prop_assert_eq!((back.width(), back.height()), (img.width(), img.height()));
        // Pixel multiset is preserved, not just the sum.
        let mut a: Vec<u64> = img.data().iter().map(|v| v.to_bits()).collect();
        let mut b: Vec<u64> = there.data().iter().map(|v| v.to_bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    // Anchor matching on normalized correlation ignores positive scaling.
    #[test]
    fn anchor_lookup_is_scale_invariant(
        f in proptest::collection::vec(-1.0..1.0f64, 6),
        c in 0.001..50.0f64,
    ) {
        // Orthonormal atoms: trivially distinct, so construction cannot fail.
        let atoms = DMatrix::<f64>::identity(6, 5);
        let dict = AnchorDictionary::from_atoms(atoms).unwrap();
        let scaled: Vec<f64> = f.iter().map(|v| v * c).collect();
        prop_assert_eq!(linear_lookup(&dict, &f), linear_lookup(&dict, &scaled));
    }

    // Window grids cover every pixel, stay in bounds, and never duplicate.
    // Full coverage requires stride <= window, the only regime the pipeline
    // uses (stride s with a 3s window).
    #[test]
    fn window_grids_cover_the_plane(
        w in 3usize..40, h in 3usize..40,
        win in 1usize..12, stride in 1usize..6,
    ) {
        prop_assume!(win <= w && win <= h && stride <= win);
        let grid = window_grid(w, h, win, stride).unwrap();
        let mut covered = vec![false; w * h];
        let mut seen = std::collections::HashSet::new();
        for i in 0..grid.count() {
            let (x, y) = grid.origin(i);
            prop_assert!(x + win <= w && y + win <= h);
            prop_assert!(seen.insert((x, y)), "duplicate window origin");
            for dy in 0..win {
                for dx in 0..win {
                    covered[(y + dy) * w + x + dx] = true;
                }
            }
        }
        prop_assert!(covered.iter().all(|&c| c), "grid leaves pixels uncovered");
    }

    // Quantization rounds half up and clamps to the 8-bit range.
    #[test]
    fn quantization_rounds_half_up_and_clamps(v in -50.0..305.0f64) {
        let q = quantize_sample(v);
        let expect = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
        prop_assert_eq!(q, expect);
        if (0.0..=255.0).contains(&v) {
            prop_assert!((q as f64 - v).abs() <= 0.5);
        }
    }

    // Degrade then upscale is size-preserving and never drifts the mean far.
    #[test]
    fn degrade_upscale_round_trip_keeps_geometry(img in luma_image(18)) {
        let scale = Scale::new(3).unwrap();
        if img.width() >= 3 && img.height() >= 3 {
            let cropped = img.crop_to_multiple(scale).unwrap();
            let lr = anchorsr::resample::degrade(&cropped, scale).unwrap();
            prop_assert_eq!(lr.width() * 3, cropped.width());
            prop_assert_eq!(lr.height() * 3, cropped.height());
            let up = anchorsr::resample::upscale(&lr, scale).unwrap();
            prop_assert_eq!((up.width(), up.height()), (cropped.width(), cropped.height()));
            let mean = |im: &Image| im.plane(0).iter().sum::<f64>() / im.pixels() as f64;
            prop_assert!((mean(&up) - mean(&cropped)).abs() <= 30.0);
        }
    }
}
