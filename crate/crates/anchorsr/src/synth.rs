//! Deterministic synthetic luminance images for tests, examples, and the
//! self-contained benchmark mode. All generators are pure functions of their
//! seed, so fixtures never need to ship with the crate.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::image::Image;

fn clamp255(v: f64) -> f64 {
    v.clamp(0.0, 255.0)
}

/// Structured texture: oriented sinusoids over a midtone base. Most of the
/// energy sits in a low band a 3x downscale preserves, plus a weaker high
/// band (wavelengths ~7-11 px) that antialiased downscaling attenuates —
/// the detail a trained model must restore and plain interpolation cannot.
pub fn textured(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5eed_7e57);
    let waves: Vec<(f64, f64, f64, f64)> = (0..10)
        .map(|k| {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let (freq, amp) = if k < 6 {
                (rng.random_range(0.03..0.08), rng.random_range(8.0..24.0))
            } else {
                (rng.random_range(0.09..0.15), rng.random_range(8.0..20.0))
            };
            (
                freq * theta.cos(),
                freq * theta.sin(),
                rng.random_range(0.0..std::f64::consts::TAU),
                amp,
            )
        })
        .collect();
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let s: f64 = waves
                .iter()
                .map(|&(fx, fy, ph, amp)| amp * (std::f64::consts::TAU * (fx * x + fy * y) + ph).sin())
                .sum();
            clamp255(128.0 + s)
        })
        .collect();
    Image::from_luma(w, h, data).unwrap()
}

/// Soft blobs on a gradient background.
pub fn blobs(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xb10b);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..16)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(1.0..4.0),
                rng.random_range(-90.0..90.0),
            )
        })
        .collect();
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let base = 60.0 + 120.0 * x / w.max(1) as f64;
            let s: f64 = bumps
                .iter()
                .map(|&(cx, cy, r, amp)| {
                    let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                    amp * (-d2 / (2.0 * r * r)).exp()
                })
                .sum();
            clamp255(base + s)
        })
        .collect();
    Image::from_luma(w, h, data).unwrap()
}

/// Piecewise-constant regions split by random lines, lightly smoothed so the
/// edges carry realistic transition profiles.
pub fn edges(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xed6e);
    let lines: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            (
                theta.cos(),
                theta.sin(),
                rng.random_range(0.0..(w + h) as f64),
                rng.random_range(15.0..55.0),
            )
        })
        .collect();
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let mut v = 120.0;
            for &(nx, ny, c, amp) in &lines {
                let d = nx * x + ny * y - c;
                // Smooth step of width under a pixel: crisp but not aliased.
                v += amp * (d / 0.8).tanh();
            }
            clamp255(v)
        })
        .collect();
    Image::from_luma(w, h, data).unwrap()
}

/// Plain linear ramp, handy for analytic checks.
pub fn ramp(w: usize, h: usize) -> Image {
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            clamp255(20.0 + 2.0 * x + 1.5 * y)
        })
        .collect();
    Image::from_luma(w, h, data).unwrap()
}

/// A mixed corpus cycling through the generators with distinct seeds.
pub fn synth_corpus(n: usize, w: usize, h: usize, seed: u64) -> Vec<Image> {
    (0..n)
        .map(|i| {
            let s = seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64);
            match i % 3 {
                0 => textured(w, h, s),
                1 => edges(w, h, s),
                _ => blobs(w, h, s),
            }
        })
        .collect()
}
