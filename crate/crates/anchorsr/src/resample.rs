//! Bicubic resampling with the conventions of the reference SR toolchain:
//! Keys kernel with a = -0.5, half-pixel center alignment, replicate edge
//! handling, normalized taps, and kernel widening (antialiasing) when
//! shrinking. Upscale/downscale by integer factors are thin wrappers.

use crate::error::{Error, Result};
use crate::image::{Image, Scale};

/// Keys bicubic kernel, a = -0.5.
pub fn cubic_kernel(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        (1.5 * x - 2.5) * x * x + 1.0
    } else if x < 2.0 {
        ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0
    } else {
        0.0
    }
}

/// Tap positions and normalized weights for one output coordinate.
struct Taps {
    start: isize,
    weights: Vec<f64>,
}

/// Per-axis resampling plan. `scale` is out_len / in_len; when shrinking the
/// kernel is dilated by 1/scale so the footprint covers the whole source cell.
fn plan_axis(in_len: usize, out_len: usize, antialias: bool) -> Vec<Taps> {
    let scale = out_len as f64 / in_len as f64;
    let (kernel_scale, width) = if antialias && scale < 1.0 {
        (scale, 4.0 / scale)
    } else {
        (1.0, 4.0)
    };
    let taps_per_out = width.ceil() as usize + 2;
    (0..out_len)
        .map(|i| {
            let u = (i as f64 + 0.5) / scale - 0.5;
            let start = (u - width / 2.0).floor() as isize;
            let mut weights: Vec<f64> = (0..taps_per_out)
                .map(|k| kernel_scale * cubic_kernel(kernel_scale * (u - (start + k as isize) as f64)))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Taps { start, weights }
        })
        .collect()
}

/// Resample one plane horizontally: (w, h) -> (out_w, h).
fn resample_rows(src: &[f64], w: usize, h: usize, plan: &[Taps]) -> Vec<f64> {
    let out_w = plan.len();
    let mut dst = vec![0.0; out_w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out_row = &mut dst[y * out_w..(y + 1) * out_w];
        for (x, taps) in plan.iter().enumerate() {
            let mut acc = 0.0;
            for (k, wgt) in taps.weights.iter().enumerate() {
                let sx = (taps.start + k as isize).clamp(0, w as isize - 1) as usize;
                acc += wgt * row[sx];
            }
            out_row[x] = acc;
        }
    }
    dst
}

/// Resample one plane vertically: (w, h) -> (w, out_h).
fn resample_cols(src: &[f64], w: usize, h: usize, plan: &[Taps]) -> Vec<f64> {
    let out_h = plan.len();
    let mut dst = vec![0.0; w * out_h];
    for (y, taps) in plan.iter().enumerate() {
        let out_row = &mut dst[y * w..(y + 1) * w];
        for (k, wgt) in taps.weights.iter().enumerate() {
            let sy = (taps.start + k as isize).clamp(0, h as isize - 1) as usize;
            let src_row = &src[sy * w..(sy + 1) * w];
            for x in 0..w {
                out_row[x] += wgt * src_row[x];
            }
        }
    }
    dst
}

/// Resize every channel to `out_w` x `out_h`. Shrinking applies the widened
/// (antialiased) kernel per axis; enlarging uses the plain 4-tap kernel.
pub fn bicubic_resize(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("resize target must be at least 1x1"));
    }
    let (w, h) = (img.width(), img.height());
    let row_plan = plan_axis(w, out_w, true);
    let col_plan = plan_axis(h, out_h, true);
    let mut data = Vec::with_capacity(img.channels() * out_w * out_h);
    for c in 0..img.channels() {
        let horizontal = resample_rows(img.plane(c), w, h, &row_plan);
        data.extend(resample_cols(&horizontal, out_w, h, &col_plan));
    }
    Image::new(out_w, out_h, img.channels(), img.colorspace(), data)
}

/// Enlarge by an integer factor.
pub fn upscale(img: &Image, scale: Scale) -> Result<Image> {
    let s = scale.factor();
    bicubic_resize(img, img.width() * s, img.height() * s)
}

/// The benchmark degradation: crop dimensions to a multiple of the factor,
/// then bicubic-downscale with the antialiased kernel.
pub fn degrade(img: &Image, scale: Scale) -> Result<Image> {
    let s = scale.factor();
    let cropped = img.crop_to_multiple(scale)?;
    bicubic_resize(&cropped, cropped.width() / s, cropped.height() / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Image {
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                3.0 * x as f64 + 2.0 * y as f64 + 5.0
            })
            .collect();
        Image::from_luma(w, h, data).unwrap()
    }

    #[test]
    fn kernel_interpolates_at_integer_offsets() {
        assert!((cubic_kernel(0.0) - 1.0).abs() < 1e-15);
        for x in [1.0, 2.0, 1.5_f64] {
            if x >= 2.0 || x == 1.0 {
                assert!(cubic_kernel(x).abs() < 1e-15);
            }
        }
        // Partition of unity at half-integer sample phase.
        let s: f64 = [-1.5, -0.5, 0.5, 1.5].iter().map(|&x| cubic_kernel(x)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_size_resize_is_identity() {
        let img = ramp(7, 5);
        let out = bicubic_resize(&img, 7, 5).unwrap();
        assert!(img.max_abs_diff(&out) < 1e-12);
    }

    #[test]
    fn constant_images_stay_constant() {
        let img = Image::constant(10, 8, 42.0);
        for (w, h) in [(30, 24), (5, 4), (13, 7)] {
            let out = bicubic_resize(&img, w, h).unwrap();
            let dev = out
                .plane(0)
                .iter()
                .map(|v| (v - 42.0).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12, "constant drifted by {dev} at {w}x{h}");
        }
    }

    #[test]
    fn resize_is_linear_in_the_input() {
        let a = ramp(9, 6);
        let b = Image::from_luma(
            9,
            6,
            (0..54).map(|i| ((i * 37) % 11) as f64).collect::<Vec<_>>(),
        )
        .unwrap();
        let combo_data: Vec<f64> = a
            .plane(0)
            .iter()
            .zip(b.plane(0))
            .map(|(x, y)| 2.0 * x - 0.5 * y)
            .collect();
        let combo = Image::from_luma(9, 6, combo_data).unwrap();

        let (ra, rb, rc) = (
            bicubic_resize(&a, 21, 14).unwrap(),
            bicubic_resize(&b, 21, 14).unwrap(),
            bicubic_resize(&combo, 21, 14).unwrap(),
        );
        let recomposed: Vec<f64> = ra
            .plane(0)
            .iter()
            .zip(rb.plane(0))
            .map(|(x, y)| 2.0 * x - 0.5 * y)
            .collect();
        let max = rc
            .plane(0)
            .iter()
            .zip(&recomposed)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-10);
    }

    #[test]
    fn upscale_reproduces_linear_ramps_in_the_interior() {
        let img = ramp(12, 10);
        let up = upscale(&img, Scale::new(3).unwrap()).unwrap();
        // Interior output pixel (x, y) samples source at (x+0.5)/3 - 0.5.
        let mut max = 0.0_f64;
        for y in 6..24 {
            for x in 6..30 {
                let sx = (x as f64 + 0.5) / 3.0 - 0.5;
                let sy = (y as f64 + 0.5) / 3.0 - 0.5;
                let expect = 3.0 * sx + 2.0 * sy + 5.0;
                max = max.max((up.at(0, x, y) - expect).abs());
            }
        }
        assert!(max < 1e-10, "ramp deviation {max}");
    }

    #[test]
    fn degrade_crops_then_downscales() {
        let img = ramp(10, 11);
        let lr = degrade(&img, Scale::new(3).unwrap()).unwrap();
        assert_eq!((lr.width(), lr.height()), (3, 3));
        // Antialiased downscale of a ramp is the ramp sampled at cell centers
        // away from the borders.
        let center = lr.at(0, 1, 1);
        let expect = 3.0 * (1.5 * 3.0 - 0.5) + 2.0 * (1.5 * 3.0 - 0.5) + 5.0;
        assert!((center - expect).abs() < 1e-10);
    }

    #[test]
    fn transpose_equivariance() {
        let img = ramp(8, 5);
        let t_data: Vec<f64> = (0..40)
            .map(|i| {
                let (x, y) = (i % 5, i / 5);
                img.at(0, y, x)
            })
            .collect();
        let transposed = Image::from_luma(5, 8, t_data).unwrap();
        let a = bicubic_resize(&img, 16, 10).unwrap();
        let b = bicubic_resize(&transposed, 10, 16).unwrap();
        let mut max = 0.0_f64;
        for y in 0..10 {
            for x in 0..16 {
                max = max.max((a.at(0, x, y) - b.at(0, y, x)).abs());
            }
        }
        assert!(max < 1e-12);
    }
}
