//! RGB <-> YCbCr conversion and luminance extraction.
//!
//! Two BT.601 variants are provided. [`rgb_to_ycbcr`] is the full-range
//! transform (black maps to Y=0, white to Y=255). The studio-swing variant
//! reproduces the 8-bit `rgb2ycbcr` convention of the classic SR benchmark
//! tooling (Y in [16, 235]); published PSNR tables for Set5/Set14/B100 were
//! produced with that luminance, so the evaluation harness defaults to it.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::image::{Colorspace, Image};

/// Which luminance definition the training/evaluation pipeline runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LumaConvention {
    /// 8-bit studio swing (benchmark-table compatible), Y in [16, 235].
    Bt601Studio,
    /// Full range, Y in [0, 255].
    Bt601Full,
}

impl LumaConvention {
    pub fn name(&self) -> &'static str {
        match self {
            LumaConvention::Bt601Studio => "studio",
            LumaConvention::Bt601Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "studio" => Ok(LumaConvention::Bt601Studio),
            "full" => Ok(LumaConvention::Bt601Full),
            other => Err(Error::invalid(format!(
                "unknown luma convention '{other}' (expected 'studio' or 'full')"
            ))),
        }
    }
}

// Full-range BT.601: offsets (0, 128, 128).
const FULL: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168_735_891_647_537_7, -0.331_264_108_352_462_3, 0.5],
    [0.5, -0.418_687_589_158_345_2, -0.081_312_410_841_654_79],
];

// Studio-swing BT.601 in 8-bit terms: offsets (16, 128, 128).
const STUDIO: [[f64; 3]; 3] = [
    [65.481 / 255.0, 128.553 / 255.0, 24.966 / 255.0],
    [-37.797 / 255.0, -74.203 / 255.0, 112.0 / 255.0],
    [112.0 / 255.0, -93.786 / 255.0, -18.214 / 255.0],
];

fn forward(img: &Image, m: &[[f64; 3]; 3], offset: [f64; 3]) -> Result<Image> {
    if img.colorspace() != Colorspace::Rgb {
        return Err(Error::invalid("expected an RGB image"));
    }
    let n = img.pixels();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let mut data = vec![0.0; 3 * n];
    let (y, rest) = data.split_at_mut(n);
    let (cb, cr) = rest.split_at_mut(n);
    for i in 0..n {
        y[i] = offset[0] + m[0][0] * r[i] + m[0][1] * g[i] + m[0][2] * b[i];
        cb[i] = offset[1] + m[1][0] * r[i] + m[1][1] * g[i] + m[1][2] * b[i];
        cr[i] = offset[2] + m[2][0] * r[i] + m[2][1] * g[i] + m[2][2] * b[i];
    }
    Image::new(img.width(), img.height(), 3, Colorspace::Ycbcr, data)
}

fn inverse(img: &Image, m: &[[f64; 3]; 3], offset: [f64; 3]) -> Result<Image> {
    if img.colorspace() != Colorspace::Ycbcr {
        return Err(Error::invalid("expected a YCbCr image"));
    }
    let fwd = Matrix3::from_fn(|i, j| m[i][j]);
    let inv = fwd.try_inverse().expect("BT.601 matrix is invertible");
    let n = img.pixels();
    let (y, cb, cr) = (img.plane(0), img.plane(1), img.plane(2));
    let mut data = vec![0.0; 3 * n];
    {
        let (r, rest) = data.split_at_mut(n);
        let (g, b) = rest.split_at_mut(n);
        for i in 0..n {
            let v = inv * Vector3::new(y[i] - offset[0], cb[i] - offset[1], cr[i] - offset[2]);
            r[i] = v[0];
            g[i] = v[1];
            b[i] = v[2];
        }
    }
    Image::new(img.width(), img.height(), 3, Colorspace::Rgb, data)
}

/// Full-range BT.601 RGB -> YCbCr.
pub fn rgb_to_ycbcr(img: &Image) -> Result<Image> {
    forward(img, &FULL, [0.0, 128.0, 128.0])
}

/// Inverse of [`rgb_to_ycbcr`].
pub fn ycbcr_to_rgb(img: &Image) -> Result<Image> {
    inverse(img, &FULL, [0.0, 128.0, 128.0])
}

/// Studio-swing (benchmark-compatible) RGB -> YCbCr.
pub fn rgb_to_ycbcr_studio(img: &Image) -> Result<Image> {
    forward(img, &STUDIO, [16.0, 128.0, 128.0])
}

/// Inverse of [`rgb_to_ycbcr_studio`].
pub fn ycbcr_studio_to_rgb(img: &Image) -> Result<Image> {
    inverse(img, &STUDIO, [16.0, 128.0, 128.0])
}

/// Extract the luminance plane under the given convention. Luma images pass
/// through unchanged; YCbCr images yield plane 0 regardless of convention.
pub fn luminance(img: &Image, conv: LumaConvention) -> Result<Image> {
    match img.colorspace() {
        Colorspace::Luma => Ok(img.clone()),
        Colorspace::Ycbcr => {
            Image::from_luma(img.width(), img.height(), img.plane(0).to_vec())
        }
        Colorspace::Rgb => {
            let ycbcr = match conv {
                LumaConvention::Bt601Studio => rgb_to_ycbcr_studio(img)?,
                LumaConvention::Bt601Full => rgb_to_ycbcr(img)?,
            };
            Image::from_luma(img.width(), img.height(), ycbcr.plane(0).to_vec())
        }
    }
}
