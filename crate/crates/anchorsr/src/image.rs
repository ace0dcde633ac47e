//! Planar floating-point images and 8-bit file I/O.
//!
//! All pixel math in this crate happens on `f64` samples in `[0, 255]`.
//! Values may drift outside that range during processing; clamping and
//! quantization happen only on export.

use std::path::Path;

use crate::error::{Error, Result};

/// Color space tag carried by every [`Image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colorspace {
    Rgb,
    Ycbcr,
    Luma,
}

/// Integer magnification factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale(u32);

impl Scale {
    /// Benchmark runs use 2, 3 or 4; the core accepts any factor >= 1
    /// (refinement stages run at scale 1).
    pub fn new(s: u32) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("scale factor must be >= 1"));
        }
        Ok(Scale(s))
    }

    pub fn factor(&self) -> usize {
        self.0 as usize
    }

    pub fn get(&self) -> u32 {
        self.0
    }
}

/// Planar image: one `f64` slice per channel, row-major within a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    colorspace: Colorspace,
    data: Vec<f64>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        colorspace: Colorspace,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be nonzero"));
        }
        let expected = match (channels, colorspace) {
            (1, Colorspace::Luma) | (3, Colorspace::Rgb) | (3, Colorspace::Ycbcr) => {
                width * height * channels
            }
            _ => {
                return Err(Error::invalid(format!(
                    "unsupported channel/colorspace combination: {channels} x {colorspace:?}"
                )))
            }
        };
        if data.len() != expected {
            return Err(Error::mismatch(format!(
                "data length {} != {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("image samples must be finite"));
        }
        Ok(Image { width, height, channels, colorspace, data })
    }

    /// Single-plane luminance image.
    pub fn from_luma(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Image::new(width, height, 1, Colorspace::Luma, data)
    }

    pub fn zeros(width: usize, height: usize, channels: usize, colorspace: Colorspace) -> Self {
        Image {
            width,
            height,
            channels,
            colorspace,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Image {
            width,
            height,
            channels: 1,
            colorspace: Colorspace::Luma,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn colorspace(&self) -> Colorspace {
        self.colorspace
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixels();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[c * self.width * self.height + y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, x: usize, y: usize, v: f64) {
        self.data[c * self.width * self.height + y * self.width + x] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rebuild with the same geometry but new samples.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Image::new(self.width, self.height, self.channels, self.colorspace, data)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for c in 0..self.channels {
            let plane = self.plane(c);
            for y in y0..y0 + h {
                data.extend_from_slice(&plane[y * self.width + x0..y * self.width + x0 + w]);
            }
        }
        Image::new(w, h, self.channels, self.colorspace, data)
    }

    /// Crop to the largest size divisible by `s` (anchored at the origin).
    pub fn crop_to_multiple(&self, s: Scale) -> Result<Image> {
        let f = s.factor();
        let w = (self.width / f) * f;
        let h = (self.height / f) * f;
        if w == 0 || h == 0 {
            return Err(Error::invalid(format!(
                "image {}x{} smaller than scale factor {f}",
                self.width, self.height
            )));
        }
        if w == self.width && h == self.height {
            return Ok(self.clone());
        }
        self.crop(0, 0, w, h)
    }

    /// Snap every sample to the 8-bit export grid (round half up, clamp).
    pub fn quantize(&self) -> Image {
        let data = self.data.iter().map(|&v| quantize_sample(v) as f64).collect();
        Image { data, ..self.clone() }
    }

    /// Largest absolute per-sample difference. Panics on geometry mismatch.
    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "image geometry mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Load a PNG or BMP file. 8-bit RGB(A) becomes an `Rgb` image, grayscale
    /// becomes `Luma`; samples land on the `[0, 255]` float grid.
    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::Image { path: path.into(), source: e })?;
        let img = match img {
            image::DynamicImage::ImageLuma8(g) => {
                let (w, h) = (g.width() as usize, g.height() as usize);
                let data = g.into_raw().into_iter().map(f64::from).collect();
                return Image::new(w, h, 1, Colorspace::Luma, data);
            }
            other => other.into_rgb8(),
        };
        let (w, h) = (img.width() as usize, img.height() as usize);
        let raw = img.into_raw();
        let n = w * h;
        let mut data = vec![0.0; n * 3];
        for (i, px) in raw.chunks_exact(3).enumerate() {
            data[i] = f64::from(px[0]);
            data[n + i] = f64::from(px[1]);
            data[2 * n + i] = f64::from(px[2]);
        }
        Image::new(w, h, 3, Colorspace::Rgb, data)
    }

    /// Write as PNG or BMP (picked by extension), quantizing to 8 bits.
    /// `Ycbcr` images must be converted back to RGB first.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.pixels();
        let (buf, color) = match self.colorspace {
            Colorspace::Luma => {
                let buf: Vec<u8> = self.plane(0).iter().map(|&v| quantize_sample(v)).collect();
                (buf, image::ExtendedColorType::L8)
            }
            Colorspace::Rgb => {
                let mut buf = vec![0u8; n * 3];
                for i in 0..n {
                    buf[3 * i] = quantize_sample(self.plane(0)[i]);
                    buf[3 * i + 1] = quantize_sample(self.plane(1)[i]);
                    buf[3 * i + 2] = quantize_sample(self.plane(2)[i]);
                }
                (buf, image::ExtendedColorType::Rgb8)
            }
            Colorspace::Ycbcr => {
                return Err(Error::invalid("convert YCbCr to RGB before saving"))
            }
        };
        image::save_buffer(path, &buf, self.width as u32, self.height as u32, color)
            .map_err(|e| Error::Image { path: path.into(), source: e })
    }
}

/// Round half up with clamp to `[0, 255]` — the export quantizer.
#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}
