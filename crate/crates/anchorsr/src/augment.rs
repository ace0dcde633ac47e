//! The 8-element symmetry group of the pixel grid (4 rotations x 2 flips),
//! used both to augment training sets and to symmetrize predictions.

use crate::image::Image;

/// Quarter-turn counterclockwise rotation. A WxH image becomes HxW.
pub fn rot90(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(img.channels() * w * h);
    for c in 0..img.channels() {
        let src = img.plane(c);
        let mut plane = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                plane[(w - 1 - x) * h + y] = src[y * w + x];
            }
        }
        data.extend(plane);
    }
    Image::new(h, w, img.channels(), img.colorspace(), data).expect("rotation preserves validity")
}

/// Horizontal mirror (left-right).
pub fn flip_h(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(img.channels() * w * h);
    for c in 0..img.channels() {
        let src = img.plane(c);
        let mut plane = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                plane[y * w + (w - 1 - x)] = src[y * w + x];
            }
        }
        data.extend(plane);
    }
    Image::new(w, h, img.channels(), img.colorspace(), data).expect("mirror preserves validity")
}

/// One of the eight grid symmetries: rotate counterclockwise by `rot` quarter
/// turns, then mirror horizontally if `flip` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transform {
    pub rot: u8,
    pub flip: bool,
}

impl Transform {
    pub const IDENTITY: Transform = Transform { rot: 0, flip: false };

    pub const ALL: [Transform; 8] = [
        Transform { rot: 0, flip: false },
        Transform { rot: 1, flip: false },
        Transform { rot: 2, flip: false },
        Transform { rot: 3, flip: false },
        Transform { rot: 0, flip: true },
        Transform { rot: 1, flip: true },
        Transform { rot: 2, flip: true },
        Transform { rot: 3, flip: true },
    ];

    pub fn apply(&self, img: &Image) -> Image {
        let mut out = img.clone();
        for _ in 0..self.rot {
            out = rot90(&out);
        }
        if self.flip {
            out = flip_h(&out);
        }
        out
    }

    /// The mirrored elements are involutions; pure rotations invert the turn
    /// count.
    pub fn inverse(&self) -> Transform {
        if self.flip {
            *self
        } else {
            Transform { rot: (4 - self.rot) % 4, flip: false }
        }
    }
}

/// All eight symmetric variants of each input, in transform order per image.
/// A 91-image set becomes 728 images.
pub fn augment_images(images: &[Image]) -> Vec<Image> {
    images
        .iter()
        .flat_map(|img| Transform::ALL.iter().map(|t| t.apply(img)))
        .collect()
}
