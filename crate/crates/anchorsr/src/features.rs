//! Low-resolution patch features: four gradient filter responses followed by
//! an energy-preserving linear projection fitted on training data.
//!
//! The filters are first and second order central differences along each
//! axis, applied to the bicubic-enlarged low-resolution luminance. Raw window
//! features concatenate all four responses; a projection fitted from the
//! uncentered second-moment matrix then compresses them to the smallest
//! dimension that retains the requested energy fraction (0.99 by default).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::image::Image;

/// Number of filter planes making up a raw feature.
pub const FILTER_COUNT: usize = 4;

/// Default energy fraction retained by the projection.
pub const PCA_ENERGY: f64 = 0.99;

fn clamp_idx(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// First and second order central differences along x and y with replicate
/// borders. Returns four planes in the order: d/dx, d/dy, d2/dx2, d2/dy2.
pub fn filter_responses(img: &Image) -> [Vec<f64>; 4] {
    let (w, h) = (img.width(), img.height());
    let src = img.plane(0);
    let at = |x: isize, y: isize| src[clamp_idx(y, h) * w + clamp_idx(x, w)];
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    let mut dxx = vec![0.0; w * h];
    let mut dyy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            dx[i] = at(x - 1, y) - at(x + 1, y);
            dy[i] = at(x, y - 1) - at(x, y + 1);
            dxx[i] = at(x - 2, y) - 2.0 * at(x, y) + at(x + 2, y);
            dyy[i] = at(x, y - 2) - 2.0 * at(x, y) + at(x, y + 2);
        }
    }
    [dx, dy, dxx, dyy]
}

/// Streaming accumulator for the uncentered second-moment matrix of raw
/// features, so a projection can be fitted without retaining the samples.
pub struct PcaAccumulator {
    moment: DMatrix<f64>,
    count: usize,
}

impl PcaAccumulator {
    pub fn new(dim: usize) -> Self {
        PcaAccumulator { moment: DMatrix::zeros(dim, dim), count: 0 }
    }

    pub fn dim(&self) -> usize {
        self.moment.nrows()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Accumulate a batch given as columns.
    pub fn add_batch(&mut self, cols: &DMatrix<f64>) {
        assert_eq!(cols.nrows(), self.dim());
        self.moment.gemm(1.0, cols, &cols.transpose(), 1.0);
        self.count += cols.ncols();
    }

    pub fn add(&mut self, raw: &[f64]) {
        let v = DMatrix::from_column_slice(raw.len(), 1, raw);
        self.add_batch(&v);
    }

    /// Fit the minimal projection capturing at least `min_energy` of the
    /// accumulated squared norm.
    pub fn fit(&self, min_energy: f64) -> Result<FeatureEncoder> {
        if self.count == 0 {
            return Err(Error::insufficient("no samples accumulated for the projection"));
        }
        if !(0.0..=1.0).contains(&min_energy) {
            return Err(Error::invalid("energy fraction must lie in [0, 1]"));
        }
        let eig = self.moment.clone().symmetric_eigen();
        let dim = self.dim();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("eigenvalues are finite")
                .then(a.cmp(&b))
        });
        let total: f64 = eig.eigenvalues.iter().map(|&v| v.max(0.0)).sum();
        if total <= 0.0 {
            return Err(Error::insufficient("feature set has zero energy"));
        }
        let mut kept = 0;
        let mut acc = 0.0;
        for &i in &order {
            kept += 1;
            acc += eig.eigenvalues[i].max(0.0);
            if acc >= min_energy * total {
                break;
            }
        }
        let mut basis = DMatrix::zeros(dim, kept);
        for (k, &i) in order[..kept].iter().enumerate() {
            let mut col = eig.eigenvectors.column(i).clone_owned();
            // Deterministic sign: first coordinate of meaningful magnitude
            // points positive.
            if let Some(lead) = col.iter().find(|v| v.abs() > 1e-12) {
                if *lead < 0.0 {
                    col.neg_mut();
                }
            }
            basis.set_column(k, &col);
        }
        Ok(FeatureEncoder { basis, energy: acc / total })
    }
}

/// Orthonormal linear projection from raw gradient features to the compact
/// feature space used for anchoring and regression.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    basis: DMatrix<f64>,
    energy: f64,
}

impl FeatureEncoder {
    pub fn from_parts(basis: DMatrix<f64>, energy: f64) -> Self {
        FeatureEncoder { basis, energy }
    }

    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Energy fraction captured on the fitting set.
    pub fn captured_energy(&self) -> f64 {
        self.energy
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn encode(&self, raw: &[f64]) -> Vec<f64> {
        assert_eq!(raw.len(), self.input_dim());
        let v = DVector::from_column_slice(raw);
        (self.basis.transpose() * v).as_slice().to_vec()
    }

    /// Encode a batch of raw features given as columns.
    pub fn encode_batch(&self, raw: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(raw.nrows(), self.input_dim());
        self.basis.transpose() * raw
    }

    /// Reconstruct raw features from encoded ones (orthonormal basis).
    pub fn decode_batch(&self, encoded: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * encoded
    }
}

/// Convenience: fit the projection directly from feature columns.
pub fn fit_pca(samples: &DMatrix<f64>, min_energy: f64) -> Result<FeatureEncoder> {
    let mut acc = PcaAccumulator::new(samples.nrows());
    acc.add_batch(samples);
    acc.fit(min_energy)
}
