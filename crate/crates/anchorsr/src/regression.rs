//! Per-anchor ridge regressors. Each anchor owns a projection matrix fitted
//! on a neighborhood of training material; at test time a feature is matched
//! to its best anchor and multiplied through that anchor's projection.
//!
//! Neighborhood flavors:
//! - atom neighborhoods with least-squares high-resolution counterparts
//!   ([`train_bank_atoms`]),
//! - raw training samples most correlated with the anchor
//!   ([`train_bank_samples`]),
//! - training samples scored jointly on anchor and context similarity,
//!   yielding one projection per (anchor, context) cell
//!   ([`train_bank_context`]).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::dictionary::{sparse_code_all, spherical_kmeans, AnchorDictionary};
use crate::error::{Error, Result};
use crate::patches::TrainingSet;

/// Ridge strength used throughout training; features are normalized per
/// sample, so the same value serves every neighborhood flavor.
pub const RIDGE_LAMBDA: f64 = 0.1;

/// Neighborhood size for sample-based training.
pub const SAMPLE_NEIGHBORHOOD: usize = 2048;

/// Neighborhood size per (anchor, context) cell.
pub const CONTEXT_NEIGHBORHOOD: usize = 1024;

/// Number of context cells.
pub const CONTEXT_COUNT: usize = 4;

/// Anchor similarity carries ten times the weight of context similarity.
pub const CONTEXT_ANCHOR_WEIGHT: f64 = 10.0;

/// Condition numbers above this raise the ill-conditioning flag.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Closed-form ridge regression from neighborhood columns `nl` (features)
/// to `nh` (targets): the returned matrix `p` minimizes the ridge objective,
/// so `p * x` is the prediction for a feature `x`. Solved through the
/// feature-space Gram matrix, which is exact for positive `lambda` and far
/// smaller than the sample-space system. The flag reports an ill-conditioned
/// system (condition number above 1e12).
pub fn ridge_project(
    nl: &DMatrix<f64>,
    nh: &DMatrix<f64>,
    lambda: f64,
) -> Result<(DMatrix<f64>, bool)> {
    if nl.ncols() != nh.ncols() {
        return Err(Error::mismatch(format!(
            "feature and target neighborhoods differ: {} vs {} columns",
            nl.ncols(),
            nh.ncols()
        )));
    }
    if nl.ncols() == 0 {
        return Err(Error::insufficient("empty neighborhood"));
    }
    if lambda < 0.0 {
        return Err(Error::invalid("ridge strength must be non-negative"));
    }
    let d = nl.nrows();
    let mut a = nl * nl.transpose();
    for i in 0..d {
        a[(i, i)] += lambda;
    }
    let eig = a.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let flagged = min_ev <= 0.0 || max_ev / min_ev > CONDITION_LIMIT;

    let b = nl * nh.transpose();
    let p = match Cholesky::new(a) {
        Some(chol) => chol.solve(&b).transpose(),
        None => {
            // Spectral pseudo-solve for the degenerate case.
            let thr = max_ev.max(0.0) * 1e-14;
            let mut z = DMatrix::zeros(d, nh.nrows());
            for i in 0..d {
                let ev = eig.eigenvalues[i];
                if ev > thr {
                    let v = eig.eigenvectors.column(i);
                    let coef = v.transpose() * &b / ev;
                    for c in 0..nh.nrows() {
                        for r in 0..d {
                            z[(r, c)] += v[r] * coef[(0, c)];
                        }
                    }
                }
            }
            z.transpose()
        }
    };
    Ok((p, flagged))
}

/// Anchors plus one projection per anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorBank {
    dict: AnchorDictionary,
    projections: Vec<DMatrix<f64>>,
    lambda: f64,
    flagged_anchors: usize,
}

impl RegressorBank {
    pub fn from_parts(
        dict: AnchorDictionary,
        projections: Vec<DMatrix<f64>>,
        lambda: f64,
        flagged_anchors: usize,
    ) -> Result<Self> {
        if projections.len() != dict.len() {
            return Err(Error::mismatch("one projection per anchor required"));
        }
        let target_dim = projections[0].nrows();
        for p in &projections {
            if p.ncols() != dict.dim() || p.nrows() != target_dim {
                return Err(Error::mismatch("projection dimensions are inconsistent"));
            }
        }
        Ok(RegressorBank { dict, projections, lambda, flagged_anchors })
    }

    /// All-zero projections: predicts a zero residual for every feature.
    pub fn zeros(dict: AnchorDictionary, target_dim: usize) -> Self {
        let p = vec![DMatrix::zeros(target_dim, dict.dim()); dict.len()];
        RegressorBank { dict, projections: p, lambda: 0.0, flagged_anchors: 0 }
    }

    pub fn dict(&self) -> &AnchorDictionary {
        &self.dict
    }

    pub fn anchor_count(&self) -> usize {
        self.dict.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.dict.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.projections[0].nrows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Anchors whose ridge systems tripped the conditioning flag.
    pub fn flagged_anchors(&self) -> usize {
        self.flagged_anchors
    }

    pub fn projection(&self, j: usize) -> &DMatrix<f64> {
        &self.projections[j]
    }

    pub fn projections(&self) -> &[DMatrix<f64>] {
        &self.projections
    }

    /// Exhaustive anchor match: highest inner product, ties to the lowest
    /// index.
    pub fn nearest_anchor(&self, feature: &[f64]) -> usize {
        let f = DVector::from_column_slice(feature);
        let sims = self.dict.atoms().transpose() * &f;
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for j in 0..sims.len() {
            if sims[j] > best_v {
                best_v = sims[j];
                best = j;
            }
        }
        best
    }

    /// Predict the target for one raw (unnormalized) encoded feature.
    pub fn predict(&self, feature: &[f64]) -> Vec<f64> {
        let j = self.nearest_anchor(feature);
        let f = DVector::from_column_slice(feature);
        (&self.projections[j] * f).as_slice().to_vec()
    }
}

/// Bounded selection of the highest-scoring sample indices. Root of the
/// internal heap is the weakest kept entry; ties prefer lower indices.
struct TopK {
    cap: usize,
    heap: Vec<(f32, u32)>,
}

fn weaker(a: (f32, u32), b: (f32, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 > b.1)
}

impl TopK {
    fn new(cap: usize) -> Self {
        TopK { cap, heap: Vec::with_capacity(cap) }
    }

    fn push(&mut self, sim: f32, idx: u32) {
        if self.heap.len() < self.cap {
            self.heap.push((sim, idx));
            let mut i = self.heap.len() - 1;
            while i > 0 {
                let parent = (i - 1) / 2;
                if weaker(self.heap[i], self.heap[parent]) {
                    self.heap.swap(i, parent);
                    i = parent;
                } else {
                    break;
                }
            }
        } else if weaker(self.heap[0], (sim, idx)) {
            self.heap[0] = (sim, idx);
            let mut i = 0;
            loop {
                let (l, r) = (2 * i + 1, 2 * i + 2);
                let mut smallest = i;
                if l < self.heap.len() && weaker(self.heap[l], self.heap[smallest]) {
                    smallest = l;
                }
                if r < self.heap.len() && weaker(self.heap[r], self.heap[smallest]) {
                    smallest = r;
                }
                if smallest == i {
                    break;
                }
                self.heap.swap(i, smallest);
                i = smallest;
            }
        }
    }

    /// Indices ordered by similarity descending, index ascending.
    fn into_sorted(self) -> Vec<u32> {
        let mut v = self.heap;
        v.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).expect("similarities are finite").then(a.1.cmp(&b.1))
        });
        v.into_iter().map(|(_, i)| i).collect()
    }
}

fn atoms_f32(dict: &AnchorDictionary) -> DMatrix<f32> {
    dict.atoms().map(|v| v as f32)
}

const SCAN_CHUNK: usize = 16384;

/// For each anchor, the `nbhd` pool samples with the highest inner product.
fn neighborhoods_by_similarity(
    dict: &AnchorDictionary,
    pool: &TrainingSet,
    nbhd: usize,
) -> Vec<Vec<u32>> {
    let anchors = atoms_f32(dict);
    let k = dict.len();
    let n = pool.len();
    let mut tops: Vec<TopK> = (0..k).map(|_| TopK::new(nbhd)).collect();
    let mut start = 0usize;
    while start < n {
        let len = SCAN_CHUNK.min(n - start);
        let chunk = DMatrix::from_column_slice(
            pool.dim,
            len,
            &pool.features[start * pool.dim..(start + len) * pool.dim],
        );
        let sims = anchors.transpose() * chunk;
        for j in 0..k {
            let top = &mut tops[j];
            for c in 0..len {
                top.push(sims[(j, c)], (start + c) as u32);
            }
        }
        start += len;
    }
    tops.into_iter().map(TopK::into_sorted).collect()
}

fn gather_columns_f64(data: &[f32], dim: usize, indices: &[u32]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, indices.len());
    for (c, &i) in indices.iter().enumerate() {
        let src = &data[i as usize * dim..(i as usize + 1) * dim];
        for (r, &v) in src.iter().enumerate() {
            m[(r, c)] = v as f64;
        }
    }
    m
}

fn bank_from_neighborhoods(
    dict: &AnchorDictionary,
    pool: &TrainingSet,
    neighborhoods: &[Vec<u32>],
    lambda: f64,
) -> Result<RegressorBank> {
    let mut projections = Vec::with_capacity(dict.len());
    let mut flagged = 0;
    for hood in neighborhoods {
        if hood.is_empty() {
            return Err(Error::insufficient("an anchor received no neighbors"));
        }
        let nl = gather_columns_f64(&pool.features, pool.dim, hood);
        let nh = gather_columns_f64(&pool.targets, pool.target_dim, hood);
        let (p, flag) = ridge_project(&nl, &nh, lambda)?;
        if flag {
            flagged += 1;
        }
        projections.push(p);
    }
    RegressorBank::from_parts(dict.clone(), projections, lambda, flagged)
}

/// Neighborhoods drawn from the dictionary itself: each anchor regresses
/// from its most similar atoms onto their least-squares high-resolution
/// counterparts, which are fitted from the pool's sparse codes.
pub fn train_bank_atoms(
    pool: &TrainingSet,
    dict: &AnchorDictionary,
    lambda: f64,
    nbhd: usize,
    sparsity: usize,
) -> Result<RegressorBank> {
    if pool.is_empty() {
        return Err(Error::insufficient("empty training pool"));
    }
    let k = dict.len();
    let d = dict.dim();
    let t = pool.target_dim;
    // Sparse-code the pool over the dictionary, accumulating the code Gram
    // and code/target cross matrix chunk by chunk.
    let mut code_gram = DMatrix::<f64>::zeros(k, k);
    let mut code_targets = DMatrix::<f64>::zeros(k, t);
    let n = pool.len();
    let mut start = 0usize;
    while start < n {
        let len = SCAN_CHUNK.min(n - start);
        let chunk = DMatrix::from_iterator(
            d,
            len,
            pool.features[start * d..(start + len) * d].iter().map(|&v| v as f64),
        );
        let codes = sparse_code_all(dict.atoms(), &chunk, sparsity);
        for (c, code) in codes.iter().enumerate() {
            let target = pool.target(start + c);
            for (&ja, &va) in code.indices.iter().zip(&code.values) {
                for (&jb, &vb) in code.indices.iter().zip(&code.values) {
                    code_gram[(ja, jb)] += va * vb;
                }
                for (ti, &tv) in target.iter().enumerate() {
                    code_targets[(ja, ti)] += va * tv as f64;
                }
            }
        }
        start += len;
    }
    let jitter = 1e-8 * code_gram.trace().max(1e-12) / k as f64;
    for i in 0..k {
        code_gram[(i, i)] += jitter;
    }
    let counterparts = match Cholesky::new(code_gram.clone()) {
        Some(chol) => chol.solve(&code_targets).transpose(),
        None => return Err(Error::insufficient("sparse codes do not span the dictionary")),
    };

    // Atom neighborhoods by mutual similarity.
    let gram = dict.atoms().transpose() * dict.atoms();
    let m = nbhd.min(k);
    let mut projections = Vec::with_capacity(k);
    let mut flagged = 0;
    for j in 0..k {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            gram[(j, b)]
                .partial_cmp(&gram[(j, a)])
                .expect("similarities are finite")
                .then(a.cmp(&b))
        });
        let chosen = &order[..m];
        let mut nl = DMatrix::zeros(d, m);
        let mut nh = DMatrix::zeros(t, m);
        for (c, &idx) in chosen.iter().enumerate() {
            nl.set_column(c, &dict.atoms().column(idx));
            nh.set_column(c, &counterparts.column(idx));
        }
        let (p, flag) = ridge_project(&nl, &nh, lambda)?;
        if flag {
            flagged += 1;
        }
        projections.push(p);
    }
    RegressorBank::from_parts(dict.clone(), projections, lambda, flagged)
}

/// Neighborhoods drawn from the training pool: each anchor regresses from
/// the `nbhd` samples most correlated with it.
pub fn train_bank_samples(
    pool: &TrainingSet,
    dict: &AnchorDictionary,
    lambda: f64,
    nbhd: usize,
) -> Result<RegressorBank> {
    if pool.is_empty() {
        return Err(Error::insufficient("empty training pool"));
    }
    let hoods = neighborhoods_by_similarity(dict, pool, nbhd);
    bank_from_neighborhoods(dict, pool, &hoods, lambda)
}

/// One bank per context cell plus the context centroids that route to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel {
    pub centroids: DMatrix<f64>,
    pub banks: Vec<RegressorBank>,
}

impl ContextModel {
    pub fn context_count(&self) -> usize {
        self.banks.len()
    }

    /// Highest-similarity centroid for a context descriptor, ties low.
    pub fn nearest_context(&self, context: &[f64]) -> usize {
        let f = DVector::from_column_slice(context);
        let sims = self.centroids.transpose() * &f;
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for c in 0..sims.len() {
            if sims[c] > best_v {
                best_v = sims[c];
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, feature: &[f64], context: &[f64]) -> Vec<f64> {
        self.banks[self.nearest_context(context)].predict(feature)
    }
}

/// Context-aware training: cluster context descriptors into `n_contexts`
/// cells, then fit each (anchor, context) projection on the samples scoring
/// highest under a 10:1 blend of anchor and context similarity.
pub fn train_bank_context(
    pool: &TrainingSet,
    dict: &AnchorDictionary,
    lambda: f64,
    nbhd: usize,
    n_contexts: usize,
    seed: u64,
) -> Result<ContextModel> {
    let Some(ctx_data) = &pool.context else {
        return Err(Error::invalid("training pool carries no context descriptors"));
    };
    let n = pool.len();
    let d = pool.dim;
    // Fit centroids on a capped subsample to keep the clustering cheap.
    let fit_n = n.min(100_000);
    let step = (n / fit_n).max(1);
    let mut sub = DMatrix::zeros(d, n.div_ceil(step));
    for (c, i) in (0..n).step_by(step).enumerate() {
        for r in 0..d {
            sub[(r, c)] = ctx_data[i * d + r] as f64;
        }
    }
    let centroids = spherical_kmeans(&sub, n_contexts, 20, seed)?;
    let centroids_f32 = centroids.map(|v| v as f32);
    let anchors = atoms_f32(dict);
    let k = dict.len();

    let wa = (CONTEXT_ANCHOR_WEIGHT / (CONTEXT_ANCHOR_WEIGHT + 1.0)) as f32;
    let wc = (1.0 / (CONTEXT_ANCHOR_WEIGHT + 1.0)) as f32;
    let mut tops: Vec<TopK> = (0..k * n_contexts).map(|_| TopK::new(nbhd)).collect();
    let mut start = 0usize;
    while start < n {
        let len = SCAN_CHUNK.min(n - start);
        let feat_chunk =
            DMatrix::from_column_slice(d, len, &pool.features[start * d..(start + len) * d]);
        let ctx_chunk =
            DMatrix::from_column_slice(d, len, &ctx_data[start * d..(start + len) * d]);
        let sim_a = anchors.transpose() * feat_chunk;
        let sim_c = centroids_f32.transpose() * ctx_chunk;
        for j in 0..k {
            for ctx in 0..n_contexts {
                let top = &mut tops[j * n_contexts + ctx];
                for c in 0..len {
                    let score = wa * sim_a[(j, c)] + wc * sim_c[(ctx, c)];
                    top.push(score, (start + c) as u32);
                }
            }
        }
        start += len;
    }

    let mut hoods: Vec<Vec<Vec<u32>>> = vec![Vec::new(); n_contexts];
    let mut iter = tops.into_iter();
    for _j in 0..k {
        for h in hoods.iter_mut() {
            h.push(iter.next().expect("k * n_contexts heaps").into_sorted());
        }
    }
    let banks = hoods
        .iter()
        .map(|h| bank_from_neighborhoods(dict, pool, h, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContextModel { centroids, banks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_cols(d: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DMatrix::from_fn(d, n, |_, _| rng.random::<f64>() - 0.5)
    }

    fn brute_force_prediction(
        nl: &DMatrix<f64>,
        nh: &DMatrix<f64>,
        lambda: f64,
        x: &DVector<f64>,
    ) -> DVector<f64> {
        let n = nl.ncols();
        let mut g = nl.transpose() * nl;
        for i in 0..n {
            g[(i, i)] += lambda;
        }
        let rhs = nl.transpose() * x;
        let c = Cholesky::new(g).expect("regularized Gram is positive definite").solve(&rhs);
        nh * c
    }

    #[test]
    fn gram_solve_matches_sample_space_solve() {
        for (d, n, seed) in [(8, 40, 1u64), (12, 6, 2), (5, 5, 3)] {
            let nl = random_cols(d, n, seed);
            let nh = random_cols(3, n, seed + 100);
            let (p, _) = ridge_project(&nl, &nh, 0.1).unwrap();
            for t in 0..5 {
                let x = DVector::from_fn(d, |i, _| ((i + t) as f64 * 0.731).sin());
                let direct = brute_force_prediction(&nl, &nh, 0.1, &x);
                let fast = &p * &x;
                assert!((direct - fast).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn projection_norm_shrinks_as_lambda_grows() {
        let nl = random_cols(6, 30, 4);
        let nh = random_cols(4, 30, 5);
        let mut last = f64::INFINITY;
        for lambda in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let (p, _) = ridge_project(&nl, &nh, lambda).unwrap();
            let norm = p.norm();
            assert!(norm <= last + 1e-12, "norm grew at lambda {lambda}");
            last = norm;
        }
    }

    #[test]
    fn column_permutation_leaves_the_projection_unchanged() {
        let nl = random_cols(5, 12, 6);
        let nh = random_cols(3, 12, 7);
        let perm: Vec<usize> = vec![11, 3, 7, 0, 9, 1, 10, 2, 8, 4, 6, 5];
        let mut nl_p = DMatrix::zeros(5, 12);
        let mut nh_p = DMatrix::zeros(3, 12);
        for (c, &src) in perm.iter().enumerate() {
            nl_p.set_column(c, &nl.column(src));
            nh_p.set_column(c, &nh.column(src));
        }
        let (a, _) = ridge_project(&nl, &nh, 0.1).unwrap();
        let (b, _) = ridge_project(&nl_p, &nh_p, 0.1).unwrap();
        assert!((a - b).abs().max() < 1e-9);
    }

    #[test]
    fn degenerate_systems_raise_the_flag() {
        // Rank-one neighborhood, vanishing ridge.
        let col = DVector::from_fn(6, |i, _| (i as f64 + 1.0) / 10.0);
        let mut nl = DMatrix::zeros(6, 8);
        for c in 0..8 {
            nl.set_column(c, &(&col * (c as f64 + 1.0)));
        }
        let nh = random_cols(2, 8, 8);
        let (p, flagged) = ridge_project(&nl, &nh, 0.0).unwrap();
        assert!(flagged);
        assert!(p.iter().all(|v| v.is_finite()));
        let (_, flagged_ridge) = ridge_project(&nl, &nh, 0.1).unwrap();
        assert!(!flagged_ridge);
    }

    fn synthetic_pool(d: usize, t: usize, n: usize, seed: u64) -> (TrainingSet, DMatrix<f64>) {
        // Targets are a fixed linear map of unit-norm features.
        let map = random_cols(t, d, seed);
        let mut rng = ChaCha12Rng::seed_from_u64(seed + 1);
        let mut features = Vec::with_capacity(n * d);
        let mut targets = Vec::with_capacity(n * t);
        for _ in 0..n {
            let mut f = DVector::from_fn(d, |_, _| rng.random::<f64>() - 0.5);
            f /= f.norm();
            let y = &map * &f;
            features.extend(f.iter().map(|&v| v as f32));
            targets.extend(y.iter().map(|&v| v as f32));
        }
        (TrainingSet { dim: d, target_dim: t, features, targets, context: None }, map)
    }

    #[test]
    fn sample_neighborhood_bank_learns_a_linear_map() {
        let (pool, map) = synthetic_pool(8, 4, 3000, 10);
        let sub = DMatrix::from_iterator(
            8,
            500,
            pool.features[..500 * 8].iter().map(|&v| v as f64),
        );
        let dict = crate::dictionary::kmeans_train(&sub, 8, 10, 3).unwrap();
        let bank = train_bank_samples(&pool, &dict, 1e-6, 512).unwrap();
        assert_eq!(bank.anchor_count(), 8);
        assert_eq!(bank.target_dim(), 4);
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..20 {
            let mut f = DVector::from_fn(8, |_, _| rng.random::<f64>() - 0.5);
            f /= f.norm();
            let pred = DVector::from_column_slice(&bank.predict(f.as_slice()));
            let truth = &map * &f;
            assert!((pred - truth).abs().max() < 0.05);
        }
    }

    #[test]
    fn atom_neighborhood_bank_learns_a_linear_map() {
        let (pool, map) = synthetic_pool(8, 4, 3000, 20);
        let sub = DMatrix::from_iterator(
            8,
            500,
            pool.features[..500 * 8].iter().map(|&v| v as f64),
        );
        let dict = crate::dictionary::kmeans_train(&sub, 16, 10, 4).unwrap();
        let bank = train_bank_atoms(&pool, &dict, 1e-6, 16, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(98);
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let mut f = DVector::from_fn(8, |_, _| rng.random::<f64>() - 0.5);
            f /= f.norm();
            let pred = DVector::from_column_slice(&bank.predict(f.as_slice()));
            let truth = &map * &f;
            worst = worst.max((pred - truth).abs().max());
        }
        assert!(worst < 0.2, "atom-neighborhood regression error {worst}");
    }

    #[test]
    fn context_training_builds_one_bank_per_cell() {
        let (mut pool, _) = synthetic_pool(6, 3, 2000, 30);
        // Context descriptors: unit vectors leaning on one of two axes.
        let mut ctx = Vec::with_capacity(2000 * 6);
        for i in 0..2000 {
            let mut v = [0.05f32; 6];
            v[i % 2] = 1.0;
            let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            ctx.extend(v.iter().map(|x| x / norm));
        }
        pool.context = Some(ctx);
        let sub = DMatrix::from_iterator(
            6,
            300,
            pool.features[..300 * 6].iter().map(|&v| v as f64),
        );
        let dict = crate::dictionary::kmeans_train(&sub, 4, 10, 5).unwrap();
        let model = train_bank_context(&pool, &dict, 0.1, 64, 2, 6).unwrap();
        assert_eq!(model.context_count(), 2);
        for bank in &model.banks {
            assert_eq!(bank.anchor_count(), 4);
        }
        // Routing picks the centroid aligned with the descriptor.
        let mut e0 = vec![0.0; 6];
        e0[0] = 1.0;
        let c0 = model.nearest_context(&e0);
        let mut e1 = vec![0.0; 6];
        e1[1] = 1.0;
        let c1 = model.nearest_context(&e1);
        assert_ne!(c0, c1);
        let _ = model.predict(&e0, &e0);
    }
}
