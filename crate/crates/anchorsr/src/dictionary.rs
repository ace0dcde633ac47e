//! Anchor dictionary learning over normalized patch features: greedy
//! orthogonal matching pursuit for sparse coding, an approximate K-SVD
//! trainer, and a spherical k-means alternative.
//!
//! Determinism rules used throughout: similarity ties pick the lowest index,
//! and every atom is sign-canonicalized so its first significant coordinate
//! is positive.

use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Atoms whose absolute inner product exceeds this are considered duplicates.
pub const DUPLICATE_DOT: f64 = 0.999;

/// Squared residual below which sparse coding stops early.
const OMP_STOP_SQ: f64 = 1e-18;

/// A set of unit-norm anchor atoms, columns of `atoms`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorDictionary {
    atoms: DMatrix<f64>,
}

impl AnchorDictionary {
    /// Validate unit norms and pairwise separation.
    pub fn from_atoms(atoms: DMatrix<f64>) -> Result<Self> {
        if atoms.ncols() == 0 || atoms.nrows() == 0 {
            return Err(Error::invalid("dictionary must have at least one atom"));
        }
        for j in 0..atoms.ncols() {
            let n = atoms.column(j).norm();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("atom {j} has norm {n}, expected 1")));
            }
        }
        let gram = atoms.transpose() * &atoms;
        for i in 0..atoms.ncols() {
            for j in i + 1..atoms.ncols() {
                if gram[(i, j)].abs() > DUPLICATE_DOT {
                    return Err(Error::invalid(format!(
                        "atoms {i} and {j} are near-duplicates (|dot| = {:.6})",
                        gram[(i, j)].abs()
                    )));
                }
            }
        }
        Ok(AnchorDictionary { atoms })
    }

    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn atom(&self, j: usize) -> DVector<f64> {
        self.atoms.column(j).clone_owned()
    }
}

/// Sparse representation of one signal: `values[i]` multiplies atom
/// `indices[i]`; `residual_sq` is the squared norm of the coding residual.
#[derive(Debug, Clone)]
pub struct SparseCode {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub residual_sq: f64,
}

fn argmax_abs_excluding(scores: &DVector<f64>, taken: &[usize]) -> Option<usize> {
    let mut best = None;
    let mut best_v = 0.0;
    for j in 0..scores.len() {
        if taken.contains(&j) {
            continue;
        }
        let v = scores[j].abs();
        if best.is_none() || v > best_v {
            best = Some(j);
            best_v = v;
        }
    }
    if best_v <= 1e-15 {
        None
    } else {
        best
    }
}

/// Greedy orthogonal matching pursuit: select up to `max_atoms` atoms, with
/// a least-squares refit after every selection and an early stop once the
/// residual norm falls below 1e-9. Ties pick the lowest atom index.
pub fn omp(dict: &AnchorDictionary, signal: &[f64], max_atoms: usize) -> SparseCode {
    let a = dict.atoms();
    let x = DVector::from_column_slice(signal);
    let mut selected: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut residual = x.clone();
    let mut res_sq = residual.norm_squared();
    while selected.len() < max_atoms.min(dict.len()) && res_sq > OMP_STOP_SQ {
        let corr = a.transpose() * &residual;
        let Some(j) = argmax_abs_excluding(&corr, &selected) else { break };
        selected.push(j);
        let mut sub = DMatrix::zeros(dict.dim(), selected.len());
        for (k, &idx) in selected.iter().enumerate() {
            sub.set_column(k, &a.column(idx));
        }
        let gram = sub.transpose() * &sub;
        let rhs = sub.transpose() * &x;
        let Some(chol) = Cholesky::new(gram) else {
            selected.pop();
            break;
        };
        let c = chol.solve(&rhs);
        residual = &x - &sub * &c;
        res_sq = residual.norm_squared();
        values = c.as_slice().to_vec();
    }
    SparseCode { indices: selected, values, residual_sq: res_sq }
}

/// Batch sparse coding of column signals, mathematically identical to
/// calling [`omp`] per column but using precomputed correlations and the
/// atom Gram matrix.
pub fn sparse_code_all(
    atoms: &DMatrix<f64>,
    signals: &DMatrix<f64>,
    max_atoms: usize,
) -> Vec<SparseCode> {
    let k = atoms.ncols();
    let gram = atoms.transpose() * atoms;
    let n = signals.ncols();
    let mut out = Vec::with_capacity(n);
    const CHUNK: usize = 4096;
    let mut start = 0;
    while start < n {
        let len = CHUNK.min(n - start);
        let block = signals.columns(start, len);
        let alpha0 = atoms.transpose() * block;
        for c in 0..len {
            let x_sq = block.column(c).norm_squared();
            let a0 = alpha0.column(c).clone_owned();
            let mut alpha = a0.clone();
            let mut selected: Vec<usize> = Vec::new();
            let mut values: Vec<f64> = Vec::new();
            let mut res_sq = x_sq;
            while selected.len() < max_atoms.min(k) && res_sq > OMP_STOP_SQ {
                let Some(j) = argmax_abs_excluding(&alpha, &selected) else { break };
                selected.push(j);
                let m = selected.len();
                let mut g_ss = DMatrix::zeros(m, m);
                let mut rhs = DVector::zeros(m);
                for (r, &ir) in selected.iter().enumerate() {
                    rhs[r] = a0[ir];
                    for (s, &is) in selected.iter().enumerate() {
                        g_ss[(r, s)] = gram[(ir, is)];
                    }
                }
                let Some(chol) = Cholesky::new(g_ss) else {
                    selected.pop();
                    break;
                };
                let coef = chol.solve(&rhs);
                res_sq = (x_sq - coef.dot(&rhs)).max(0.0);
                alpha = a0.clone();
                for (s, &is) in selected.iter().enumerate() {
                    alpha.axpy(-coef[s], &gram.column(is).clone_owned(), 1.0);
                }
                values = coef.as_slice().to_vec();
            }
            out.push(SparseCode { indices: selected, values, residual_sq: res_sq });
        }
        start += len;
    }
    out
}

/// Flip a vector so its first coordinate with magnitude above 1e-12 is
/// positive. Returns true if a flip happened.
fn canonicalize_sign(v: &mut DVector<f64>) -> bool {
    if let Some(lead) = v.iter().find(|x| x.abs() > 1e-12) {
        if *lead < 0.0 {
            v.neg_mut();
            return true;
        }
    }
    false
}

/// Pick initial atoms as mutually separated samples in a seeded random
/// order.
/// Farthest-point seeding: a random first sample, then greedily the sample
/// least similar to everything chosen so far. Deterministic given the rng
/// state, and lands one seed per well-separated cluster. Samples keep their
/// own sign so a seed never starts antipodal to its cluster.
fn init_from_samples(
    data: &DMatrix<f64>,
    k: usize,
    rng: &mut ChaCha12Rng,
) -> Result<DMatrix<f64>> {
    let n = data.ncols();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let norms: Vec<f64> = (0..n).map(|i| data.column(i).norm()).collect();
    let Some(&first) = order.iter().find(|&&i| norms[i] > 1e-9) else {
        return Err(Error::insufficient("no nonzero samples to seed atoms"));
    };
    let mut atoms = DMatrix::zeros(data.nrows(), k);
    let mut max_sim = vec![0.0f64; n];
    let mut current = first;
    for a in 0..k {
        let cand = data.column(current).clone_owned() / norms[current];
        atoms.set_column(a, &cand);
        if a + 1 == k {
            break;
        }
        let sims = data.tr_mul(&cand);
        let mut next = None;
        let mut next_sim = f64::INFINITY;
        for i in 0..n {
            if norms[i] < 1e-9 {
                continue;
            }
            let s = sims[i].abs() / norms[i];
            if s > max_sim[i] {
                max_sim[i] = s;
            }
            if max_sim[i] < next_sim {
                next_sim = max_sim[i];
                next = Some(i);
            }
        }
        match next {
            Some(i) if next_sim <= DUPLICATE_DOT => current = i,
            _ => {
                return Err(Error::insufficient(format!(
                    "only {} sufficiently distinct samples for {k} atoms",
                    a + 1
                )))
            }
        }
    }
    Ok(atoms)
}

/// Sample index with the largest squared residual, excluding already-used
/// replacements; ties pick the lowest index.
fn worst_sample(eps: &[f64], used: &HashSet<usize>) -> Option<usize> {
    let mut best = None;
    let mut best_v = -1.0;
    for (i, &e) in eps.iter().enumerate() {
        if used.contains(&i) {
            continue;
        }
        if e > best_v {
            best = Some(i);
            best_v = e;
        }
    }
    best
}

/// Objective trace of a dictionary-learning run, one entry per iteration,
/// measured right after the sparse-coding pass.
#[derive(Debug, Clone)]
pub struct KsvdReport {
    pub objective: Vec<f64>,
}

/// Approximate K-SVD: alternate batch sparse coding (keeping a sample's
/// previous code when it beats the fresh one) with two rank-one update
/// rounds per atom. Unused atoms are replaced by the worst-represented
/// sample; near-duplicate atoms are split the same way.
pub fn ksvd_train(
    data: &DMatrix<f64>,
    k: usize,
    max_atoms: usize,
    iters: usize,
    seed: u64,
) -> Result<(AnchorDictionary, KsvdReport)> {
    if data.ncols() < k {
        return Err(Error::insufficient(format!(
            "{} samples cannot seed {k} atoms",
            data.ncols()
        )));
    }
    let (d, n) = (data.nrows(), data.ncols());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut atoms = init_from_samples(data, k, &mut rng)?;
    let mut codes: Vec<SparseCode> = Vec::new();
    let mut objective = Vec::with_capacity(iters);

    for iter in 0..iters {
        let fresh = sparse_code_all(&atoms, data, max_atoms);
        if iter == 0 {
            codes = fresh;
        } else {
            for (old, new) in codes.iter_mut().zip(fresh) {
                if new.residual_sq < old.residual_sq {
                    *old = new;
                }
            }
        }

        // Residual matrix consistent with the codes.
        let mut residuals = data.clone();
        for (i, code) in codes.iter().enumerate() {
            for (&j, &v) in code.indices.iter().zip(&code.values) {
                let col = atoms.column(j).clone_owned();
                residuals.column_mut(i).axpy(-v, &col, 1.0);
            }
        }
        let mut eps: Vec<f64> = (0..n).map(|i| residuals.column(i).norm_squared()).collect();
        objective.push(eps.iter().sum());

        let mut replaced: HashSet<usize> = HashSet::new();

        // Atom update sweep.
        for j in 0..k {
            let users: Vec<(usize, usize)> = codes
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.indices.iter().position(|&a| a == j).map(|p| (i, p)))
                .collect();
            if users.is_empty() {
                if let Some(w) = worst_sample(&eps, &replaced) {
                    let norm = data.column(w).norm();
                    if norm > 1e-9 {
                        let mut cand = data.column(w) / norm;
                        canonicalize_sign(&mut cand);
                        atoms.set_column(j, &cand);
                        replaced.insert(w);
                    }
                }
                continue;
            }
            // Error matrix with atom j's contribution restored.
            let mut err = DMatrix::zeros(d, users.len());
            let mut g = DVector::zeros(users.len());
            for (col, &(i, p)) in users.iter().enumerate() {
                let v = codes[i].values[p];
                let mut e = residuals.column(i).clone_owned();
                e.axpy(v, &atoms.column(j).clone_owned(), 1.0);
                err.set_column(col, &e);
                g[col] = v;
            }
            let mut atom = atoms.column(j).clone_owned();
            for _ in 0..2 {
                g = err.transpose() * &atom;
                let dir = &err * &g;
                let norm = dir.norm();
                if norm < 1e-12 {
                    break;
                }
                atom = dir / norm;
            }
            canonicalize_sign(&mut atom);
            g = err.transpose() * &atom;
            // Write back the rank-one refit.
            for (col, &(i, p)) in users.iter().enumerate() {
                codes[i].values[p] = g[col];
                let mut r = err.column(col).clone_owned();
                r.axpy(-g[col], &atom, 1.0);
                let sq = r.norm_squared();
                residuals.set_column(i, &r);
                codes[i].residual_sq = sq;
                eps[i] = sq;
            }
            atoms.set_column(j, &atom);
        }

        // Split near-duplicate atoms.
        let gram = atoms.transpose() * &atoms;
        for j1 in 0..k {
            for j2 in j1 + 1..k {
                if gram[(j1, j2)].abs() <= DUPLICATE_DOT {
                    continue;
                }
                for (i, code) in codes.iter_mut().enumerate() {
                    if let Some(p) = code.indices.iter().position(|&a| a == j2) {
                        let v = code.values.remove(p);
                        code.indices.remove(p);
                        let col = atoms.column(j2).clone_owned();
                        residuals.column_mut(i).axpy(v, &col, 1.0);
                        let sq = residuals.column(i).norm_squared();
                        code.residual_sq = sq;
                        eps[i] = sq;
                    }
                }
                if let Some(w) = worst_sample(&eps, &replaced) {
                    let norm = data.column(w).norm();
                    if norm > 1e-9 {
                        let mut cand = data.column(w) / norm;
                        canonicalize_sign(&mut cand);
                        atoms.set_column(j2, &cand);
                        replaced.insert(w);
                    }
                }
            }
        }
    }

    Ok((AnchorDictionary::from_atoms(atoms)?, KsvdReport { objective }))
}

/// Spherical k-means over column vectors: cosine assignment, mean centroid,
/// renormalize. Empty clusters restart from the worst-matched sample.
/// Returns unit-norm, sign-canonicalized centroids.
pub fn spherical_kmeans(
    data: &DMatrix<f64>,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if data.ncols() < k {
        return Err(Error::insufficient(format!(
            "{} samples cannot seed {k} centroids",
            data.ncols()
        )));
    }
    let n = data.ncols();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut centroids = init_from_samples(data, k, &mut rng)?;
    for _ in 0..iters {
        let sims = centroids.transpose() * data;
        let mut assign = vec![0usize; n];
        let mut best_sim = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            for c in 0..k {
                if sims[(c, i)] > best_sim[i] {
                    best_sim[i] = sims[(c, i)];
                    assign[i] = c;
                }
            }
        }
        let mut sums = DMatrix::<f64>::zeros(data.nrows(), k);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let col = data.column(i);
            sums.column_mut(assign[i]).axpy(1.0, &col, 1.0);
            counts[assign[i]] += 1;
        }
        let mut used = HashSet::new();
        for (c, &count) in counts.iter().enumerate() {
            let norm = sums.column(c).norm();
            if count == 0 || norm < 1e-12 {
                // Restart from the sample matched worst by its centroid.
                let mut worst = None;
                let mut worst_sim = f64::INFINITY;
                for (i, &sim) in best_sim.iter().enumerate() {
                    if used.contains(&i) {
                        continue;
                    }
                    if sim < worst_sim && data.column(i).norm() > 1e-9 {
                        worst_sim = sim;
                        worst = Some(i);
                    }
                }
                if let Some(w) = worst {
                    let mut cand = data.column(w).clone_owned();
                    cand /= cand.norm();
                    centroids.set_column(c, &cand);
                    used.insert(w);
                }
                continue;
            }
            // No sign canonicalization here: assignment uses signed dots, so
            // flipping a centroid would orphan its own cluster.
            let cand = sums.column(c) / norm;
            centroids.set_column(c, &cand);
        }
    }
    Ok(centroids)
}

/// K-means anchor training, the ablation alternative to K-SVD. Duplicate
/// centroids are split off the worst-assigned samples until the dictionary
/// validates.
pub fn kmeans_train(
    data: &DMatrix<f64>,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<AnchorDictionary> {
    let mut centroids = spherical_kmeans(data, k, iters, seed)?;
    for _round in 0..10 {
        match AnchorDictionary::from_atoms(centroids.clone()) {
            Ok(dict) => return Ok(dict),
            Err(_) => {
                // Replace duplicates with the most dissimilar samples.
                let gram = centroids.transpose() * &centroids;
                let sims = centroids.transpose() * data;
                let mut fixed = false;
                let mut used = HashSet::new();
                for j1 in 0..k {
                    for j2 in j1 + 1..k {
                        if gram[(j1, j2)].abs() <= DUPLICATE_DOT {
                            continue;
                        }
                        let mut worst = None;
                        let mut worst_sim = f64::INFINITY;
                        for i in 0..data.ncols() {
                            if used.contains(&i) || data.column(i).norm() < 1e-9 {
                                continue;
                            }
                            let s = (0..k).fold(f64::NEG_INFINITY, |m, c| m.max(sims[(c, i)]));
                            if s < worst_sim {
                                worst_sim = s;
                                worst = Some(i);
                            }
                        }
                        if let Some(w) = worst {
                            let mut cand = data.column(w).clone_owned();
                            cand /= cand.norm();
                            centroids.set_column(j2, &cand);
                            used.insert(w);
                            fixed = true;
                        }
                    }
                }
                if !fixed {
                    break;
                }
            }
        }
    }
    AnchorDictionary::from_atoms(centroids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_unit_cols(d: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut m = DMatrix::from_fn(d, n, |_, _| rng.random::<f64>() - 0.5);
        for j in 0..n {
            let norm = m.column(j).norm();
            m.column_mut(j).scale_mut(1.0 / norm);
        }
        m
    }

    #[test]
    fn dictionary_validation_rejects_bad_atoms() {
        let mut atoms = random_unit_cols(6, 4, 1);
        assert!(AnchorDictionary::from_atoms(atoms.clone()).is_ok());
        let dup = atoms.column(0).clone_owned();
        atoms.set_column(1, &dup);
        assert!(AnchorDictionary::from_atoms(atoms.clone()).is_err());
        atoms.column_mut(1).scale_mut(2.0);
        assert!(AnchorDictionary::from_atoms(atoms).is_err());
    }

    #[test]
    fn omp_recovers_an_exact_two_atom_combination() {
        let dict = AnchorDictionary::from_atoms(random_unit_cols(16, 8, 2)).unwrap();
        let x = (dict.atom(2) * 1.5 - dict.atom(5) * 0.7).as_slice().to_vec();
        let code = omp(&dict, &x, 3);
        assert!(code.residual_sq < 1e-16);
        let mut pairs: Vec<(usize, f64)> =
            code.indices.iter().copied().zip(code.values.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, 2);
        assert!((pairs[0].1 - 1.5).abs() < 1e-9);
        assert_eq!(pairs[1].0, 5);
        assert!((pairs[1].1 + 0.7).abs() < 1e-9);
    }

    #[test]
    fn omp_respects_the_sparsity_budget() {
        let dict = AnchorDictionary::from_atoms(random_unit_cols(10, 20, 3)).unwrap();
        let x: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        for l in [1, 2, 3] {
            let code = omp(&dict, &x, l);
            assert!(code.indices.len() <= l);
        }
    }

    #[test]
    fn batch_coding_matches_single_signal_coding() {
        let dict = AnchorDictionary::from_atoms(random_unit_cols(12, 24, 4)).unwrap();
        let signals = random_unit_cols(12, 50, 5);
        let batch = sparse_code_all(dict.atoms(), &signals, 3);
        for (i, b) in batch.iter().enumerate() {
            let single = omp(&dict, signals.column(i).as_slice(), 3);
            assert_eq!(b.indices, single.indices, "signal {i}");
            for (bv, sv) in b.values.iter().zip(&single.values) {
                assert!((bv - sv).abs() < 1e-9);
            }
            assert!((b.residual_sq - single.residual_sq).abs() < 1e-9);
        }
    }

    #[test]
    fn ksvd_objective_never_increases() {
        let data = random_unit_cols(12, 400, 6);
        let (dict, report) = ksvd_train(&data, 16, 3, 10, 7).unwrap();
        assert_eq!(dict.len(), 16);
        assert_eq!(report.objective.len(), 10);
        for w in report.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "objective rose: {} -> {}", w[0], w[1]);
        }
        assert!(report.objective.last().unwrap() < &report.objective[0]);
    }

    #[test]
    fn ksvd_is_deterministic() {
        let data = random_unit_cols(10, 300, 8);
        let (a, _) = ksvd_train(&data, 12, 3, 5, 9).unwrap();
        let (b, _) = ksvd_train(&data, 12, 3, 5, 9).unwrap();
        assert_eq!(a.atoms(), b.atoms());
    }

    #[test]
    fn kmeans_centroids_validate_and_track_clusters() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        // Three well-separated directions with noise.
        let dirs = random_unit_cols(8, 3, 12);
        let mut data = DMatrix::zeros(8, 240);
        for i in 0..240 {
            let base = dirs.column(i % 3).clone_owned();
            let noise = DVector::from_fn(8, |_, _| 0.05 * (rng.random::<f64>() - 0.5));
            let mut v = base + noise;
            v /= v.norm();
            data.set_column(i, &v);
        }
        let dict = kmeans_train(&data, 3, 15, 13).unwrap();
        // Every centroid should sit close to one true direction.
        for c in 0..3 {
            let best = (0..3)
                .map(|t| dict.atom(c).dot(&dirs.column(t).clone_owned()).abs())
                .fold(0.0, f64::max);
            assert!(best > 0.98, "centroid {c} strayed (best |dot| {best})");
        }
    }
}
