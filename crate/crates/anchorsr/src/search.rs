//! Anchor lookup: exhaustive linear scan and a two-layer hierarchical index
//! (centroids over anchors, then a short per-centroid candidate list). The
//! hierarchical path cuts the per-feature comparison count from K to about
//! sqrt(K) + branch * sqrt(K) while agreeing with the linear scan on almost
//! every query.

use nalgebra::{DMatrix, DVector};

use crate::dictionary::{spherical_kmeans, AnchorDictionary};
use crate::error::{Error, Result};

/// Candidate-list length multiplier: each centroid lists the branch * sqrt(K)
/// anchors most similar to it.
pub const HIER_BRANCH: usize = 4;

/// Extra per-list slots reserved for the coverage pass.
const COVERAGE_SLACK: usize = 8;

fn argmax_sims(sims: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, v) in sims.enumerate() {
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    best
}

/// Exhaustive anchor match: highest inner product, ties to the lowest index.
pub fn linear_lookup(dict: &AnchorDictionary, feature: &[f64]) -> usize {
    linear_lookup_counted(dict, feature).0
}

/// Linear match plus the number of anchor comparisons performed (always K).
pub fn linear_lookup_counted(dict: &AnchorDictionary, feature: &[f64]) -> (usize, usize) {
    let f = DVector::from_column_slice(feature);
    let sims = dict.atoms().transpose() * f;
    (argmax_sims(sims.iter().copied()), dict.len())
}

/// Two-layer anchor index.
#[derive(Debug, Clone, PartialEq)]
pub struct HierIndex {
    anchors: DMatrix<f64>,
    anchors_f32: DMatrix<f32>,
    centroids: DMatrix<f64>,
    centroids_f32: DMatrix<f32>,
    lists: Vec<Vec<u32>>,
}

impl HierIndex {
    /// Cluster the anchors into ceil(sqrt(K)) centroids and give each
    /// centroid the `branch * sqrt(K)` anchors most similar to it. A
    /// coverage pass then guarantees every anchor appears in at least one
    /// list, preferring its best centroid and spilling to the shortest list
    /// if all preferred lists are full.
    pub fn build(dict: &AnchorDictionary, branch: usize, seed: u64) -> Result<Self> {
        if branch == 0 {
            return Err(Error::invalid("branch factor must be positive"));
        }
        let k = dict.len();
        let anchors = dict.atoms().clone();
        let l = (k as f64).sqrt().ceil() as usize;
        let centroids = if l >= k {
            anchors.clone()
        } else {
            spherical_kmeans(&anchors, l, 20, seed)?
        };
        let l = centroids.ncols();
        let list_len = (branch * l).min(k);
        let sims = centroids.transpose() * &anchors;
        let mut lists: Vec<Vec<u32>> = Vec::with_capacity(l);
        for c in 0..l {
            let mut order: Vec<u32> = (0..k as u32).collect();
            order.sort_by(|&a, &b| {
                sims[(c, b as usize)]
                    .partial_cmp(&sims[(c, a as usize)])
                    .expect("similarities are finite")
                    .then(a.cmp(&b))
            });
            order.truncate(list_len);
            order.sort_unstable();
            lists.push(order);
        }
        // Coverage pass.
        let mut covered = vec![false; k];
        for list in &lists {
            for &a in list {
                covered[a as usize] = true;
            }
        }
        let cap = list_len + COVERAGE_SLACK;
        for a in 0..k {
            if covered[a] {
                continue;
            }
            let mut order: Vec<usize> = (0..l).collect();
            order.sort_by(|&p, &q| {
                sims[(q, a)]
                    .partial_cmp(&sims[(p, a)])
                    .expect("similarities are finite")
                    .then(p.cmp(&q))
            });
            let slot = order
                .iter()
                .copied()
                .find(|&c| lists[c].len() < cap)
                .unwrap_or_else(|| {
                    (0..l).min_by_key(|&c| (lists[c].len(), c)).expect("at least one list")
                });
            lists[slot].push(a as u32);
            covered[a] = true;
        }
        for list in &mut lists {
            list.sort_unstable();
        }
        Ok(HierIndex {
            anchors_f32: anchors.map(|v| v as f32),
            centroids_f32: centroids.map(|v| v as f32),
            anchors,
            centroids,
            lists,
        })
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.ncols()
    }

    pub fn centroid_count(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn list(&self, c: usize) -> &[u32] {
        &self.lists[c]
    }

    /// Invariant: the candidate lists jointly mention every anchor.
    pub fn covers_all_anchors(&self) -> bool {
        let mut covered = vec![false; self.anchor_count()];
        for list in &self.lists {
            for &a in list {
                covered[a as usize] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }

    /// Upper bound on comparisons for any query.
    pub fn max_comparisons(&self) -> usize {
        self.centroid_count() + self.lists.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn lookup(&self, feature: &[f64]) -> usize {
        self.lookup_counted(feature).0
    }

    /// Hierarchical match plus the comparisons performed (centroid scan plus
    /// the chosen candidate list).
    pub fn lookup_counted(&self, feature: &[f64]) -> (usize, usize) {
        let f = DVector::from_column_slice(feature);
        let csims = self.centroids.transpose() * &f;
        let c = argmax_sims(csims.iter().copied());
        let list = &self.lists[c];
        let mut best = usize::MAX;
        let mut best_v = f64::NEG_INFINITY;
        for &a in list {
            let v = self.anchors.column(a as usize).dot(&f);
            if v > best_v || (v == best_v && (a as usize) < best) {
                best_v = v;
                best = a as usize;
            }
        }
        (best, self.centroid_count() + list.len())
    }

    /// Batched lookup over feature columns, all in single precision.
    pub fn lookup_batch(&self, features: &DMatrix<f32>) -> Vec<u32> {
        let csims = self.centroids_f32.transpose() * features;
        let mut out = Vec::with_capacity(features.ncols());
        for i in 0..features.ncols() {
            let mut cbest = 0;
            let mut cval = f32::NEG_INFINITY;
            for c in 0..self.centroid_count() {
                if csims[(c, i)] > cval {
                    cval = csims[(c, i)];
                    cbest = c;
                }
            }
            let f = features.column(i);
            let mut best = u32::MAX;
            let mut best_v = f32::NEG_INFINITY;
            for &a in &self.lists[cbest] {
                let v = self.anchors_f32.column(a as usize).dot(&f);
                if v > best_v || (v == best_v && a < best) {
                    best_v = v;
                    best = a;
                }
            }
            out.push(best);
        }
        out
    }
}

/// Batched linear lookup over feature columns in single precision.
pub fn linear_lookup_batch(anchors_f32: &DMatrix<f32>, features: &DMatrix<f32>) -> Vec<u32> {
    let sims = anchors_f32.transpose() * features;
    let mut out = Vec::with_capacity(features.ncols());
    for i in 0..features.ncols() {
        let mut best = 0u32;
        let mut best_v = f32::NEG_INFINITY;
        for j in 0..anchors_f32.ncols() {
            if sims[(j, i)] > best_v {
                best_v = sims[(j, i)];
                best = j as u32;
            }
        }
        out.push(best);
    }
    out
}
