use rayon::prelude::*;

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// A finite-difference pair between two neighbouring samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FdPair {
    pub dx: Vec<f64>,
    pub dq: Vec<f64>,
}

/// Joint-space neighbourhoods for every sample of a dataset. Pairs are
/// produced on demand from the stored neighbour indices.
#[derive(Clone, Debug)]
pub struct PairSet {
    k: usize,
    n: usize,
    m: usize,
    q: Vec<f64>,
    x: Vec<f64>,
    neighbors: Vec<usize>,
}

impl PairSet {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn joint_dim(&self) -> usize {
        self.n
    }

    pub fn feature_dim(&self) -> usize {
        self.m
    }

    pub fn anchor_count(&self) -> usize {
        self.q.len() / self.n
    }

    pub fn pairs_per_anchor(&self) -> usize {
        self.k * (self.k - 1)
    }

    pub fn q(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.m..(i + 1) * self.m]
    }

    /// The `k` nearest neighbours of `anchor`, closest first.
    pub fn neighbors(&self, anchor: usize) -> &[usize] {
        &self.neighbors[anchor * self.k..(anchor + 1) * self.k]
    }

    /// All ordered pairs `(i, j)`, `i ≠ j`, among the anchor's neighbours,
    /// with `dx = x_i - x_j` and `dq = q_i - q_j`.
    pub fn pairs(&self, anchor: usize) -> Vec<FdPair> {
        let nb = self.neighbors(anchor);
        let mut out = Vec::with_capacity(self.pairs_per_anchor());
        for &i in nb {
            for &j in nb {
                if i == j {
                    continue;
                }
                out.push(FdPair {
                    dx: self
                        .x(i)
                        .iter()
                        .zip(self.x(j))
                        .map(|(a, b)| a - b)
                        .collect(),
                    dq: self
                        .q(i)
                        .iter()
                        .zip(self.q(j))
                        .map(|(a, b)| a - b)
                        .collect(),
                });
            }
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` points in `points` (flattened, `dim` per point)
/// closest to `query` in Euclidean distance, closest first. Ties are broken
/// by lower index; `exclude` is skipped.
pub fn nearest_neighbors(
    points: &[f64],
    dim: usize,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<usize>> {
    if dim == 0 || query.len() != dim || !points.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            context: "nearest-neighbour query",
            expected: dim,
            got: query.len(),
        });
    }
    let count = points.len() / dim;
    let available = count - usize::from(exclude.is_some_and(|e| e < count));
    if k == 0 || k > available {
        return Err(Error::DatasetTooSmall { size: available, k });
    }
    let mut scored: Vec<(f64, usize)> = (0..count)
        .filter(|&i| Some(i) != exclude)
        .map(|i| (sq_dist(&points[i * dim..(i + 1) * dim], query), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    Ok(scored.into_iter().map(|(_, i)| i).collect())
}

/// Finds each sample's `k` nearest other samples in joint space.
pub fn build_pairs(ds: &Dataset, k: usize) -> Result<PairSet> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if ds.len() < k + 1 {
        return Err(Error::DatasetTooSmall { size: ds.len(), k });
    }
    let n = ds.joint_dim();
    let q = ds.q_flat();
    let lists: Vec<Vec<usize>> = (0..ds.len())
        .into_par_iter()
        .map(|i| nearest_neighbors(q, n, ds.q(i), k, Some(i)))
        .collect::<Result<_>>()?;
    Ok(PairSet {
        k,
        n,
        m: ds.feature_dim(),
        q: q.to_vec(),
        x: ds.x_flat().to_vec(),
        neighbors: lists.into_iter().flatten().collect(),
    })
}
