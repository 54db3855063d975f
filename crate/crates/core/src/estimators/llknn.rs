use std::collections::HashSet;

use crate::collection::{nearest_neighbors, Dataset};
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::linalg::{pinv, Mat};

/// Stored interactions for LL-KNN with exact joint-space duplicates removed.
///
/// Every collected trajectory starts from the same pose, so a raw dataset
/// holds many identical `q` rows. Duplicates carry no secant information,
/// and a neighbourhood made only of them would fit `J = 0` and freeze the
/// controller at the start pose.
#[derive(Clone, Debug, PartialEq)]
pub struct LlKnnMemory {
    kind: EnvKind,
    n: usize,
    m: usize,
    q: Vec<f64>,
    x: Vec<f64>,
}

impl LlKnnMemory {
    /// Keeps the first occurrence of each distinct joint vector.
    pub fn new(ds: &Dataset) -> Self {
        let (n, m) = (ds.joint_dim(), ds.feature_dim());
        let mut seen = HashSet::with_capacity(ds.len());
        let (mut q, mut x) = (Vec::new(), Vec::new());
        for i in 0..ds.len() {
            let key: Vec<u64> = ds.q(i).iter().map(|v| (v + 0.0).to_bits()).collect();
            if seen.insert(key) {
                q.extend_from_slice(ds.q(i));
                x.extend_from_slice(ds.x(i));
            }
        }
        Self {
            kind: ds.kind(),
            n,
            m,
            q,
            x,
        }
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    /// Number of distinct joint configurations.
    pub fn len(&self) -> usize {
        self.q.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    fn q_at(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.m..(i + 1) * self.m]
    }

    /// Local linear fit of the Jacobian at `q` from the `k` nearest stored
    /// configurations.
    ///
    /// Minimises `Σ_{i≠j} ‖Δx_ij − J Δq_ij‖²` over all ordered neighbour
    /// pairs through the normal equations `J = (Σ Δx Δqᵀ)(Σ Δq Δqᵀ)†`. Both
    /// sums are accumulated in centred form,
    /// `Σ_{i≠j} a_ij b_ijᵀ = 2k Σ_i (a_i − ā)(b_i − b̄)ᵀ`, which is linear in k.
    pub fn estimate(&self, q: &[f64], k: usize) -> Result<Mat> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "llknn needs k >= 2, got {k}"
            )));
        }
        if self.len() <= k {
            return Err(Error::DatasetTooSmall {
                size: self.len(),
                k,
            });
        }
        let (m, n) = (self.m, self.n);
        let idx = nearest_neighbors(&self.q, n, q, k, None)?;
        let mut q_bar = vec![0.0; n];
        let mut x_bar = vec![0.0; m];
        for &i in &idx {
            q_bar
                .iter_mut()
                .zip(self.q_at(i))
                .for_each(|(a, b)| *a += b / k as f64);
            x_bar
                .iter_mut()
                .zip(self.x_at(i))
                .for_each(|(a, b)| *a += b / k as f64);
        }
        let mut cross = Mat::zeros(m, n);
        let mut gram = Mat::zeros(n, n);
        let scale = 2.0 * k as f64;
        for &i in &idx {
            let dq: Vec<f64> = self
                .q_at(i)
                .iter()
                .zip(&q_bar)
                .map(|(a, b)| a - b)
                .collect();
            let dx: Vec<f64> = self
                .x_at(i)
                .iter()
                .zip(&x_bar)
                .map(|(a, b)| a - b)
                .collect();
            for r in 0..n {
                for c in 0..n {
                    gram[(r, c)] += scale * dq[r] * dq[c];
                }
            }
            for r in 0..m {
                for c in 0..n {
                    cross[(r, c)] += scale * dx[r] * dq[c];
                }
            }
        }
        Ok(cross.matmul(&pinv(&gram)?))
    }
}

/// One-off LL-KNN estimate straight from a dataset. Repeated queries should
/// build an [`LlKnnMemory`] once instead.
pub fn llknn_estimate(ds: &Dataset, q: &[f64], k: usize) -> Result<Mat> {
    LlKnnMemory::new(ds).estimate(q, k)
}
