//! Random forests of [`RegressionTree`]s on per-tree subsamples.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{grow_tree, Dataset, RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub ntree: usize,
    pub tree: TreeParams,
    /// Rows drawn without replacement for each tree (clamped to the data size).
    pub sample_size: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            ntree: 500,
            tree: TreeParams::default(),
            sample_size: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    pub seed: u64,
    /// Rows each tree was trained on.
    pub sample_size: usize,
}

/// Fits `params.ntree` trees in parallel. Tree `i` draws its subsample and
/// split candidates from a stream seeded by `(seed, i)`, so the result does
/// not depend on the thread count.
pub fn fit_forest(data: &Dataset, targets: &[f64], params: &ForestParams, seed: u64) -> Result<Forest> {
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    let m = params.sample_size.min(n);
    let trees = (0..params.ntree)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
            let rows = if m == n {
                (0..n).collect()
            } else {
                sample(&mut rng, n, m).into_vec()
            };
            grow_tree(data, targets, &rows, params.tree, &mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        n_features: data.n_features(),
        seed,
        sample_size: m,
    })
}

impl Forest {
    /// Mean of the tree predictions.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        Ok(sum / self.trees.len() as f64)
    }
}
