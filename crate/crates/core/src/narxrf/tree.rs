//! CART regression trees grown by variance reduction.

use rand::seq::index::sample;
use rand::Rng;

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn new(n_features: usize) -> Self {
        Self {
            n_features,
            data: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(n_features: usize, rows: &[R]) -> Self {
        let mut d = Self::new(n_features);
        for r in rows {
            d.push(r.as_ref());
        }
        d
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_features, "row width");
        self.data.extend_from_slice(row);
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_features).unwrap_or(0)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    fn get(&self, i: usize, f: usize) -> f64 {
        self.data[i * self.n_features + f]
    }
}

/// Marks a leaf in [`Node::feature`].
pub const LEAF: u32 = u32::MAX;

/// A split sends `x[feature] <= value` to `child` and the rest to `child + 1`;
/// a leaf predicts `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub feature: u32,
    pub child: u32,
    pub value: f64,
}

impl Node {
    fn leaf(value: f64) -> Self {
        Self {
            feature: LEAF,
            child: 0,
            value,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Candidate features drawn at each split.
    pub mtry: usize,
    /// Minimum rows per leaf.
    pub min_node: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            mtry: 3,
            min_node: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Rebuilds a tree from its node array, checking child links.
    pub fn from_nodes(nodes: Vec<Node>) -> Option<Self> {
        let ok = !nodes.is_empty()
            && nodes
                .iter()
                .all(|n| n.is_leaf() || (n.child as usize) + 1 < nodes.len());
        ok.then_some(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return n.value;
            }
            i = if row[n.feature as usize] <= n.value {
                n.child as usize
            } else {
                n.child as usize + 1
            };
        }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Grower<'a, R> {
    data: &'a Dataset,
    targets: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    pairs: Vec<(f64, f64)>,
}

impl<R: Rng> Grower<'_, R> {
    fn mean(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.targets[i]).sum::<f64>() / idx.len() as f64
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Split> {
        let n = idx.len();
        let min_node = self.params.min_node.max(1);
        if n < 2 * min_node {
            return None;
        }
        let first = self.targets[idx[0]];
        if idx.iter().all(|&i| self.targets[i] == first) {
            return None;
        }
        let sum: f64 = idx.iter().map(|&i| self.targets[i]).sum();
        let sum_sq: f64 = idx.iter().map(|&i| self.targets[i] * self.targets[i]).sum();
        let parent = sum * sum / n as f64;

        let n_features = self.data.n_features();
        let mut features = sample(&mut *self.rng, n_features, self.params.mtry.min(n_features)).into_vec();
        // Evaluate in index order so ties resolve independently of the draw order.
        features.sort_unstable();

        let mut best: Option<Split> = None;
        for f in features {
            self.pairs.clear();
            self.pairs
                .extend(idx.iter().map(|&i| (self.data.get(i, f), self.targets[i])));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.pairs[0].0 == self.pairs[n - 1].0 {
                continue;
            }
            let mut left = 0.0;
            for i in 1..n {
                left += self.pairs[i - 1].1;
                if i < min_node || n - i < min_node {
                    continue;
                }
                let (lo, hi) = (self.pairs[i - 1].0, self.pairs[i].0);
                if lo == hi {
                    continue;
                }
                let right = sum - left;
                let score = left * left / i as f64 + right * right / (n - i) as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best.filter(|b| b.score - parent > 1e-12 * sum_sq.abs())
    }

    fn grow(&mut self, node: usize, idx: &mut [usize]) {
        match self.best_split(idx) {
            None => self.nodes[node] = Node::leaf(self.mean(idx)),
            Some(split) => {
                let mut mid = 0;
                for j in 0..idx.len() {
                    if self.data.get(idx[j], split.feature) <= split.threshold {
                        idx.swap(mid, j);
                        mid += 1;
                    }
                }
                let child = self.nodes.len();
                self.nodes[node] = Node {
                    feature: split.feature as u32,
                    child: child as u32,
                    value: split.threshold,
                };
                self.nodes.push(Node::leaf(0.0));
                self.nodes.push(Node::leaf(0.0));
                let (l, r) = idx.split_at_mut(mid);
                self.grow(child, l);
                self.grow(child + 1, r);
            }
        }
    }
}

/// Grows one tree on the rows listed in `sample_rows` (all rows when empty).
pub fn grow_tree<R: Rng>(
    data: &Dataset,
    targets: &[f64],
    sample_rows: &[usize],
    params: TreeParams,
    rng: &mut R,
) -> RegressionTree {
    assert_eq!(data.n_rows(), targets.len(), "targets per row");
    let mut idx: Vec<usize> = if sample_rows.is_empty() {
        (0..targets.len()).collect()
    } else {
        sample_rows.to_vec()
    };
    assert!(!idx.is_empty(), "at least one row");
    let mut g = Grower {
        data,
        targets,
        params,
        rng,
        nodes: vec![Node::leaf(0.0)],
        pairs: Vec::with_capacity(idx.len()),
    };
    g.grow(0, &mut idx);
    RegressionTree { nodes: g.nodes }
}
