//! CART classification trees with Gini impurity.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

/// Flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Candidate features examined at each node.
    pub features_per_split: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl DecisionTree {
    /// Grows a tree on `rows` (indices into `x`, repeats allowed).
    ///
    /// When `features_per_split` is below the feature count, each node draws
    /// its candidates from `rng` without replacement; otherwise every feature
    /// is considered and `rng` is never touched.
    pub fn fit<R: Rng>(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        rows: Vec<usize>,
        params: &TreeParams,
        rng: &mut R,
    ) -> Self {
        let mut builder = Builder {
            x,
            y,
            n_classes,
            n_features: x.first().map_or(0, Vec::len),
            params,
            nodes: Vec::new(),
        };
        builder.grow(rows, 0, rng);
        DecisionTree { nodes: builder.nodes }
    }

    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> usize {
        let counts: Vec<f64> = self.leaf_counts(x).iter().map(|&c| c as f64).collect();
        argmax(&counts)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    n_features: usize,
    params: &'a TreeParams,
    nodes: Vec<TreeNode>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_sum(counts: &[u32], n: u32) -> f64 {
    // n · Gini(counts), which keeps weighted child impurities additive
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    n - counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / n
}

impl Builder<'_> {
    fn grow<R: Rng>(&mut self, rows: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let id = self.nodes.len();
        let mut counts = vec![0u32; self.n_classes];
        for &r in &rows {
            counts[self.y[r]] += 1;
        }
        self.nodes.push(TreeNode::Leaf { counts: counts.clone() });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || rows.len() < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(split) = self.best_split(&rows, &counts, rng) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x[r][split.feature] <= split.threshold);
        let l = self.grow(left, depth + 1, rng);
        let r = self.grow(right, depth + 1, rng);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn candidates<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let m = self.params.features_per_split;
        if m >= self.n_features {
            return (0..self.n_features).collect();
        }
        let mut c = index::sample(rng, self.n_features, m).into_vec();
        c.sort_unstable();
        c
    }

    /// Lowest weighted Gini over candidate features and midpoint thresholds;
    /// the first feature and smallest threshold win ties.
    fn best_split<R: Rng>(&self, rows: &[usize], totals: &[u32], rng: &mut R) -> Option<Split> {
        let n = rows.len() as u32;
        let min_leaf = self.params.min_samples_leaf as u32;
        let mut best: Option<Split> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        let mut left = vec![0u32; self.n_classes];
        let mut right = vec![0u32; self.n_classes];

        for f in self.candidates(rng) {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(totals);

            for i in 0..sorted.len() - 1 {
                let (v, c) = sorted[i];
                left[c] += 1;
                right[c] -= 1;
                let next = sorted[i + 1].0;
                if next <= v {
                    continue;
                }
                let nl = i as u32 + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let impurity = gini_sum(&left, nl) + gini_sum(&right, n - nl);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}
