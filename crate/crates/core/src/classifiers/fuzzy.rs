//! Fuzzy ID3 decision tree over three triangular linguistic terms per
//! feature.

use serde::{Deserialize, Serialize};

use super::{FuzzyConfig, LabeledDataset};
use crate::error::{Error, Result};

pub const TERMS: [&str; 3] = ["low", "medium", "high"];

/// Low/medium/high triangles peaking at `min`, the midpoint and `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularPartition {
    pub min: f64,
    pub max: f64,
}

impl TriangularPartition {
    pub fn mid(&self) -> f64 {
        self.min + (self.max - self.min) / 2.0
    }

    /// Memberships of `v` in the three terms; values outside the range are
    /// clamped. A zero-width range is entirely "medium".
    pub fn memberships(&self, v: f64) -> [f64; 3] {
        let span = self.max - self.min;
        if !(span > 0.0) {
            return [0.0, 1.0, 0.0];
        }
        let half = span / 2.0;
        let v = v.clamp(self.min, self.max);
        let mid = self.mid();
        if v <= mid {
            let low = ((mid - v) / half).clamp(0.0, 1.0);
            [low, 1.0 - low, 0.0]
        } else {
            let high = ((v - mid) / half).clamp(0.0, 1.0);
            [0.0, 1.0 - high, high]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzyNode {
    /// `children[t]` handles linguistic term `t` of `feature`.
    Split {
        feature: usize,
        children: [usize; 3],
    },
    Leaf {
        confidence: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTreeModel {
    pub n_classes: usize,
    pub partitions: Vec<TriangularPartition>,
    /// Node 0 is the root.
    pub nodes: Vec<FuzzyNode>,
}

fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>()
}

fn normalized(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

struct Builder<'a> {
    data: &'a LabeledDataset,
    cfg: &'a FuzzyConfig,
    /// `[sample][feature]` memberships.
    memberships: Vec<Vec<[f64; 3]>>,
    nodes: Vec<FuzzyNode>,
}

impl Builder<'_> {
    fn class_weights(&self, mu: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.data.n_classes()];
        for (&m, &y) in mu.iter().zip(&self.data.labels) {
            w[y] += m;
        }
        w
    }

    /// `mu[i]` is sample `i`'s truth of reaching this node.
    fn grow(&mut self, mu: Vec<f64>, used: &mut Vec<bool>, depth: usize, fallback: &[f64]) -> usize {
        let id = self.nodes.len();
        let weights = self.class_weights(&mu);
        let total: f64 = weights.iter().sum();
        if total < self.cfg.min_evidence {
            self.nodes.push(FuzzyNode::Leaf {
                confidence: fallback.to_vec(),
            });
            return id;
        }
        let confidence = normalized(&weights);
        self.nodes.push(FuzzyNode::Leaf {
            confidence: confidence.clone(),
        });
        let truth = confidence.iter().copied().fold(0.0, f64::max);
        if truth >= self.cfg.leaf_threshold || depth >= self.cfg.max_depth {
            return id;
        }

        let parent_entropy = entropy(&weights);
        let mut best: Option<(usize, f64)> = None;
        for f in (0..self.data.n_features()).filter(|&f| !used[f]) {
            let mut child_entropy = 0.0;
            for t in 0..3 {
                let mut w = vec![0.0; self.data.n_classes()];
                for (i, (&m, &y)) in mu.iter().zip(&self.data.labels).enumerate() {
                    w[y] += m * self.memberships[i][f][t];
                }
                child_entropy += w.iter().sum::<f64>() / total * entropy(&w);
            }
            let gain = parent_entropy - child_entropy;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((f, gain));
            }
        }
        let Some((feature, gain)) = best else {
            return id;
        };
        if !(gain > 1e-12) {
            return id;
        }

        used[feature] = true;
        let mut children = [0; 3];
        for (t, child) in children.iter_mut().enumerate() {
            let child_mu: Vec<f64> = mu
                .iter()
                .enumerate()
                .map(|(i, &m)| m * self.memberships[i][feature][t])
                .collect();
            *child = self.grow(child_mu, used, depth + 1, &confidence);
        }
        used[feature] = false;
        self.nodes[id] = FuzzyNode::Split { feature, children };
        id
    }
}

pub fn fit(data: &LabeledDataset, cfg: &FuzzyConfig) -> Result<FuzzyTreeModel> {
    if data.n_samples() < 2 {
        return Err(Error::InvalidDataset("fuzzy tree needs at least two samples".into()));
    }
    let partitions: Vec<TriangularPartition> = (0..data.n_features())
        .map(|j| {
            let (min, max) = data
                .features
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[j]), hi.max(r[j]))
                });
            TriangularPartition { min, max }
        })
        .collect();
    let memberships = data
        .features
        .iter()
        .map(|r| partitions.iter().zip(r).map(|(p, &v)| p.memberships(v)).collect())
        .collect();
    let mut b = Builder {
        data,
        cfg,
        memberships,
        nodes: Vec::new(),
    };
    let uniform = vec![1.0 / data.n_classes() as f64; data.n_classes()];
    b.grow(
        vec![1.0; data.n_samples()],
        &mut vec![false; data.n_features()],
        0,
        &uniform,
    );
    Ok(FuzzyTreeModel {
        n_classes: data.n_classes(),
        partitions,
        nodes: b.nodes,
    })
}

impl FuzzyTreeModel {
    /// Leaf confidences weighted by path truth, normalized to unit sum.
    pub fn confidences(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        let mut stack = vec![(0usize, 1.0f64)];
        while let Some((i, truth)) = stack.pop() {
            match &self.nodes[i] {
                FuzzyNode::Leaf { confidence } => {
                    acc.iter_mut().zip(confidence).for_each(|(a, c)| *a += truth * c);
                }
                FuzzyNode::Split { feature, children } => {
                    let m = self.partitions[*feature].memberships(x[*feature]);
                    for (t, &child) in children.iter().enumerate() {
                        if m[t] > 0.0 {
                            stack.push((child, truth * m[t]));
                        }
                    }
                }
            }
        }
        normalized(&acc)
    }
}
