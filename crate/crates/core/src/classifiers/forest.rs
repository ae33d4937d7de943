//! Bagged CART ensemble with per-node feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::{ForestConfig, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

/// Random source for tree `index`: the seed's ChaCha stream number `index`.
/// Trees are therefore independent of build order and thread count.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn fit(data: &LabeledDataset, cfg: &ForestConfig, seed: u64) -> Result<ForestModel> {
    let n = data.n_samples();
    if n < 2 {
        return Err(Error::InvalidDataset("random forest needs at least two samples".into()));
    }
    let d = data.n_features();
    let params = TreeParams {
        features_per_split: cfg
            .features_per_split
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
            .min(d),
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
    };
    let k = data.n_classes();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let rows = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::fit(&data.features, &data.labels, k, rows, &params, &mut rng)
        })
        .collect();
    Ok(ForestModel { n_classes: k, trees })
}

impl ForestModel {
    /// Fraction of trees voting for each class.
    pub fn vote_fractions(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::{blobs, dataset_1d};
    use crate::classifiers::tree::TreeNode;
    use crate::classifiers::{argmax, fit as fit_model, ClassifierKind, TrainConfig};

    #[test]
    fn single_tree_without_bagging_is_plain_cart() {
        let data = blobs(15, 3, 5, 6.0, 11);
        let cfg = ForestConfig {
            n_trees: 1,
            features_per_split: Some(5),
            bootstrap: false,
            ..Default::default()
        };
        let forest = fit(&data, &cfg, 99).unwrap();
        let params = TreeParams {
            features_per_split: 5,
            max_depth: None,
            min_samples_leaf: 1,
        };
        let cart = DecisionTree::fit(
            &data.features,
            &data.labels,
            3,
            (0..data.n_samples()).collect(),
            &params,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(forest.trees[0], cart);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probes = data
            .features
            .iter()
            .cloned()
            .chain((0..100).map(|_| (0..5).map(|_| rng.gen_range(-2.0..10.0)).collect()));
        for p in probes {
            assert_eq!(argmax(&forest.vote_fractions(&p)), cart.predict(&p));
        }
    }

    #[test]
    fn separable_by_sign_with_defaults() {
        let pts: Vec<(f64, usize)> = (-10..10)
            .filter(|&i| i != 0)
            .map(|i| (i as f64 * 0.37, usize::from(i > 0)))
            .collect();
        let data = dataset_1d(&pts);
        let model = fit_model(ClassifierKind::RandomForest, &data, &TrainConfig::default()).unwrap();
        for (row, &y) in data.features.iter().zip(&data.labels) {
            assert_eq!(model.predict_values(row).class, y);
        }
    }

    #[test]
    fn deterministic_regardless_of_threads() {
        let data = blobs(10, 4, 9, 8.0, 2);
        let cfg = ForestConfig {
            n_trees: 24,
            ..Default::default()
        };
        let a = fit(&data, &cfg, 7).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = single.install(|| fit(&data, &cfg, 7).unwrap());
        assert_eq!(a, b);
        let c = fit(&data, &cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn voting_counts_and_tie_break() {
        let leaf = |c: usize| DecisionTree {
            nodes: vec![TreeNode::Leaf {
                counts: if c == 0 { vec![3, 1] } else { vec![0, 2] },
            }],
        };
        let m = ForestModel {
            n_classes: 2,
            trees: vec![leaf(0), leaf(0), leaf(1)],
        };
        let v = m.vote_fractions(&[0.0]);
        assert_eq!(argmax(&v), 0);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15 && (v[1] - 1.0 / 3.0).abs() < 1e-15);

        let tied = ForestModel {
            n_classes: 2,
            trees: vec![leaf(1), leaf(0)],
        };
        assert_eq!(argmax(&tied.vote_fractions(&[0.0])), 0);
    }

    #[test]
    fn one_tree_forest_follows_its_tree() {
        let data = blobs(12, 3, 4, 9.0, 4);
        let cfg = ForestConfig {
            n_trees: 1,
            ..Default::default()
        };
        let f = fit(&data, &cfg, 3).unwrap();
        for row in &data.features {
            let v = f.vote_fractions(row);
            assert_eq!(v[f.trees[0].predict(row)], 1.0);
        }
    }

    #[test]
    fn needs_two_samples() {
        let data = dataset_1d(&[(1.0, 0)]);
        assert!(fit(&data, &ForestConfig::default(), 0).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn affine_rescaling_keeps_predictions(col in 0usize..3, scale in 0.01f64..100.0, shift in -50.0f64..50.0, seed in 0u64..1000) {
            let data = blobs(8, 3, 3, 7.0, seed);
            let mut moved = data.clone();
            for r in &mut moved.features {
                r[col] = r[col] * scale + shift;
            }
            let cfg = ForestConfig { n_trees: 9, ..Default::default() };
            let a = fit(&data, &cfg, seed).unwrap();
            let b = fit(&moved, &cfg, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..30 {
                let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..9.0)).collect();
                let mut q = p.clone();
                q[col] = q[col] * scale + shift;
                proptest::prop_assert_eq!(argmax(&a.vote_fractions(&p)), argmax(&b.vote_fractions(&q)));
            }
        }
    }
}
