//! Seeded stratified partitions of sample indices.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How held-out sets are formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    /// Stratified k-fold cross-validation.
    KFold { k: usize },
    /// One stratified train/test split with this fraction held out.
    Holdout { test_fraction: f64 },
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::KFold { k: 10 }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::KFold { k } => write!(f, "stratified {k}-fold cross-validation"),
            Protocol::Holdout { test_fraction } => {
                write!(f, "stratified holdout ({:.0}% test)", test_fraction * 100.0)
            }
        }
    }
}

impl Protocol {
    pub fn plan(&self, labels: &[usize], n_classes: usize, seed: u64) -> Result<FoldPlan> {
        match *self {
            Protocol::KFold { k } => stratified_kfold(labels, n_classes, k, seed),
            Protocol::Holdout { test_fraction } => stratified_holdout(labels, n_classes, test_fraction, seed),
        }
    }
}

/// Held-out index sets; each sample appears in at most one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub n_samples: usize,
    /// Sorted test indices of each fold.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every index not held out in `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut held = vec![false; self.n_samples];
        for &i in &self.folds[fold] {
            held[i] = true;
        }
        (0..self.n_samples).filter(|&i| !held[i]).collect()
    }
}

fn shuffled_by_class(labels: &[usize], n_classes: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= n_classes {
            return Err(Error::InvalidDataset(format!("label {y} out of range")));
        }
        by_class[y].push(i);
    }
    for members in &mut by_class {
        members.shuffle(rng);
    }
    Ok(by_class)
}

/// Per-class seeded shuffle, then round-robin assignment continuing across
/// classes so that fold sizes also stay within one of each other.
pub fn stratified_kfold(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k = {k}; need at least 2 folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class = shuffled_by_class(labels, n_classes, &mut rng)?;
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::StratificationImpossible {
                class,
                count: members.len(),
                k,
            });
        }
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for members in by_class {
        for i in members {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldPlan {
        seed,
        n_samples: labels.len(),
        folds,
    })
}

/// A single fold holding out `round(test_fraction · n_c)` samples of each
/// class, clamped so both sides keep at least one.
pub fn stratified_holdout(labels: &[usize], n_classes: usize, test_fraction: f64, seed: u64) -> Result<FoldPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {test_fraction} not in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class = shuffled_by_class(labels, n_classes, &mut rng)?;
    let mut test = Vec::new();
    for (class, members) in by_class.into_iter().enumerate() {
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(Error::StratificationImpossible { class, count: n, k: 2 });
        }
        let take = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        test.extend_from_slice(&members[..take]);
    }
    test.sort_unstable();
    Ok(FoldPlan {
        seed,
        n_samples: labels.len(),
        folds: vec![test],
    })
}
