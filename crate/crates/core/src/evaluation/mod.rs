//! Cross-validation, metrics and classifier × feature-set comparison grids.
//!
//! Folds are evaluated in parallel but collected in fold order, so reports
//! never depend on scheduling.

mod folds;
mod metrics;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit, ClassifierKind, LabeledDataset, TrainConfig, TrainedModel};
use crate::error::Result;
use crate::features::FamilySet;

pub use folds::{stratified_holdout, stratified_kfold, FoldPlan, Protocol};
pub use metrics::{confusion_matrix, metrics_from_cm, ConfusionMatrix, Metrics};

/// Protocol plus the seed that drives fold assignment and every classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub protocol: Protocol,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::default(),
            seed: 42,
        }
    }
}

impl EvalConfig {
    pub fn plan(&self, data: &LabeledDataset) -> Result<FoldPlan> {
        self.protocol.plan(&data.labels, data.n_classes(), self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub test_indices: Vec<usize>,
    /// Predicted class of each entry of `test_indices`.
    pub predictions: Vec<usize>,
    pub confusion: ConfusionMatrix,
    /// `None` only for an empty fold.
    pub metrics: Option<Metrics>,
}

/// One classifier on one feature set under one fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub classifier: ClassifierKind,
    pub features: FamilySet,
    pub n_features: usize,
    pub protocol: Protocol,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub class_names: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub pooled: ConfusionMatrix,
    pub metrics: Metrics,
}

/// Fits `kind` on the training side of `fold`, restricted to `families`.
///
/// Only training rows reach the classifier (and its standardizer).
pub fn fit_fold(
    data: &LabeledDataset,
    kind: ClassifierKind,
    families: FamilySet,
    train_cfg: &TrainConfig,
    plan: &FoldPlan,
    fold: usize,
) -> Result<TrainedModel> {
    let train = data.rows(&plan.train_indices(fold)).select_families(families)?;
    let cfg = TrainConfig {
        seed: plan.seed,
        ..train_cfg.clone()
    };
    fit(kind, &train, &cfg)
}

pub fn cross_validate(
    data: &LabeledDataset,
    kind: ClassifierKind,
    families: FamilySet,
    train_cfg: &TrainConfig,
    eval: &EvalConfig,
) -> Result<CvReport> {
    let plan = eval.plan(data)?;
    cross_validate_with_plan(data, kind, families, train_cfg, eval.protocol, &plan)
}

pub fn cross_validate_with_plan(
    data: &LabeledDataset,
    kind: ClassifierKind,
    families: FamilySet,
    train_cfg: &TrainConfig,
    protocol: Protocol,
    plan: &FoldPlan,
) -> Result<CvReport> {
    let selected = data.select_families(families)?;
    let k = data.n_classes();
    let folds = (0..plan.k())
        .into_par_iter()
        .map(|f| {
            let model = fit_fold(data, kind, families, train_cfg, plan, f)?;
            let test = plan.test_indices(f).to_vec();
            let predictions: Vec<usize> = test
                .iter()
                .map(|&i| model.predict_values(&selected.features[i]).class)
                .collect();
            let truth: Vec<usize> = test.iter().map(|&i| data.labels[i]).collect();
            let confusion = confusion_matrix(&truth, &predictions, k)?;
            let metrics = if test.is_empty() {
                None
            } else {
                Some(metrics_from_cm(&confusion)?)
            };
            Ok(FoldResult {
                test_indices: test,
                predictions,
                confusion,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pooled = ConfusionMatrix::zeros(k);
    for f in &folds {
        pooled.add(&f.confusion);
    }
    let metrics = metrics_from_cm(&pooled)?;
    Ok(CvReport {
        classifier: kind,
        features: families,
        n_features: selected.n_features(),
        protocol,
        seed: plan.seed,
        train_config: TrainConfig {
            seed: plan.seed,
            ..train_cfg.clone()
        },
        class_names: data.class_names.clone(),
        folds,
        pooled,
        metrics,
    })
}

/// Every classifier × feature-set cell, all sharing one fold plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub build: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub n_samples: usize,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub classifiers: Vec<ClassifierKind>,
    pub feature_sets: Vec<FamilySet>,
    pub train_config: TrainConfig,
    pub plan: FoldPlan,
    /// Grouped by feature set, then classifier, in the orders above.
    pub cells: Vec<CvReport>,
}

impl GridReport {
    pub fn cell(&self, kind: ClassifierKind, features: FamilySet) -> Option<&CvReport> {
        self.cells
            .iter()
            .find(|c| c.classifier == kind && c.features == features)
    }
}

pub fn comparison_grid(
    data: &LabeledDataset,
    classifiers: &[ClassifierKind],
    feature_sets: &[FamilySet],
    train_cfg: &TrainConfig,
    eval: &EvalConfig,
) -> Result<GridReport> {
    let plan = eval.plan(data)?;
    let jobs: Vec<(FamilySet, ClassifierKind)> = feature_sets
        .iter()
        .flat_map(|&f| classifiers.iter().map(move |&c| (f, c)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(f, c)| cross_validate_with_plan(data, c, f, train_cfg, eval.protocol, &plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridReport {
        build: crate::BUILD_FINGERPRINT.to_string(),
        protocol: eval.protocol,
        seed: eval.seed,
        n_samples: data.n_samples(),
        class_names: data.class_names.clone(),
        class_counts: data.class_counts(),
        classifiers: classifiers.to_vec(),
        feature_sets: feature_sets.to_vec(),
        train_config: TrainConfig {
            seed: eval.seed,
            ..train_cfg.clone()
        },
        plan,
        cells,
    })
}
