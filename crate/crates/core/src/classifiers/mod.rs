//! Random forest, Gaussian naive Bayes, multilayer perceptron and fuzzy
//! decision tree behind one fit/predict contract.
//!
//! Every fit is a pure function of the training data and [`TrainConfig`]
//! (including its seed). Ties between classes always resolve to the lowest
//! class index.

pub mod forest;
pub mod fuzzy;
pub mod mlp;
pub mod naive_bayes;
mod persist;
mod standardize;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::table::FeatureTable;
use crate::features::{FamilySet, FeatureSchema, FeatureVector};

pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use standardize::Standardizer;

/// Training matrix with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub schema: FeatureSchema,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        schema: FeatureSchema,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch(features.len(), labels.len()));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {y} out of range for {} classes",
                class_names.len()
            )));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::LengthMismatch(row.len(), schema.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i} has a non-finite value")));
            }
        }
        Ok(Self {
            features,
            labels,
            class_names,
            schema,
        })
    }

    /// Classes are numbered in order of first appearance.
    pub fn from_table(table: &FeatureTable) -> Result<Self> {
        let mut classes: Vec<String> = Vec::new();
        for row in &table.rows {
            if !classes.contains(&row.label) {
                classes.push(row.label.clone());
            }
        }
        Self::from_table_with_classes(table, classes)
    }

    pub fn from_table_with_classes(table: &FeatureTable, class_names: Vec<String>) -> Result<Self> {
        let labels = table
            .rows
            .iter()
            .map(|r| {
                class_names
                    .iter()
                    .position(|c| *c == r.label)
                    .ok_or_else(|| Error::InvalidDataset(format!("unknown class {:?}", r.label)))
            })
            .collect::<Result<_>>()?;
        let features = table.rows.iter().map(|r| r.values.clone()).collect();
        Self::new(features, labels, class_names, table.schema.clone())
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices` (in that order, repeats allowed).
    pub fn rows(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            schema: self.schema.clone(),
        }
    }

    /// Only the columns belonging to `families`.
    pub fn select_families(&self, families: FamilySet) -> Result<LabeledDataset> {
        let cols = self.schema.select(families);
        if cols.is_empty() {
            return Err(Error::NoFeatures);
        }
        Ok(LabeledDataset {
            features: self
                .features
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
            schema: self.schema.subset(&cols),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "NB")]
    NaiveBayes,
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "FDT")]
    FuzzyTree,
}

impl ClassifierKind {
    /// Report row order.
    pub const ALL: [ClassifierKind; 4] = [Self::RandomForest, Self::NaiveBayes, Self::Mlp, Self::FuzzyTree];

    pub fn short_name(self) -> &'static str {
        match self {
            Self::RandomForest => "RF",
            Self::NaiveBayes => "NB",
            Self::Mlp => "MLP",
            Self::FuzzyTree => "FDT",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "random_forest" | "random-forest" => Ok(Self::RandomForest),
            "nb" | "naive_bayes" | "naive-bayes" | "bn" => Ok(Self::NaiveBayes),
            "mlp" => Ok(Self::Mlp),
            "fdt" | "fuzzy" | "fuzzy_tree" | "fuzzy-tree" => Ok(Self::FuzzyTree),
            _ => Err(Error::InvalidConfig(format!("unknown classifier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `⌊√D⌋` (at least one).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            features_per_split: None,
            bootstrap: true,
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    /// Hidden layer widths; `None` means one layer of `max(8, (D + K) / 2)`.
    pub hidden: Option<Vec<usize>>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: None,
            activation: Activation::Sigmoid,
            epochs: 500,
            learning_rate: 0.5,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbConfig {
    /// Variance floor as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NbConfig {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzyConfig {
    /// A node becomes a leaf once its dominant class reaches this truth level.
    pub leaf_threshold: f64,
    pub max_depth: usize,
    /// Branches carrying less total membership than this become leaves.
    pub min_evidence: f64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self {
            leaf_threshold: 0.9,
            max_depth: 5,
            min_evidence: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
    pub naive_bayes: NbConfig,
    pub fuzzy: FuzzyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            forest: ForestConfig::default(),
            mlp: MlpConfig::default(),
            naive_bayes: NbConfig::default(),
            fuzzy: FuzzyConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.forest.n_trees == 0 {
            return bad("forest.n_trees must be positive");
        }
        if self.forest.features_per_split == Some(0) || self.forest.max_depth == Some(0) {
            return bad("forest.features_per_split and forest.max_depth must be positive");
        }
        if self.forest.min_samples_leaf == 0 {
            return bad("forest.min_samples_leaf must be positive");
        }
        if !(self.mlp.learning_rate > 0.0 && self.mlp.learning_rate.is_finite()) {
            return bad("mlp.learning_rate must be positive");
        }
        if !(self.mlp.l2 >= 0.0) {
            return bad("mlp.l2 must be non-negative");
        }
        if self.mlp.hidden.as_ref().is_some_and(|h| h.contains(&0)) {
            return bad("mlp.hidden widths must be positive");
        }
        if !(self.naive_bayes.var_smoothing >= 0.0) {
            return bad("naive_bayes.var_smoothing must be non-negative");
        }
        if !(self.fuzzy.leaf_threshold > 0.0 && self.fuzzy.leaf_threshold <= 1.0) {
            return bad("fuzzy.leaf_threshold must be in (0, 1]");
        }
        if self.fuzzy.max_depth == 0 || !(self.fuzzy.min_evidence >= 0.0) {
            return bad("fuzzy.max_depth must be positive and fuzzy.min_evidence non-negative");
        }
        Ok(())
    }
}

/// Model-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    RandomForest(forest::ForestModel),
    NaiveBayes(naive_bayes::NaiveBayesModel),
    Mlp(mlp::MlpModel),
    FuzzyTree(fuzzy::FuzzyTreeModel),
}

/// A fitted classifier bound to the feature schema it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    /// Applied before the model sees a vector; only the MLP uses one.
    pub standardizer: Option<Standardizer>,
    pub schema: FeatureSchema,
    pub class_names: Vec<String>,
}

/// Predicted class plus per-class scores.
///
/// `scores` are vote fractions (RF), softmax probabilities (MLP), normalized
/// confidences (FDT) or normalized log-posteriors (NB). `probabilities` is
/// always a distribution summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn fit(kind: ClassifierKind, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut standardizer = None;
    let params = match kind {
        ClassifierKind::RandomForest => ModelParams::RandomForest(forest::fit(data, &cfg.forest, cfg.seed)?),
        ClassifierKind::NaiveBayes => ModelParams::NaiveBayes(naive_bayes::fit(data, &cfg.naive_bayes)?),
        ClassifierKind::Mlp => {
            let s = Standardizer::fit(&data.features);
            let z = LabeledDataset {
                features: s.transform_all(&data.features),
                ..data.clone()
            };
            standardizer = Some(s);
            ModelParams::Mlp(mlp::fit(&z, &cfg.mlp, cfg.seed)?)
        }
        ClassifierKind::FuzzyTree => ModelParams::FuzzyTree(fuzzy::fit(data, &cfg.fuzzy)?),
    };
    Ok(TrainedModel {
        params,
        standardizer,
        schema: data.schema.clone(),
        class_names: data.class_names.clone(),
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.params {
            ModelParams::RandomForest(_) => ClassifierKind::RandomForest,
            ModelParams::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            ModelParams::Mlp(_) => ClassifierKind::Mlp,
            ModelParams::FuzzyTree(_) => ClassifierKind::FuzzyTree,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Predicts a schema-tagged vector, refusing vectors from another schema.
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        if **x.schema() != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.fingerprint(),
                actual: x.schema().fingerprint(),
            });
        }
        Ok(self.predict_values(x.values()))
    }

    /// Predicts a raw row laid out in this model's schema order.
    ///
    /// # Panics
    /// If `x` does not have one value per schema feature.
    pub fn predict_values(&self, x: &[f64]) -> Prediction {
        assert_eq!(x.len(), self.schema.len(), "feature row length");
        let standardized;
        let x = match &self.standardizer {
            Some(s) => {
                standardized = s.transform(x);
                &standardized[..]
            }
            None => x,
        };
        match &self.params {
            ModelParams::RandomForest(m) => {
                let votes = m.vote_fractions(x);
                Prediction {
                    class: argmax(&votes),
                    probabilities: votes.clone(),
                    scores: votes,
                }
            }
            ModelParams::NaiveBayes(m) => {
                let (class, log_post) = m.predict(x);
                Prediction {
                    class,
                    probabilities: log_post.iter().map(|v| v.exp()).collect(),
                    scores: log_post,
                }
            }
            ModelParams::Mlp(m) => {
                let p = m.predict_proba(x);
                Prediction {
                    class: argmax(&p),
                    probabilities: p.clone(),
                    scores: p,
                }
            }
            ModelParams::FuzzyTree(m) => {
                let c = m.confidences(x);
                Prediction {
                    class: argmax(&c),
                    probabilities: c.clone(),
                    scores: c,
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn dataset(rows: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> LabeledDataset {
        let d = rows[0].len();
        let names: Vec<String> = (0..d).map(|j| format!("stat.f{j}")).collect();
        let schema = FeatureSchema::from_names(&names).unwrap();
        let classes = (0..k).map(|c| format!("class{c}")).collect();
        LabeledDataset::new(rows, labels, classes, schema).unwrap()
    }

    pub(crate) fn dataset_1d(points: &[(f64, usize)]) -> LabeledDataset {
        let k = points.iter().map(|p| p.1).max().unwrap() + 1;
        dataset(
            points.iter().map(|p| vec![p.0]).collect(),
            points.iter().map(|p| p.1).collect(),
            k,
        )
    }

    /// Gaussian blobs around distinct centres, deterministic in `seed`.
    pub(crate) fn blobs(n_per_class: usize, k: usize, d: usize, spread: f64, seed: u64) -> LabeledDataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..k {
            for _ in 0..n_per_class {
                rows.push(
                    (0..d)
                        .map(|j| ((c * 7 + j * 3) % 5) as f64 * 2.0 + spread * (rng.gen::<f64>() - 0.5))
                        .collect(),
                );
                labels.push(c);
            }
        }
        dataset(rows, labels, k)
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), 0);
    }

    #[test]
    fn dataset_validation() {
        let schema = FeatureSchema::from_names(&["stat.a"]).unwrap();
        let classes = vec!["A".to_string()];
        assert!(LabeledDataset::new(vec![], vec![], classes.clone(), schema.clone()).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![1], classes.clone(), schema.clone()).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0, 2.0]], vec![0], classes.clone(), schema.clone()).is_err());
        assert!(LabeledDataset::new(vec![vec![f64::NAN]], vec![0], classes, schema).is_err());
    }

    #[test]
    fn family_selection_keeps_column_order() {
        let schema = FeatureSchema::from_names(&["lab.a", "stat.b", "dwt.c", "lab.d"]).unwrap();
        let data = LabeledDataset::new(vec![vec![1.0, 2.0, 3.0, 4.0]], vec![0], vec!["A".into()], schema).unwrap();
        let lab = data.select_families("lab".parse().unwrap()).unwrap();
        assert_eq!(lab.features, vec![vec![1.0, 4.0]]);
        assert_eq!(lab.schema.names().collect::<Vec<_>>(), ["lab.a", "lab.d"]);
        assert!(matches!(data.select_families(FamilySet::NONE), Err(Error::NoFeatures)));
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let data = blobs(5, 2, 3, 1.0, 0);
        let model = fit(ClassifierKind::NaiveBayes, &data, &TrainConfig::default()).unwrap();
        let other = std::sync::Arc::new(FeatureSchema::from_names(&["lab.x", "lab.y", "lab.z"]).unwrap());
        let v = FeatureVector::new(vec![0.0; 3], other).unwrap();
        assert!(matches!(model.predict(&v), Err(Error::SchemaMismatch { .. })));
        let ok = FeatureVector::new(vec![0.0; 3], std::sync::Arc::new(data.schema.clone())).unwrap();
        assert!(model.predict(&ok).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.mlp.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.forest.n_trees = 0;
        assert!(cfg.validate().is_err());
        let parsed: TrainConfig = serde_json::from_str(r#"{"seed": 7, "mlp": {"epochs": 10}}"#).unwrap();
        assert_eq!((parsed.seed, parsed.mlp.epochs, parsed.mlp.learning_rate), (7, 10, 0.5));
        assert!(serde_json::from_str::<TrainConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn every_kind_yields_distributions() {
        let data = blobs(8, 3, 4, 1.5, 3);
        let mut cfg = TrainConfig::default();
        cfg.forest.n_trees = 15;
        cfg.mlp.epochs = 50;
        for kind in ClassifierKind::ALL {
            let model = fit(kind, &data, &cfg).unwrap();
            assert_eq!(model.kind(), kind);
            for row in &data.features {
                let p = model.predict_values(row);
                let total: f64 = p.probabilities.iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "{kind}: {p:?}");
                assert!(p.probabilities.iter().all(|&v| v >= 0.0));
                assert!(p.class < 3);
            }
        }
    }

    #[test]
    fn kind_names() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.short_name().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
    }
}
