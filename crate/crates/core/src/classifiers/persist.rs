//! Versioned JSON model documents.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "model_kind": "RF",
//!   "schema_fingerprint": "…",
//!   "feature_names": ["lab.mean.L", …],
//!   "class_names": ["Healthy", …],
//!   "standardizer": null,
//!   "parameters": { … }
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so every parameter
//! reloads bit-exactly.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClassifierKind, ModelParams, Standardizer, TrainedModel};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format_version: u32,
    model_kind: ClassifierKind,
    schema_fingerprint: String,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    standardizer: Option<Standardizer>,
    parameters: Value,
}

fn corrupt(e: impl std::fmt::Display) -> Error {
    Error::CorruptModel(e.to_string())
}

pub fn save_model(model: &TrainedModel) -> Vec<u8> {
    let parameters = match &model.params {
        ModelParams::RandomForest(m) => serde_json::to_value(m),
        ModelParams::NaiveBayes(m) => serde_json::to_value(m),
        ModelParams::Mlp(m) => serde_json::to_value(m),
        ModelParams::FuzzyTree(m) => serde_json::to_value(m),
    }
    .expect("model parameters are plain data");
    let doc = Document {
        format_version: MODEL_FORMAT_VERSION,
        model_kind: model.kind(),
        schema_fingerprint: model.schema.fingerprint(),
        feature_names: model.schema.names().map(str::to_string).collect(),
        class_names: model.class_names.clone(),
        standardizer: model.standardizer.clone(),
        parameters,
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("document is plain data");
    out.push(b'\n');
    out
}

pub fn load_model(bytes: &[u8]) -> Result<TrainedModel> {
    let value: Value = serde_json::from_slice(bytes).map_err(corrupt)?;
    let version = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version"))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::VersionMismatch(u32::try_from(version).unwrap_or(u32::MAX)));
    }
    let doc: Document = serde_json::from_value(value).map_err(corrupt)?;
    let schema = FeatureSchema::from_names(&doc.feature_names).map_err(corrupt)?;
    if schema.fingerprint() != doc.schema_fingerprint {
        return Err(corrupt("schema fingerprint does not match feature names"));
    }
    let (d, k) = (schema.len(), doc.class_names.len());
    if k == 0 {
        return Err(corrupt("no classes"));
    }
    let params = match doc.model_kind {
        ClassifierKind::RandomForest => {
            ModelParams::RandomForest(serde_json::from_value(doc.parameters).map_err(corrupt)?)
        }
        ClassifierKind::NaiveBayes => ModelParams::NaiveBayes(serde_json::from_value(doc.parameters).map_err(corrupt)?),
        ClassifierKind::Mlp => ModelParams::Mlp(serde_json::from_value(doc.parameters).map_err(corrupt)?),
        ClassifierKind::FuzzyTree => ModelParams::FuzzyTree(serde_json::from_value(doc.parameters).map_err(corrupt)?),
    };
    check_shapes(&params, d, k)?;
    if let Some(s) = &doc.standardizer {
        if s.mean.len() != d || s.std.len() != d {
            return Err(corrupt("standardizer length differs from schema"));
        }
    }
    Ok(TrainedModel {
        params,
        standardizer: doc.standardizer,
        schema,
        class_names: doc.class_names,
    })
}

/// Rejects documents whose parameters would index out of bounds at
/// prediction time.
fn check_shapes(params: &ModelParams, d: usize, k: usize) -> Result<()> {
    use super::fuzzy::FuzzyNode;
    use super::tree::TreeNode;
    let ok = match params {
        ModelParams::RandomForest(m) => {
            m.n_classes == k
                && !m.trees.is_empty()
                && m.trees.iter().all(|t| {
                    let n = t.nodes.len();
                    n > 0
                        && t.nodes.iter().enumerate().all(|(i, node)| match node {
                            TreeNode::Split {
                                feature, left, right, ..
                            } => *feature < d && *left > i && *right > i && *left < n && *right < n,
                            TreeNode::Leaf { counts } => counts.len() == k,
                        })
                })
        }
        ModelParams::NaiveBayes(m) => {
            m.log_priors.len() == k
                && m.means.len() == k
                && m.variances.len() == k
                && m.means.iter().chain(&m.variances).all(|r| r.len() == d)
        }
        ModelParams::Mlp(m) => {
            let mut width = d;
            let mut fine = !m.layers.is_empty();
            for l in &m.layers {
                fine &= l.inputs == width && l.weights.len() == l.inputs * l.outputs && l.biases.len() == l.outputs;
                width = l.outputs;
            }
            fine && width == k
        }
        ModelParams::FuzzyTree(m) => {
            let n = m.nodes.len();
            m.n_classes == k
                && m.partitions.len() == d
                && n > 0
                && m.nodes.iter().enumerate().all(|(i, node)| match node {
                    FuzzyNode::Split { feature, children } => *feature < d && children.iter().all(|&c| c > i && c < n),
                    FuzzyNode::Leaf { confidence } => confidence.len() == k,
                })
        }
    };
    if ok {
        Ok(())
    } else {
        Err(corrupt("parameter shapes do not match schema and classes"))
    }
}
