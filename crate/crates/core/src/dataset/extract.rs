//! Manifest → feature table: decode, segment and featurize every image.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use crate::classifiers::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::table::{FeatureRow, FeatureTable};
use crate::features::{extract_hybrid, FeatureConfig, FeatureSchema, FeatureVector};
use crate::imaging::decode_image;
use crate::segmentation::{prepare_image, SegmentationParams};

/// Largest tolerated share of failed images under [`FailurePolicy::Skip`].
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Drop failing images and record why.
    #[default]
    Skip,
    /// Stop at the first failing image (in manifest order).
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionFailure {
    pub path: String,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub table: FeatureTable,
    /// Class vocabulary of the manifest, including classes whose images all
    /// failed.
    pub classes: Vec<String>,
    pub failures: Vec<ExtractionFailure>,
}

impl Extraction {
    pub fn dataset(&self) -> Result<LabeledDataset> {
        LabeledDataset::from_table_with_classes(&self.table, self.classes.clone())
    }
}

/// Read, decode, segment and featurize one image file.
pub fn process_image(path: &Path, seg: &SegmentationParams, feat: &FeatureConfig) -> Result<FeatureVector> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingImage(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let img = decode_image(&bytes)?;
    extract_hybrid(&prepare_image(&img, seg)?, feat)
}

pub fn extract_dataset(
    manifest: &DatasetManifest,
    seg: &SegmentationParams,
    feat: &FeatureConfig,
    policy: FailurePolicy,
) -> Result<Extraction> {
    seg.validate()?;
    let schema: Arc<FeatureSchema> = Arc::new(feat.schema()?);
    let results: Vec<Result<FeatureVector>> = manifest
        .records
        .par_iter()
        .map(|r| process_image(&manifest.resolve(r), seg, feat))
        .collect();

    let mut table = FeatureTable::new((*schema).clone());
    let mut failures = Vec::new();
    for (record, result) in manifest.records.iter().zip(results) {
        match result {
            Ok(v) => table.push(FeatureRow {
                path: record.path.clone(),
                label: record.label.clone(),
                values: v.into_values(),
            })?,
            Err(e) if policy == FailurePolicy::Abort => {
                return Err(Error::AbortOnError {
                    path: record.path.clone(),
                    source: Box::new(e),
                })
            }
            Err(e) => failures.push(ExtractionFailure {
                path: record.path.clone(),
                label: record.label.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let total = manifest.records.len();
    if failures.len() as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total,
        });
    }
    Ok(Extraction {
        table,
        classes: manifest.classes.clone(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::manifest::ManifestRecord;
    use crate::dataset::synth::{synth_generate, SynthSpec};
    use crate::imaging::{encode_ppm, RasterRgb};

    fn small_spec(per_class: usize) -> SynthSpec {
        SynthSpec {
            images_per_class: per_class,
            ..SynthSpec::default()
        }
    }

    fn seg() -> SegmentationParams {
        SegmentationParams {
            resize_scale: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn rows_follow_manifest_order_and_rerun_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_generate(&small_spec(3), dir.path()).unwrap();
        let a = extract_dataset(&manifest, &seg(), &FeatureConfig::default(), FailurePolicy::Skip).unwrap();
        assert!(a.failures.is_empty());
        assert_eq!(a.table.rows.len(), 12);
        assert_eq!(a.table.schema.len(), 51);
        let paths: Vec<&str> = a.table.rows.iter().map(|r| r.path.as_str()).collect();
        let expected: Vec<&str> = manifest.records.iter().map(|r| r.path.as_str()).collect();
        assert_eq!(paths, expected);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = single
            .install(|| extract_dataset(&manifest, &seg(), &FeatureConfig::default(), FailurePolicy::Skip).unwrap());
        assert_eq!(a.table.to_csv_string(), b.table.to_csv_string());
        let data = a.dataset().unwrap();
        assert_eq!(data.class_counts(), vec![3, 3, 3, 3]);
    }

    #[test]
    fn failure_policies() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = synth_generate(&small_spec(10), dir.path()).unwrap();
        let blank = RasterRgb::filled(64, 64, [255, 255, 255]).unwrap();
        std::fs::write(dir.path().join("blank.ppm"), encode_ppm(&blank)).unwrap();
        manifest.records.insert(
            5,
            ManifestRecord {
                path: "blank.ppm".into(),
                label: "Healthy".into(),
            },
        );

        let out = extract_dataset(&manifest, &seg(), &FeatureConfig::default(), FailurePolicy::Skip).unwrap();
        assert_eq!(out.table.rows.len(), 40);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].path, "blank.ppm");
        assert_eq!(out.failures[0].reason, "no ROI found");

        match extract_dataset(&manifest, &seg(), &FeatureConfig::default(), FailurePolicy::Abort) {
            Err(Error::AbortOnError { path, source }) => {
                assert_eq!(path, "blank.ppm");
                assert!(matches!(*source, Error::NoRoiFound));
            }
            other => panic!("expected abort, got {other:?}"),
        }

        // 3 failures out of 43 exceeds 5%
        for (i, name) in ["gone1.ppm", "gone2.ppm"].into_iter().enumerate() {
            manifest.records.insert(
                i,
                ManifestRecord {
                    path: name.into(),
                    label: "Healthy".into(),
                },
            );
        }
        assert!(matches!(
            extract_dataset(&manifest, &seg(), &FeatureConfig::default(), FailurePolicy::Skip),
            Err(Error::TooManyFailures { failed: 3, total: 43 })
        ));
    }

    #[test]
    fn missing_file_is_reported_as_such() {
        let err = process_image(Path::new("/definitely/not/here.ppm"), &seg(), &FeatureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MissingImage(_)));
    }
}
