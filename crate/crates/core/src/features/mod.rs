//! Hybrid feature extraction: L*a*b* colour statistics, first/second-order
//! intensity statistics and Haar wavelet sub-band statistics.
//!
//! Families are always concatenated in the order lab ∥ stat ∥ dwt. With the
//! default configuration they contribute 9, 12 and 30 values.

pub mod color;
pub mod dwt;
pub mod stats;
pub mod table;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::{self, RasterGray, RasterRgb};

pub use color::{delta_e, rgb_to_xyz, xyz_to_lab, LabColor, WhiteReference, XyzColor};
pub use dwt::{dwt2_haar, dwt_multilevel, idwt2_haar, Grid, SubbandSet, Subbands};
pub use stats::{first_order_stats, glcm, second_order_stats, GlcmMatrix};
pub use table::{FeatureRow, FeatureTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lab,
    Stat,
    Dwt,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Lab, Family::Stat, Family::Dwt];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Lab => "lab",
            Family::Stat => "stat",
            Family::Dwt => "dwt",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lab" => Ok(Family::Lab),
            "stat" | "statistical" => Ok(Family::Stat),
            "dwt" => Ok(Family::Dwt),
            other => Err(Error::InvalidConfig(format!("unknown feature family {other:?}"))),
        }
    }
}

/// A set of enabled families, printed as e.g. `lab+stat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FamilySet {
    pub lab: bool,
    pub stat: bool,
    pub dwt: bool,
}

impl FamilySet {
    pub const ALL: FamilySet = FamilySet {
        lab: true,
        stat: true,
        dwt: true,
    };

    pub const NONE: FamilySet = FamilySet {
        lab: false,
        stat: false,
        dwt: false,
    };

    pub fn only(f: Family) -> Self {
        let mut s = FamilySet::NONE;
        s.set(f, true);
        s
    }

    pub fn contains(&self, f: Family) -> bool {
        match f {
            Family::Lab => self.lab,
            Family::Stat => self.stat,
            Family::Dwt => self.dwt,
        }
    }

    pub fn set(&mut self, f: Family, on: bool) {
        match f {
            Family::Lab => self.lab = on,
            Family::Stat => self.stat = on,
            Family::Dwt => self.dwt = on,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lab || self.stat || self.dwt)
    }

    pub fn families(&self) -> impl Iterator<Item = Family> + '_ {
        Family::ALL.into_iter().filter(|f| self.contains(*f))
    }

    /// The four feature sets of the standard comparison: lab, stat,
    /// lab+stat and all three.
    pub fn standard_grid() -> Vec<FamilySet> {
        vec![
            FamilySet::only(Family::Lab),
            FamilySet::only(Family::Stat),
            FamilySet {
                lab: true,
                stat: true,
                dwt: false,
            },
            FamilySet::ALL,
        ]
    }
}

impl Default for FamilySet {
    fn default() -> Self {
        FamilySet::ALL
    }
}

impl fmt::Display for FamilySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.families().map(Family::as_str).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for FamilySet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "all" {
            return Ok(FamilySet::ALL);
        }
        let mut set = FamilySet {
            lab: false,
            stat: false,
            dwt: false,
        };
        for part in s.split(['+', ',']) {
            set.set(part.parse()?, true);
        }
        Ok(set)
    }
}

impl TryFrom<String> for FamilySet {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FamilySet> for String {
    fn from(s: FamilySet) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureName {
    pub name: String,
    pub family: Family,
}

/// Ordered, uniquely named features with their family tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    features: Vec<FeatureName>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureName>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate feature name {:?}", f.name)));
            }
        }
        Ok(Self { features })
    }

    /// Infers family tags from the `lab.` / `stat.` / `dwt.` name prefixes.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let features = names
            .iter()
            .map(|n| {
                let name = n.as_ref();
                let prefix = name.split('.').next().unwrap_or_default();
                let family = prefix
                    .parse()
                    .map_err(|_| Error::InvalidDataset(format!("feature {name:?} has no family prefix")))?;
                Ok(FeatureName {
                    name: name.to_string(),
                    family,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(features)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureName] {
        &self.features
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Column indices whose family is enabled in `set`.
    pub fn select(&self, set: FamilySet) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| set.contains(f.family))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn subset(&self, columns: &[usize]) -> FeatureSchema {
        FeatureSchema {
            features: columns.iter().map(|&i| self.features[i].clone()).collect(),
        }
    }

    /// For each feature of `self`, its column in `source`. Fails with
    /// `SchemaMismatch` when `source` lacks one of them.
    pub fn columns_in(&self, source: &FeatureSchema) -> Result<Vec<usize>> {
        self.features
            .iter()
            .map(|f| {
                source
                    .features
                    .iter()
                    .position(|g| g == f)
                    .ok_or_else(|| Error::SchemaMismatch {
                        expected: self.fingerprint(),
                        actual: source.fingerprint(),
                    })
            })
            .collect()
    }

    /// SHA-256 over `family:name` lines, first 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for f in &self.features {
            hasher.update(f.family.as_str().as_bytes());
            hasher.update(b":");
            hasher.update(f.name.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Feature values bound to the schema that names them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    schema: Arc<FeatureSchema>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: Arc<FeatureSchema>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::LengthMismatch(values.len(), schema.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Internal(format!(
                "feature {} is not finite",
                schema.features[i].name
            )));
        }
        Ok(Self { values, schema })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Reorders and subsets the values by name to match `target`.
    pub fn project(&self, target: &Arc<FeatureSchema>) -> Result<FeatureVector> {
        if **target == *self.schema {
            return Ok(self.clone());
        }
        let cols = target.columns_in(&self.schema)?;
        Ok(FeatureVector {
            values: cols.iter().map(|&c| self.values[c]).collect(),
            schema: target.clone(),
        })
    }
}

/// Which families to compute and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub families: FamilySet,
    pub white: WhiteReference,
    pub dwt_levels: usize,
    pub glcm_levels: usize,
    pub glcm_offset: (i32, i32),
    /// Adds `Σ|i−j|p` as a thirteenth statistical feature.
    pub glcm_absolute_value: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            families: FamilySet::ALL,
            white: WhiteReference::default(),
            dwt_levels: 3,
            glcm_levels: 16,
            glcm_offset: (1, 0),
            glcm_absolute_value: false,
        }
    }
}

impl FeatureConfig {
    pub fn with_families(families: FamilySet) -> Self {
        Self {
            families,
            ..Default::default()
        }
    }

    fn family_names(&self, family: Family) -> Vec<String> {
        match family {
            Family::Lab => color::LAB_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            Family::Stat => {
                let mut v: Vec<String> = stats::FIRST_ORDER_NAMES
                    .iter()
                    .chain(stats::SECOND_ORDER_NAMES.iter())
                    .map(|s| s.to_string())
                    .collect();
                if self.glcm_absolute_value {
                    v.push(stats::ABSOLUTE_VALUE_NAME.to_string());
                }
                v
            }
            Family::Dwt => dwt::dwt_feature_names(self.dwt_levels),
        }
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        if self.families.is_empty() {
            return Err(Error::NoFeatures);
        }
        let features = self
            .families
            .families()
            .flat_map(|family| {
                self.family_names(family)
                    .into_iter()
                    .map(move |name| FeatureName { name, family })
            })
            .collect();
        FeatureSchema::new(features)
    }
}

/// Population moments of a sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub m3: f64,
}

impl Moments {
    /// Third standardized moment; zero for (near-)constant samples.
    pub fn skewness(&self) -> f64 {
        if self.variance < 1e-12 {
            0.0
        } else {
            self.m3 / self.variance.powf(1.5)
        }
    }
}

pub(crate) fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    Moments {
        mean,
        variance: m2 / n,
        m3: m3 / n,
    }
}

fn family_schema(cfg: &FeatureConfig, family: Family) -> Arc<FeatureSchema> {
    let cfg = FeatureConfig {
        families: FamilySet::only(family),
        ..cfg.clone()
    };
    Arc::new(cfg.schema().expect("single-family schema is never empty"))
}

/// Nine L*a*b* statistics of an image.
pub fn lab_features(img: &RasterRgb, white: &WhiteReference) -> FeatureVector {
    let cfg = FeatureConfig {
        white: *white,
        ..Default::default()
    };
    FeatureVector::new(
        color::lab_feature_values(img, white).to_vec(),
        family_schema(&cfg, Family::Lab),
    )
    .expect("Lab statistics of an 8-bit image are finite")
}

fn stat_values(img: &RasterGray, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    let mut v = first_order_stats(img)?.to_vec();
    let m = glcm(img, cfg.glcm_levels, cfg.glcm_offset)?;
    v.extend(second_order_stats(&m));
    if cfg.glcm_absolute_value {
        v.push(stats::glcm_absolute_value(&m));
    }
    Ok(v)
}

/// Six first-order statistics followed by six GLCM statistics.
pub fn statistical_features(img: &RasterGray, cfg: &FeatureConfig) -> Result<FeatureVector> {
    FeatureVector::new(stat_values(img, cfg)?, family_schema(cfg, Family::Stat))
}

pub fn dwt_features(img: &RasterGray, levels: usize) -> Result<FeatureVector> {
    let cfg = FeatureConfig {
        dwt_levels: levels,
        ..Default::default()
    };
    FeatureVector::new(dwt::dwt_feature_values(img, levels)?, family_schema(&cfg, Family::Dwt))
}

/// Concatenates the enabled families, computing the grayscale image once.
pub fn extract_hybrid(img: &RasterRgb, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let schema = Arc::new(cfg.schema()?);
    let gray = imaging::to_grayscale(img);
    let mut values = Vec::with_capacity(schema.len());
    if cfg.families.lab {
        values.extend(color::lab_feature_values(img, &cfg.white));
    }
    if cfg.families.stat {
        values.extend(stat_values(&gray, cfg)?);
    }
    if cfg.families.dwt {
        values.extend(dwt::dwt_feature_values(&gray, cfg.dwt_levels)?);
    }
    FeatureVector::new(values, schema)
}
