//! Date fruit disease recognition: ROI segmentation, color/texture/wavelet
//! feature extraction, four classifiers and a cross-validation harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod imaging;
pub mod segmentation;

pub use error::{Error, ErrorKind, Result};

/// Package name and version, printed by `--version` and in report headers.
pub const BUILD_FINGERPRINT: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
