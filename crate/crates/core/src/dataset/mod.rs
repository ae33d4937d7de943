//! Image manifests, the synthetic date generator and batch feature
//! extraction.

pub mod extract;
pub mod manifest;
pub mod synth;

pub use extract::{extract_dataset, process_image, Extraction, ExtractionFailure, FailurePolicy};
pub use manifest::{DatasetManifest, ManifestRecord};
pub use synth::{synth_generate, ClassSpec, SynthSpec};
