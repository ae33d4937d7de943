//! C ABI over the datefruit pipeline.
//!
//! Images and models live behind opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! an `int32_t` status (`DF_OK` on success); on failure a description is
//! available from [`df_last_error_message`] on the same thread. Status codes
//! 2–5 match the `datefruit` CLI exit codes.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use datefruit::classifiers::{self, TrainedModel};
use datefruit::features::{extract_hybrid, FeatureConfig, FeatureSchema, FeatureVector};
use datefruit::imaging::{self, RasterRgb};
use datefruit::segmentation::{self, SegmentationParams};
use datefruit::{Error, ErrorKind};

pub const DF_OK: i32 = 0;
/// A required pointer was null or an output buffer was too small.
pub const DF_ERR_INVALID_ARGUMENT: i32 = 1;
/// Bad parameters, corrupt or incompatible model, schema mismatch.
pub const DF_ERR_CONFIG: i32 = 2;
pub const DF_ERR_IO: i32 = 3;
/// Undecodable image, no ROI found and other data-dependent failures.
pub const DF_ERR_PIPELINE: i32 = 4;
/// Invariant violation or a caught panic.
pub const DF_ERR_INTERNAL: i32 = 5;

/// Number of values written by [`df_extract_features`].
pub const DF_FEATURE_COUNT: usize = 51;

/// Decoded RGB image.
pub struct DfImage(RasterRgb);

/// Trained classifier loaded from its JSON document.
pub struct DfModel {
    model: TrainedModel,
    class_names: Vec<CString>,
    schema: Arc<FeatureSchema>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => DF_ERR_CONFIG,
        ErrorKind::Io => DF_ERR_IO,
        ErrorKind::Pipeline => DF_ERR_PIPELINE,
        ErrorKind::Internal => DF_ERR_INTERNAL,
    }
}

enum Failure {
    Invalid(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DF_OK,
        Ok(Err(Failure::Invalid(msg))) => {
            set_last_error(msg.to_string());
            DF_ERR_INVALID_ARGUMENT
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            DF_ERR_INTERNAL
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Invalid(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Invalid(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn segmentation_params(resize_scale: f64) -> Result<SegmentationParams, Failure> {
    let params = SegmentationParams {
        resize_scale,
        ..SegmentationParams::default()
    };
    params.validate()?;
    Ok(params)
}

/// Message for the most recent failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn df_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Decodes PNG, PPM or PGM bytes into a new image handle.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn df_image_decode(bytes: *const u8, len: usize, out: *mut *mut DfImage) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Invalid("out is null"));
        }
        let data = slice(bytes, len, "bytes is null")?;
        let img = imaging::decode_image(data)?;
        *out = Box::into_raw(Box::new(DfImage(img)));
        Ok(())
    })
}

/// # Safety
/// `image` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_image_dimensions(image: *const DfImage, width: *mut usize, height: *mut usize) -> i32 {
    guard(|| {
        let img = &non_null(image, "image is null")?.0;
        if width.is_null() || height.is_null() {
            return Err(Failure::Invalid("width or height is null"));
        }
        *width = img.width();
        *height = img.height();
        Ok(())
    })
}

/// Releases an image handle. NULL is ignored.
///
/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn df_image_free(image: *mut DfImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Resizes by `resize_scale` (in (0, 1]) with default segmentation settings
/// and returns the crop around the fruit as a new image handle.
///
/// # Safety
/// `image` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn df_segment_roi(image: *const DfImage, resize_scale: f64, out: *mut *mut DfImage) -> i32 {
    guard(|| {
        let img = &non_null(image, "image is null")?.0;
        if out.is_null() {
            return Err(Failure::Invalid("out is null"));
        }
        let crop = segmentation::segment_roi(img, &segmentation_params(resize_scale)?)?;
        *out = Box::into_raw(Box::new(DfImage(crop)));
        Ok(())
    })
}

/// Writes the `DF_FEATURE_COUNT` hybrid features (Lab, statistical, wavelet,
/// in that order) of the whole image into `out`. Segment first to featurize
/// only the fruit.
///
/// # Safety
/// `image` must be a live handle and `out` must have room for `capacity`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn df_extract_features(image: *const DfImage, out: *mut f64, capacity: usize) -> i32 {
    guard(|| {
        let img = &non_null(image, "image is null")?.0;
        if out.is_null() || capacity < DF_FEATURE_COUNT {
            return Err(Failure::Invalid(
                "output buffer is null or smaller than DF_FEATURE_COUNT",
            ));
        }
        let v = extract_hybrid(img, &FeatureConfig::default())?;
        debug_assert_eq!(v.values().len(), DF_FEATURE_COUNT);
        std::ptr::copy_nonoverlapping(v.values().as_ptr(), out, DF_FEATURE_COUNT);
        Ok(())
    })
}

/// Parses a model document written by `datefruit train`.
///
/// # Safety
/// `json` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_model_load(json: *const u8, len: usize, out: *mut *mut DfModel) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Invalid("out is null"));
        }
        let model = classifiers::load_model(slice(json, len, "json is null")?)?;
        let class_names = model
            .class_names
            .iter()
            .map(|n| CString::new(n.replace('\0', " ")).expect("NULs removed"))
            .collect();
        let schema = Arc::new(model.schema.clone());
        *out = Box::into_raw(Box::new(DfModel {
            model,
            class_names,
            schema,
        }));
        Ok(())
    })
}

/// Number of classes; class indices returned by the predict calls are below it.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn df_model_class_count(model: *const DfModel, out: *mut usize) -> i32 {
    guard(|| {
        let m = &non_null(model, "model is null")?.model;
        if out.is_null() {
            return Err(Failure::Invalid("out is null"));
        }
        *out = m.n_classes();
        Ok(())
    })
}

/// Name of class `index`, NUL-terminated and valid while the model lives.
/// NULL if the handle is null or the index is out of range.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn df_model_class_name(model: *const DfModel, index: usize) -> *const c_char {
    match model.as_ref() {
        Some(m) => m.class_names.get(index).map_or(ptr::null(), |c| c.as_ptr()),
        None => ptr::null(),
    }
}

/// Classifies a feature vector in the `df_extract_features` layout. The
/// model picks the columns it was trained on. Writes the winning class to
/// `class_out` and, when `probabilities` is non-NULL, one probability per
/// class (`capacity` must be at least the class count).
///
/// # Safety
/// `features` must point to `n_features` doubles; `probabilities`, when
/// non-NULL, to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn df_model_predict(
    model: *const DfModel,
    features: *const f64,
    n_features: usize,
    class_out: *mut usize,
    probabilities: *mut f64,
    capacity: usize,
) -> i32 {
    guard(|| {
        let m = non_null(model, "model is null")?;
        if class_out.is_null() {
            return Err(Failure::Invalid("class_out is null"));
        }
        let k = m.model.n_classes();
        if !probabilities.is_null() && capacity < k {
            return Err(Failure::Invalid("probability buffer smaller than the class count"));
        }
        let values = slice(features, n_features, "features is null")?.to_vec();
        let full = Arc::new(FeatureConfig::default().schema()?);
        let v = FeatureVector::new(values, full)?.project(&m.schema)?;
        let p = m.model.predict(&v)?;
        *class_out = p.class;
        if !probabilities.is_null() {
            std::ptr::copy_nonoverlapping(p.probabilities.as_ptr(), probabilities, k);
        }
        Ok(())
    })
}

/// Releases a model handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn df_model_free(model: *mut DfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
