//! Exercises the C ABI from Rust, and once from C through the generated header.

use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;
use std::sync::Arc;

use datefruit::classifiers::{self, ClassifierKind, LabeledDataset, TrainConfig};
use datefruit::dataset::synth::render;
use datefruit::dataset::SynthSpec;
use datefruit::features::{extract_hybrid, Family, FamilySet, FeatureConfig, FeatureVector};
use datefruit::imaging::{encode_ppm, RasterRgb};
use datefruit::segmentation::{segment_roi, SegmentationParams};
use datefruit_ffi::*;

fn last_error() -> String {
    let p = df_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn decode(bytes: &[u8]) -> *mut DfImage {
    let mut img = ptr::null_mut();
    assert_eq!(unsafe { df_image_decode(bytes.as_ptr(), bytes.len(), &mut img) }, DF_OK);
    img
}

fn seg() -> SegmentationParams {
    SegmentationParams {
        resize_scale: 0.5,
        ..SegmentationParams::default()
    }
}

fn synth_image(class: usize, index: usize) -> RasterRgb {
    render(&SynthSpec::default(), class, index).0
}

/// Naive Bayes on the Lab + statistical columns of a few synthetic images.
fn model_json() -> Vec<u8> {
    let spec = SynthSpec::default();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..spec.classes.len() {
        for i in 0..6 {
            let roi = segment_roi(&synth_image(class, i), &seg()).unwrap();
            rows.push(extract_hybrid(&roi, &FeatureConfig::default()).unwrap().into_values());
            labels.push(class);
        }
    }
    let names = spec.classes.iter().map(|c| c.name.clone()).collect();
    let schema = FeatureConfig::default().schema().unwrap();
    let data = LabeledDataset::new(rows, labels, names, schema).unwrap();
    let mut families = FamilySet::only(Family::Lab);
    families.set(Family::Stat, true);
    let data = data.select_families(families).unwrap();
    let model = classifiers::fit(ClassifierKind::NaiveBayes, &data, &TrainConfig::default()).unwrap();
    classifiers::save_model(&model)
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/datefruit.h")).unwrap();
    for sym in [
        "typedef struct DfImage DfImage;",
        "typedef struct DfModel DfModel;",
        "#define DF_OK 0",
        "#define DF_ERR_CONFIG 2",
        "#define DF_ERR_PIPELINE 4",
        "#define DF_FEATURE_COUNT 51",
        "df_last_error_message(void)",
        "df_image_decode(",
        "df_image_dimensions(",
        "df_image_free(",
        "df_segment_roi(",
        "df_extract_features(",
        "df_model_load(",
        "df_model_class_count(",
        "df_model_class_name(",
        "df_model_predict(",
        "df_model_free(",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

#[test]
fn image_decode_segment_and_features_match_the_library() {
    let raw = synth_image(2, 0);
    let img = decode(&encode_ppm(&raw));
    let (mut w, mut h) = (0, 0);
    assert_eq!(unsafe { df_image_dimensions(img, &mut w, &mut h) }, DF_OK);
    assert_eq!((w, h), (256, 192));

    let mut roi = ptr::null_mut();
    assert_eq!(unsafe { df_segment_roi(img, 0.5, &mut roi) }, DF_OK);
    let expected_roi = segment_roi(&raw, &seg()).unwrap();
    assert_eq!(unsafe { df_image_dimensions(roi, &mut w, &mut h) }, DF_OK);
    assert_eq!((w, h), (expected_roi.width(), expected_roi.height()));

    let mut feats = [0.0; DF_FEATURE_COUNT];
    assert_eq!(
        unsafe { df_extract_features(roi, feats.as_mut_ptr(), feats.len()) },
        DF_OK
    );
    let expected = extract_hybrid(&expected_roi, &FeatureConfig::default()).unwrap();
    assert_eq!(&feats[..], expected.values());

    unsafe {
        df_image_free(roi);
        df_image_free(img);
    }
}

#[test]
fn model_predict_matches_the_library() {
    let json = model_json();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { df_model_load(json.as_ptr(), json.len(), &mut model) }, DF_OK);
    let mut k = 0;
    assert_eq!(unsafe { df_model_class_count(model, &mut k) }, DF_OK);
    assert_eq!(k, 4);
    let name = unsafe { CStr::from_ptr(df_model_class_name(model, 3)) };
    assert_eq!(name.to_str().unwrap(), "Parasite Infected");
    assert!(unsafe { df_model_class_name(model, 4) }.is_null());

    let reference = classifiers::load_model(&json).unwrap();
    let full = Arc::new(FeatureConfig::default().schema().unwrap());
    let target = Arc::new(reference.schema.clone());
    for (class, index) in [(0, 20), (1, 21), (2, 22), (3, 23)] {
        let roi = segment_roi(&synth_image(class, index), &seg()).unwrap();
        let values = extract_hybrid(&roi, &FeatureConfig::default()).unwrap().into_values();
        let mut got = usize::MAX;
        let mut probs = [0.0; 4];
        let status = unsafe {
            df_model_predict(
                model,
                values.as_ptr(),
                values.len(),
                &mut got,
                probs.as_mut_ptr(),
                probs.len(),
            )
        };
        assert_eq!(status, DF_OK);
        let v = FeatureVector::new(values, full.clone())
            .unwrap()
            .project(&target)
            .unwrap();
        let want = reference.predict(&v).unwrap();
        assert_eq!(got, want.class);
        assert_eq!(&probs[..], want.probabilities.as_slice());
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    unsafe { df_model_free(model) };
}

#[test]
fn errors_map_to_status_codes_and_messages() {
    let mut img = ptr::null_mut();
    let junk = b"GIF89a";
    assert_eq!(
        unsafe { df_image_decode(junk.as_ptr(), junk.len(), &mut img) },
        DF_ERR_PIPELINE
    );
    assert!(img.is_null());
    assert!(last_error().contains("unsupported image format"), "{}", last_error());

    assert_eq!(
        unsafe { df_image_decode(ptr::null(), 4, &mut img) },
        DF_ERR_INVALID_ARGUMENT
    );
    assert_eq!(
        unsafe { df_image_decode(junk.as_ptr(), junk.len(), ptr::null_mut()) },
        DF_ERR_INVALID_ARGUMENT
    );

    let blank = decode(&encode_ppm(&RasterRgb::filled(40, 30, [250, 250, 250]).unwrap()));
    let mut roi = ptr::null_mut();
    assert_eq!(unsafe { df_segment_roi(blank, 1.0, &mut roi) }, DF_ERR_PIPELINE);
    assert_eq!(last_error(), "no ROI found");
    assert_eq!(unsafe { df_segment_roi(blank, 0.0, &mut roi) }, DF_ERR_CONFIG);
    assert!(roi.is_null());
    let mut small = [0.0; 10];
    assert_eq!(
        unsafe { df_extract_features(blank, small.as_mut_ptr(), small.len()) },
        DF_ERR_INVALID_ARGUMENT
    );
    unsafe { df_image_free(blank) };

    let mut model = ptr::null_mut();
    let bad = br#"{"format_version": 7}"#;
    assert_eq!(
        unsafe { df_model_load(bad.as_ptr(), bad.len(), &mut model) },
        DF_ERR_CONFIG
    );
    assert!(model.is_null());

    let json = model_json();
    assert_eq!(unsafe { df_model_load(json.as_ptr(), json.len(), &mut model) }, DF_OK);
    let mut class = 0;
    let short = [0.5; 9];
    let status = unsafe { df_model_predict(model, short.as_ptr(), short.len(), &mut class, ptr::null_mut(), 0) };
    assert_eq!(status, DF_ERR_PIPELINE, "{}", last_error());
    let full = [0.5; DF_FEATURE_COUNT];
    let mut probs = [0.0; 2];
    let status = unsafe { df_model_predict(model, full.as_ptr(), full.len(), &mut class, probs.as_mut_ptr(), 2) };
    assert_eq!(status, DF_ERR_INVALID_ARGUMENT);
    unsafe {
        df_model_free(model);
        df_model_free(ptr::null_mut());
        df_image_free(ptr::null_mut());
    }
}

/// Directory holding `libdatefruit_ffi.{so,a}` for this test build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib_dir = artifact_dir();
    let staticlib = lib_dir.join("libdatefruit_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !cfg!(unix) || Command::new(&cc).arg("--version").output().is_err() || !staticlib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("fruit.ppm");
    std::fs::write(&image, encode_ppm(&synth_image(0, 0))).unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "datefruit.h"

int main(int argc, char **argv) {
    FILE *f = fopen(argv[1], "rb");
    static uint8_t buf[1 << 20];
    size_t n = fread(buf, 1, sizeof buf, f);
    fclose(f);
    DfImage *img = NULL, *roi = NULL;
    if (df_image_decode(buf, n, &img) != DF_OK) return 10;
    if (df_segment_roi(img, 0.5, &roi) != DF_OK) return 11;
    double feats[DF_FEATURE_COUNT];
    if (df_extract_features(roi, feats, DF_FEATURE_COUNT) != DF_OK) return 12;
    int status = df_model_load((const uint8_t *)"{}", 2, NULL);
    printf("%d %s\n", status, df_last_error_message());
    df_image_free(roi);
    df_image_free(img);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let build = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).arg(&image).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8(run.stdout).unwrap().trim(), "1 out is null");
}
