//! ROI extraction: resize, grayscale, Otsu threshold, erosion, dilation,
//! Gaussian blur, Canny, contour tracing, largest-area bounding box, crop.

pub mod blur;
pub mod canny;
pub mod contour;
pub mod morphology;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{self, BinaryMask, RasterGray, RasterRgb};

pub use blur::gaussian_blur;
pub use canny::canny;
pub use contour::{find_contours, largest_contour_bbox, BoundingBox, Contour};
pub use morphology::{dilate, erode, StructuringElement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationParams {
    pub resize_scale: f64,
    /// Side of the square all-ones structuring element.
    pub morph_kernel: usize,
    pub erode_iterations: usize,
    pub dilate_iterations: usize,
    pub blur_sigma: f64,
    pub blur_ksize: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    /// When false, features are taken from the whole resized frame.
    pub crop_to_roi: bool,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            resize_scale: 0.1,
            morph_kernel: 3,
            erode_iterations: 1,
            dilate_iterations: 1,
            blur_sigma: 1.4,
            blur_ksize: 5,
            canny_low: 50.0,
            canny_high: 150.0,
            crop_to_roi: true,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.resize_scale > 0.0 && self.resize_scale <= 1.0) {
            return bad(format!("resize_scale {} not in (0, 1]", self.resize_scale));
        }
        if self.morph_kernel == 0 || self.morph_kernel.is_multiple_of(2) {
            return bad(format!("morph_kernel {} must be odd", self.morph_kernel));
        }
        if self.blur_ksize < 3 || self.blur_ksize.is_multiple_of(2) {
            return bad(format!("blur_ksize {} must be odd and >= 3", self.blur_ksize));
        }
        if !(self.blur_sigma > 0.0) {
            return bad(format!("blur_sigma {} must be positive", self.blur_sigma));
        }
        if !(self.canny_low > 0.0 && self.canny_low < self.canny_high) {
            return bad(format!(
                "canny thresholds must satisfy 0 < low < high, got {} / {}",
                self.canny_low, self.canny_high
            ));
        }
        Ok(())
    }
}

/// Otsu's threshold: the level `t` maximizing between-class variance of
/// `[0, t]` versus `(t, 255]`. `None` when the histogram has a single level.
pub fn otsu_threshold(img: &RasterGray) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in img.pixels() {
        hist[v as usize] += 1;
    }
    let total = img.pixels().len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best: Option<(u8, f64)> = None;
    for (t, &count) in hist.iter().enumerate().take(255) {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((t as u8, between));
        }
    }
    best.map(|(t, _)| t)
}

/// Foreground (1) is everything at or below the Otsu level: a dark fruit on
/// light background.
pub fn threshold_dark(img: &RasterGray) -> BinaryMask {
    let px = match otsu_threshold(img) {
        Some(t) => img.pixels().iter().map(|&v| (v <= t) as u8).collect(),
        None => vec![0; img.pixels().len()],
    };
    BinaryMask::new(img.width(), img.height(), px).expect("same dimensions as input")
}

/// Every intermediate product of [`segment_roi`], for debugging dumps.
#[derive(Debug, Clone)]
pub struct SegmentationStages {
    pub resized: RasterRgb,
    pub gray: RasterGray,
    pub smoothed: RasterGray,
    pub threshold: BinaryMask,
    pub eroded: BinaryMask,
    pub dilated: BinaryMask,
    pub blurred: RasterGray,
    pub edges: BinaryMask,
    pub contours: Vec<Contour>,
    pub bbox: Option<BoundingBox>,
}

impl SegmentationStages {
    /// Named grayscale renderings in pipeline order.
    pub fn gray_stages(&self) -> Vec<(&'static str, RasterGray)> {
        vec![
            ("gray", self.gray.clone()),
            ("smoothed", self.smoothed.clone()),
            ("threshold", self.threshold.to_gray()),
            ("eroded", self.eroded.to_gray()),
            ("dilated", self.dilated.to_gray()),
            ("blurred", self.blurred.clone()),
            ("edges", self.edges.to_gray()),
        ]
    }

    pub fn crop(&self) -> Result<RasterRgb> {
        let b = self.bbox.ok_or(Error::NoRoiFound)?;
        self.resized.crop(b.x0, b.y0, b.x1, b.y1)
    }
}

/// Runs the full chain and keeps every stage. A missing ROI is reported as
/// `bbox: None` rather than an error so the stages can still be inspected.
pub fn segment_stages(img: &RasterRgb, params: &SegmentationParams) -> Result<SegmentationStages> {
    params.validate()?;
    let resized = imaging::resize_scale(img, params.resize_scale)?;
    let gray = imaging::to_grayscale(&resized);
    let smoothed = gaussian_blur(&gray, params.blur_sigma, params.blur_ksize)?;
    let threshold = threshold_dark(&smoothed);

    let se = StructuringElement::rect(params.morph_kernel, params.morph_kernel)?;
    let mut eroded = threshold.clone();
    for _ in 0..params.erode_iterations {
        eroded = erode(&eroded, &se);
    }
    let mut dilated = eroded.clone();
    for _ in 0..params.dilate_iterations {
        dilated = dilate(&dilated, &se);
    }
    let blurred = gaussian_blur(&dilated.to_gray(), params.blur_sigma, params.blur_ksize)?;
    let edges = canny(&blurred, params.canny_low, params.canny_high);
    let contours = find_contours(&edges);
    let bbox = largest_contour_bbox(&contours).ok();
    Ok(SegmentationStages {
        resized,
        gray,
        smoothed,
        threshold,
        eroded,
        dilated,
        blurred,
        edges,
        contours,
        bbox,
    })
}

/// Crops the resized colour image to the largest detected contour.
pub fn segment_roi(img: &RasterRgb, params: &SegmentationParams) -> Result<RasterRgb> {
    segment_stages(img, params)?.crop()
}

/// The image features are computed on: the ROI crop, or the whole resized
/// frame when `crop_to_roi` is off.
pub fn prepare_image(img: &RasterRgb, params: &SegmentationParams) -> Result<RasterRgb> {
    if params.crop_to_roi {
        segment_roi(img, params)
    } else {
        params.validate()?;
        imaging::resize_scale(img, params.resize_scale)
    }
}
