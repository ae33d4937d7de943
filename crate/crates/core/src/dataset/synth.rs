//! Deterministic synthetic date images: one elliptical fruit on a white
//! background, with class-specific blemishes, pallor, wrinkles and speckles.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestRecord};
use crate::error::{Error, Result};
use crate::imaging::{encode_ppm, RasterRgb, LUMA_WEIGHTS};

/// File name of the manifest written next to the generated images.
pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    pub base_color: [u8; 3],
    /// Per-image uniform offset of each channel, in `±color_jitter`.
    #[serde(default)]
    pub color_jitter: f64,
    /// Inclusive range of dark disks painted on the fruit.
    #[serde(default)]
    pub blemish_count: [usize; 2],
    #[serde(default)]
    pub blemish_color: [u8; 3],
    /// Inclusive radius range in pixels.
    #[serde(default = "default_blemish_radius")]
    pub blemish_radius: [f64; 2],
    /// Range of the per-image blend toward gray, each in `[0, 1]`.
    #[serde(default)]
    pub desaturation: [f64; 2],
    /// Relative amplitude of sinusoidal brightness ridges, in `[0, 1]`.
    #[serde(default)]
    pub wrinkle_amplitude: f64,
    /// Probability that a fruit pixel is a speckle.
    #[serde(default)]
    pub speckle_density: f64,
    #[serde(default)]
    pub speckle_color: [u8; 3],
}

fn default_blemish_radius() -> [f64; 2] {
    [4.0, 10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub images_per_class: usize,
    /// Uniform per-pixel noise amplitude on the fruit.
    #[serde(default = "default_noise")]
    pub pixel_noise: f64,
    /// Range of the per-image brightness gain applied to the fruit.
    #[serde(default = "default_illumination")]
    pub illumination: [f64; 2],
    pub classes: Vec<ClassSpec>,
}

fn default_noise() -> f64 {
    6.0
}

fn default_illumination() -> [f64; 2] {
    [1.0, 1.0]
}

impl Default for SynthSpec {
    /// Four classes of 50 images, 256×192, ±10% illumination.
    fn default() -> Self {
        let healthy = ClassSpec {
            name: "Healthy".into(),
            base_color: [118, 66, 32],
            color_jitter: 14.0,
            blemish_count: [0, 0],
            blemish_color: [0, 0, 0],
            blemish_radius: default_blemish_radius(),
            desaturation: [0.0, 0.1],
            wrinkle_amplitude: 0.0,
            speckle_density: 0.0,
            speckle_color: [0, 0, 0],
        };
        Self {
            seed: 42,
            width: 256,
            height: 192,
            images_per_class: 50,
            pixel_noise: default_noise(),
            illumination: [0.9, 1.1],
            classes: vec![
                healthy.clone(),
                ClassSpec {
                    name: "Initial Stage of Disease".into(),
                    // grayish discoloration: close in brightness, far in chroma
                    blemish_count: [3, 6],
                    blemish_color: [70, 62, 58],
                    blemish_radius: [6.0, 12.0],
                    ..healthy.clone()
                },
                ClassSpec {
                    name: "Malnourished".into(),
                    base_color: [140, 100, 62],
                    desaturation: [0.25, 0.45],
                    wrinkle_amplitude: 0.18,
                    ..healthy.clone()
                },
                ClassSpec {
                    name: "Parasite Infected".into(),
                    base_color: [110, 64, 34],
                    speckle_density: 0.035,
                    speckle_color: [224, 212, 186],
                    ..healthy
                },
            ],
        }
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidConfig(msg)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(bad(format!("image size {}x{} below 16x16", self.width, self.height)));
        }
        if self.images_per_class == 0 {
            return Err(bad("images_per_class must be positive".into()));
        }
        if self.classes.is_empty() {
            return Err(bad("at least one class required".into()));
        }
        if !(self.pixel_noise >= 0.0 && self.pixel_noise.is_finite()) {
            return Err(bad("pixel_noise must be non-negative".into()));
        }
        if !(self.illumination[0] > 0.0 && self.illumination[0] <= self.illumination[1] && self.illumination[1] <= 2.0)
        {
            return Err(bad("illumination must be an ordered range within (0, 2]".into()));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for (i, c) in self.classes.iter().enumerate() {
            if c.name.trim().is_empty() {
                return Err(bad(format!("class {i} has an empty name")));
            }
            if self.classes[..i].iter().any(|o| o.name == c.name) {
                return Err(bad(format!("duplicate class {:?}", c.name)));
            }
            let ctx = &c.name;
            if !(c.color_jitter >= 0.0 && c.color_jitter <= 255.0) {
                return Err(bad(format!("{ctx}: color_jitter must be in [0, 255]")));
            }
            if c.blemish_count[0] > c.blemish_count[1] {
                return Err(bad(format!("{ctx}: blemish_count range is reversed")));
            }
            if !(c.blemish_radius[0] > 0.0 && c.blemish_radius[0] <= c.blemish_radius[1]) {
                return Err(bad(format!("{ctx}: blemish_radius must be a positive, ordered range")));
            }
            if !(unit(c.desaturation[0]) && unit(c.desaturation[1]) && c.desaturation[0] <= c.desaturation[1]) {
                return Err(bad(format!("{ctx}: desaturation must be an ordered range in [0, 1]")));
            }
            if !unit(c.wrinkle_amplitude) || !unit(c.speckle_density) {
                return Err(bad(format!(
                    "{ctx}: wrinkle_amplitude and speckle_density must be in [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn total_images(&self) -> usize {
        self.classes.len() * self.images_per_class
    }
}

/// Geometry of a rendered fruit, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub semi_x: f64,
    pub semi_y: f64,
}

impl Ellipse {
    /// Pixel centers `(x + 0.5, y + 0.5)` with normalized radius ≤ 1 belong
    /// to the fruit.
    pub fn radius2(&self, x: usize, y: usize) -> f64 {
        let u = (x as f64 + 0.5 - self.cx) / self.semi_x;
        let v = (y as f64 + 0.5 - self.cy) / self.semi_y;
        u * u + v * v
    }

    /// Half-open pixel box `(x0, y0, x1, y1)` of the covered pixel centers.
    pub fn pixel_bbox(&self) -> (usize, usize, usize, usize) {
        let lo = |c: f64, s: f64| (c - s - 0.5).ceil().max(0.0) as usize;
        let hi = |c: f64, s: f64| (c + s - 0.5).floor() as usize + 1;
        (
            lo(self.cx, self.semi_x),
            lo(self.cy, self.semi_y),
            hi(self.cx, self.semi_x),
            hi(self.cy, self.semi_y),
        )
    }
}

fn image_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..=range[1])
    }
}

struct Blemish {
    x: f64,
    y: f64,
    radius: f64,
    color: [f64; 3],
}

/// Renders image `index` (global, class-major) of class `class`.
pub fn render(spec: &SynthSpec, class: usize, index: usize) -> (RasterRgb, Ellipse) {
    let c = &spec.classes[class];
    let mut rng = image_rng(spec.seed, index);
    let (w, h) = (spec.width as f64, spec.height as f64);
    let ellipse = Ellipse {
        cx: w / 2.0 + rng.gen_range(-0.05..=0.05) * w,
        cy: h / 2.0 + rng.gen_range(-0.05..=0.05) * h,
        semi_x: w * rng.gen_range(0.26..=0.34),
        semi_y: h * rng.gen_range(0.28..=0.38),
    };
    let base: [f64; 3] = std::array::from_fn(|k| {
        let j = if c.color_jitter > 0.0 {
            rng.gen_range(-c.color_jitter..=c.color_jitter)
        } else {
            0.0
        };
        c.base_color[k] as f64 + j
    });
    let gain = uniform(&mut rng, spec.illumination);
    let desat = uniform(&mut rng, c.desaturation);
    let n_blemish = rng.gen_range(c.blemish_count[0]..=c.blemish_count[1]);
    let blemishes: Vec<Blemish> = (0..n_blemish)
        .map(|_| {
            let r = 0.7 * rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            Blemish {
                x: ellipse.cx + r * theta.cos() * ellipse.semi_x,
                y: ellipse.cy + r * theta.sin() * ellipse.semi_y,
                radius: uniform(&mut rng, c.blemish_radius),
                color: std::array::from_fn(|k| c.blemish_color[k] as f64 + rng.gen_range(-6.0..=6.0)),
            }
        })
        .collect();
    let wrinkle_period = rng.gen_range(5.0..=8.0);
    let wrinkle_phase = rng.gen_range(0.0..std::f64::consts::TAU);

    let mut px = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let r2 = ellipse.radius2(x, y);
            if r2 > 1.0 {
                let v = 255.0 - rng.gen_range(0.0..4.0);
                px.push([v as u8; 3]);
                continue;
            }
            // darker toward the rim
            let shade = 1.0 - 0.25 * r2;
            let mut col = base.map(|v| v * shade);
            if c.wrinkle_amplitude > 0.0 {
                let s = 1.0
                    + c.wrinkle_amplitude
                        * ((x as f64 + 0.5) * std::f64::consts::TAU / wrinkle_period + wrinkle_phase).sin();
                col = col.map(|v| v * s);
            }
            for b in &blemishes {
                let d = ((x as f64 + 0.5 - b.x).powi(2) + (y as f64 + 0.5 - b.y).powi(2)).sqrt();
                if d < b.radius {
                    let t = (1.5 * (1.0 - d / b.radius)).min(1.0);
                    col = std::array::from_fn(|k| col[k] + (b.color[k] - col[k]) * t);
                }
            }
            if desat > 0.0 {
                let gray: f64 = col.iter().zip(LUMA_WEIGHTS).map(|(v, w)| v * w).sum();
                col = col.map(|v| v + (gray - v) * desat);
            }
            if c.speckle_density > 0.0 && rng.gen::<f64>() < c.speckle_density {
                col = c.speckle_color.map(f64::from);
            }
            col = col.map(|v| v * gain);
            let noise = spec.pixel_noise;
            px.push(std::array::from_fn(|k| {
                let n = if noise > 0.0 {
                    rng.gen_range(-noise..=noise)
                } else {
                    0.0
                };
                (col[k] + n).round().clamp(0.0, 255.0) as u8
            }));
        }
    }
    let img = RasterRgb::new(spec.width, spec.height, px).expect("dimensions validated");
    (img, ellipse)
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// Relative path of image `i` of `class`.
pub fn image_path(spec: &SynthSpec, class: usize, i: usize) -> String {
    format!("images/{}_{i:03}.ppm", slug(&spec.classes[class].name))
}

/// Writes every image as binary PPM under `out_dir/images/` plus
/// `out_dir/manifest.csv`, and returns the manifest.
pub fn synth_generate(spec: &SynthSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let n = spec.images_per_class;
    let jobs: Vec<(usize, usize)> = (0..spec.classes.len())
        .flat_map(|c| (0..n).map(move |i| (c, i)))
        .collect();
    jobs.par_iter()
        .map(|&(c, i)| {
            let (img, _) = render(spec, c, c * n + i);
            let path = out_dir.join(image_path(spec, c, i));
            std::fs::write(&path, encode_ppm(&img)).map_err(|e| Error::io(&path, e))
        })
        .collect::<Result<Vec<()>>>()?;
    let records = jobs
        .iter()
        .map(|&(c, i)| ManifestRecord {
            path: image_path(spec, c, i),
            label: spec.classes[c].name.clone(),
        })
        .collect();
    let manifest = DatasetManifest::new(records, out_dir)?;
    manifest.write(&out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{segment_stages, SegmentationParams};

    fn tiny() -> SynthSpec {
        SynthSpec {
            width: 64,
            height: 48,
            images_per_class: 3,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn default_spec_is_valid() {
        let s = SynthSpec::default();
        s.validate().unwrap();
        assert_eq!(s.total_images(), 200);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SynthSpec>(&text).unwrap(), s);
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut s = tiny();
        s.images_per_class = 0;
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.classes[3].speckle_density = 1.5;
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.classes[0].desaturation = [0.5, 0.2];
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.classes[1].name = "Healthy".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = synth_generate(&tiny(), a.path()).unwrap();
        synth_generate(&tiny(), b.path()).unwrap();
        assert_eq!(ma.records.len(), 12);
        assert_eq!(ma.classes.len(), 4);
        for r in &ma.records {
            let fa = std::fs::read(a.path().join(&r.path)).unwrap();
            let fb = std::fs::read(b.path().join(&r.path)).unwrap();
            assert_eq!(fa, fb);
            assert!(fa.starts_with(b"P6\n"));
        }
        assert_eq!(
            std::fs::read(a.path().join(MANIFEST_NAME)).unwrap(),
            std::fs::read(b.path().join(MANIFEST_NAME)).unwrap()
        );
        let reloaded = DatasetManifest::load(&a.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(reloaded.records, ma.records);
    }

    #[test]
    fn healthy_fruit_is_found_by_segmentation() {
        let spec = SynthSpec::default();
        let params = SegmentationParams {
            resize_scale: 1.0,
            ..Default::default()
        };
        for i in 0..5 {
            let (img, ellipse) = render(&spec, 0, i);
            let bbox = segment_stages(&img, &params).unwrap().bbox.unwrap();
            let (x0, y0, x1, y1) = ellipse.pixel_bbox();
            let near = |a: usize, b: usize| a.abs_diff(b) <= 3;
            assert!(
                near(bbox.x0, x0) && near(bbox.y0, y0) && near(bbox.x1, x1) && near(bbox.y1, y1),
                "image {i}: {bbox:?} vs {:?}",
                (x0, y0, x1, y1)
            );
        }
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        std::fs::write(&file, b"x").unwrap();
        assert!(matches!(synth_generate(&tiny(), &file), Err(Error::Io { .. })));
    }
}
