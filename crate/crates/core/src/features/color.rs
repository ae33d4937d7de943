//! RGB → XYZ → L*a*b* conversion and per-image colour statistics.
//!
//! The XYZ matrix and the Lab formulas are used verbatim. In particular the
//! cube-root law is applied at every ratio, with no linear segment near
//! black, so pure black maps to L* = -16.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::RasterRgb;

use super::moments;

/// Rows give X, Y, Z as weighted sums of normalized R, G, B.
pub const RGB_TO_XYZ: [[f64; 3]; 3] = [[0.607, 0.174, 0.200], [0.299, 0.587, 0.114], [0.000, 0.066, 1.116]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyzColor {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// Tristimulus values of the reference white; each must exceed 0.01.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct WhiteReference {
    x0: f64,
    y0: f64,
    z0: f64,
}

impl WhiteReference {
    pub fn new(x0: f64, y0: f64, z0: f64) -> Result<Self> {
        if [x0, y0, z0].iter().all(|v| v.is_finite() && *v > 0.01) {
            Ok(Self { x0, y0, z0 })
        } else {
            Err(Error::InvalidConfig(format!(
                "white reference ({x0}, {y0}, {z0}) must have every component > 0.01"
            )))
        }
    }

    pub fn xyz(&self) -> XyzColor {
        XyzColor {
            x: self.x0,
            y: self.y0,
            z: self.z0,
        }
    }
}

/// The XYZ image of pure white under [`RGB_TO_XYZ`], about (0.981, 1.000, 1.182).
impl Default for WhiteReference {
    fn default() -> Self {
        let w = rgb_to_xyz(1.0, 1.0, 1.0).expect("unit channels are in gamut");
        Self {
            x0: w.x,
            y0: w.y,
            z0: w.z,
        }
    }
}

impl TryFrom<[f64; 3]> for WhiteReference {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<WhiteReference> for [f64; 3] {
    fn from(w: WhiteReference) -> Self {
        [w.x0, w.y0, w.z0]
    }
}

pub fn rgb_to_xyz(r: f64, g: f64, b: f64) -> Result<XyzColor> {
    for c in [r, g, b] {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::OutOfGamut(c));
        }
    }
    let row = |m: [f64; 3]| m[0] * r + m[1] * g + m[2] * b;
    Ok(XyzColor {
        x: row(RGB_TO_XYZ[0]),
        y: row(RGB_TO_XYZ[1]),
        z: row(RGB_TO_XYZ[2]),
    })
}

pub fn xyz_to_lab(c: XyzColor, white: &WhiteReference) -> LabColor {
    let fx = (c.x / white.x0).cbrt();
    let fy = (c.y / white.y0).cbrt();
    let fz = (c.z / white.z0).cbrt();
    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Euclidean distance in Lab space.
pub fn delta_e(p: LabColor, q: LabColor) -> f64 {
    let (dl, da, db) = (p.l - q.l, p.a - q.a, p.b - q.b);
    (dl * dl + da * da + db * db).sqrt()
}

pub fn pixel_to_lab(p: [u8; 3], white: &WhiteReference) -> LabColor {
    let xyz = rgb_to_xyz(p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0)
        .expect("8-bit channels normalize into [0, 1]");
    xyz_to_lab(xyz, white)
}

pub const LAB_FEATURE_NAMES: [&str; 9] = [
    "lab.mean.L",
    "lab.mean.a",
    "lab.mean.b",
    "lab.std.L",
    "lab.std.a",
    "lab.std.b",
    "lab.skew.L",
    "lab.skew.a",
    "lab.skew.b",
];

/// Means, then population standard deviations, then skewness of the L*, a*
/// and b* channels over every pixel.
pub fn lab_feature_values(img: &RasterRgb, white: &WhiteReference) -> [f64; 9] {
    let mut channels = [
        Vec::with_capacity(img.pixels().len()),
        Vec::with_capacity(img.pixels().len()),
        Vec::with_capacity(img.pixels().len()),
    ];
    // pixels repeat heavily; memoize the conversion per distinct colour
    let mut cache: std::collections::HashMap<[u8; 3], LabColor> = Default::default();
    for &p in img.pixels() {
        let lab = *cache.entry(p).or_insert_with(|| pixel_to_lab(p, white));
        channels[0].push(lab.l);
        channels[1].push(lab.a);
        channels[2].push(lab.b);
    }
    let mut out = [0.0; 9];
    for (c, values) in channels.iter().enumerate() {
        let m = moments(values);
        out[c] = m.mean;
        out[3 + c] = m.variance.sqrt();
        out[6 + c] = m.skewness();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rows_and_columns() {
        let w = rgb_to_xyz(1.0, 1.0, 1.0).unwrap();
        assert!((w.x - 0.981).abs() < 1e-12 && (w.y - 1.0).abs() < 1e-12 && (w.z - 1.182).abs() < 1e-12);
        assert_eq!(rgb_to_xyz(0.0, 0.0, 0.0).unwrap(), XyzColor { x: 0.0, y: 0.0, z: 0.0 });
        assert_eq!(
            rgb_to_xyz(1.0, 0.0, 0.0).unwrap(),
            XyzColor {
                x: 0.607,
                y: 0.299,
                z: 0.0
            }
        );
        assert!(matches!(rgb_to_xyz(1.2, 0.0, 0.0), Err(Error::OutOfGamut(_))));
        assert!(matches!(rgb_to_xyz(0.0, -0.1, 0.0), Err(Error::OutOfGamut(_))));
    }

    #[test]
    fn lab_anchor_points() {
        let white = WhiteReference::default();
        assert_eq!(
            xyz_to_lab(white.xyz(), &white),
            LabColor {
                l: 100.0,
                a: 0.0,
                b: 0.0
            }
        );
        let black = xyz_to_lab(XyzColor { x: 0.0, y: 0.0, z: 0.0 }, &white);
        assert_eq!(
            black,
            LabColor {
                l: -16.0,
                a: 0.0,
                b: 0.0
            }
        );
        let w = WhiteReference::new(0.8, 1.6, 2.4).unwrap();
        let eighth = xyz_to_lab(XyzColor { x: 0.1, y: 0.2, z: 0.3 }, &w);
        assert!((eighth.l - 42.0).abs() < 1e-12 && eighth.a.abs() < 1e-12 && eighth.b.abs() < 1e-12);
    }

    #[test]
    fn white_reference_bounds() {
        assert!(WhiteReference::new(0.01, 1.0, 1.0).is_err());
        assert!(WhiteReference::new(0.02, 1.0, f64::NAN).is_err());
        assert!(WhiteReference::new(0.02, 0.02, 0.02).is_ok());
    }

    #[test]
    fn delta_e_examples() {
        let p = LabColor { l: 0.0, a: 3.0, b: 4.0 };
        let o = LabColor { l: 0.0, a: 0.0, b: 0.0 };
        assert_eq!(delta_e(p, p), 0.0);
        assert_eq!(delta_e(p, o), 5.0);
        let q = LabColor {
            l: 50.0,
            a: 10.0,
            b: -10.0,
        };
        let r = LabColor {
            l: 40.0,
            a: 10.0,
            b: -10.0,
        };
        assert_eq!(delta_e(q, r), 10.0);
    }

    #[test]
    fn lab_statistics_of_simple_images() {
        let white = WhiteReference::default();
        let img = RasterRgb::filled(4, 3, [255, 255, 255]).unwrap();
        assert_eq!(
            lab_feature_values(&img, &white),
            [100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        let img = RasterRgb::filled(4, 3, [0, 0, 0]).unwrap();
        assert_eq!(
            lab_feature_values(&img, &white),
            [-16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );

        // two-point distribution {100, -16}: mean 42, population std 58
        let px: Vec<[u8; 3]> = (0..8).map(|i| if i < 4 { [255; 3] } else { [0; 3] }).collect();
        let v = lab_feature_values(&RasterRgb::new(4, 2, px).unwrap(), &white);
        assert!((v[0] - 42.0).abs() < 1e-12);
        assert!((v[3] - 58.0).abs() < 1e-12);
        assert!(v[6].abs() < 1e-12);
        for i in [1, 2, 4, 5, 7, 8] {
            assert!(v[i].abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn lightness_increases_with_luminance(y1 in 0.0f64..2.0, dy in 1e-6f64..1.0) {
            let w = WhiteReference::default();
            let a = xyz_to_lab(XyzColor { x: 0.5, y: y1, z: 0.5 }, &w);
            let b = xyz_to_lab(XyzColor { x: 0.5, y: y1 + dy, z: 0.5 }, &w);
            proptest::prop_assert!(b.l > a.l);
        }
    }
}
