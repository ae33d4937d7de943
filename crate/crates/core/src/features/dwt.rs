//! Orthonormal 2-D Haar wavelet analysis.
//!
//! Each level splits the grid into non-overlapping 2×2 blocks
//! `[[a, b], [c, d]]`:
//!
//! ```text
//! LL = (a + b + c + d) / 2      LH = (a + b - c - d) / 2
//! HL = (a - b + c - d) / 2      HH = (a - b - c + d) / 2
//! ```
//!
//! An odd trailing row or column is dropped before each level.

use crate::error::{Error, Result};
use crate::imaging::RasterGray;

use super::moments;

/// Row-major grid of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "{} values do not fill {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_gray(img: &RasterGray) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.pixels().iter().map(|&v| v as f64).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// One analysis level.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    pub ll: Grid,
    pub lh: Grid,
    pub hl: Grid,
    pub hh: Grid,
}

impl Subbands {
    pub fn energy(&self) -> f64 {
        self.ll.energy() + self.lh.energy() + self.hl.energy() + self.hh.energy()
    }
}

/// Detail bands of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    pub lh: Grid,
    pub hl: Grid,
    pub hh: Grid,
}

/// Multi-level decomposition: details of every level (finest first) plus the
/// final approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub details: Vec<DetailBands>,
    pub ll: Grid,
}

impl SubbandSet {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn energy(&self) -> f64 {
        self.ll.energy()
            + self
                .details
                .iter()
                .map(|d| d.lh.energy() + d.hl.energy() + d.hh.energy())
                .sum::<f64>()
    }
}

pub fn dwt2_haar(img: &Grid) -> Result<Subbands> {
    if img.width < 2 || img.height < 2 {
        return Err(Error::TooSmall(format!(
            "Haar level needs at least 2x2, got {}x{}",
            img.width, img.height
        )));
    }
    let (w, h) = (img.width / 2, img.height / 2);
    let mut bands = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for y in 0..h {
        for x in 0..w {
            let a = img.get(2 * x, 2 * y);
            let b = img.get(2 * x + 1, 2 * y);
            let c = img.get(2 * x, 2 * y + 1);
            let d = img.get(2 * x + 1, 2 * y + 1);
            bands[0].push((a + b + c + d) / 2.0);
            bands[1].push((a + b - c - d) / 2.0);
            bands[2].push((a - b + c - d) / 2.0);
            bands[3].push((a - b - c + d) / 2.0);
        }
    }
    let [ll, lh, hl, hh] = bands.map(|data| Grid {
        width: w,
        height: h,
        data,
    });
    Ok(Subbands { ll, lh, hl, hh })
}

/// Inverse of [`dwt2_haar`] for even-sized inputs.
pub fn idwt2_haar(s: &Subbands) -> Grid {
    let (w, h) = (s.ll.width, s.ll.height);
    let mut data = vec![0.0; 4 * w * h];
    let ow = 2 * w;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (ll, lh, hl, hh) = (s.ll.data[i], s.lh.data[i], s.hl.data[i], s.hh.data[i]);
            data[2 * y * ow + 2 * x] = (ll + lh + hl + hh) / 2.0;
            data[2 * y * ow + 2 * x + 1] = (ll + lh - hl - hh) / 2.0;
            data[(2 * y + 1) * ow + 2 * x] = (ll - lh + hl - hh) / 2.0;
            data[(2 * y + 1) * ow + 2 * x + 1] = (ll - lh - hl + hh) / 2.0;
        }
    }
    Grid {
        width: ow,
        height: 2 * h,
        data,
    }
}

pub fn dwt_multilevel(img: &Grid, levels: usize) -> Result<SubbandSet> {
    if levels == 0 {
        return Err(Error::InvalidConfig("DWT depth must be at least 1".into()));
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = img.clone();
    for level in 0..levels {
        let s = dwt2_haar(&current).map_err(|_| {
            Error::TooSmall(format!(
                "{}x{} grid cannot be decomposed to {levels} levels (stopped at level {})",
                img.width,
                img.height,
                level + 1
            ))
        })?;
        details.push(DetailBands {
            lh: s.lh,
            hl: s.hl,
            hh: s.hh,
        });
        current = s.ll;
    }
    Ok(SubbandSet { details, ll: current })
}

pub fn dwt_feature_names(levels: usize) -> Vec<String> {
    let mut names = Vec::with_capacity((3 * levels + 1) * 3);
    let mut push = |band: String| {
        for stat in ["mean_abs", "std", "energy"] {
            names.push(format!("dwt.{band}.{stat}"));
        }
    };
    for level in 1..=levels {
        for band in ["LH", "HL", "HH"] {
            push(format!("l{level}.{band}"));
        }
    }
    push(format!("l{levels}.LL"));
    names
}

fn band_stats(g: &Grid) -> [f64; 3] {
    let n = g.data.len() as f64;
    let mean_abs = g.data.iter().map(|v| v.abs()).sum::<f64>() / n;
    let m = moments(&g.data);
    let energy = g.data.iter().map(|v| v * v).sum::<f64>() / n;
    [mean_abs, m.variance.sqrt(), energy]
}

/// Mean absolute coefficient, standard deviation and mean energy of every
/// detail band (level 1 LH, HL, HH, then level 2, ...) followed by the final LL.
pub fn dwt_feature_values(img: &RasterGray, levels: usize) -> Result<Vec<f64>> {
    let set = dwt_multilevel(&Grid::from_gray(img), levels)?;
    let mut out = Vec::with_capacity((3 * levels + 1) * 3);
    for d in &set.details {
        for band in [&d.lh, &d.hl, &d.hh] {
            out.extend(band_stats(band));
        }
    }
    out.extend(band_stats(&set.ll));
    Ok(out)
}
