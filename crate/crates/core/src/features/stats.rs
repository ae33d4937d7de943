//! First-order histogram statistics and GLCM-based second-order statistics.

use crate::error::{Error, Result};
use crate::imaging::RasterGray;

const GUARD: f64 = 1e-12;

/// Normalized symmetric gray-level co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    pub levels: usize,
    pub offset: (i32, i32),
    /// Row-major `levels × levels` probabilities.
    pub matrix: Vec<f64>,
}

impl GlcmMatrix {
    /// Builds from raw probabilities; used for testing and externally
    /// computed matrices. Entries must be non-negative and sum to one.
    pub fn from_probabilities(levels: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != levels * levels || matrix.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidConfig("GLCM must be a non-negative square matrix".into()));
        }
        let sum: f64 = matrix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("GLCM sums to {sum}, expected 1")));
        }
        Ok(Self {
            levels,
            offset: (0, 0),
            matrix,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.levels;
        self.matrix.iter().enumerate().map(move |(k, &p)| (k / n, k % n, p))
    }
}

/// Equal-width quantization of `[0, 255]` into `levels` bins, then symmetric
/// co-occurrence counts at `offset`, normalized to unit sum.
pub fn glcm(img: &RasterGray, levels: usize, offset: (i32, i32)) -> Result<GlcmMatrix> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidConfig(format!("GLCM levels {levels} not in [2, 256]")));
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (dx, dy) = (offset.0 as i64, offset.1 as i64);
    let bin = |v: u8| v as usize * levels / 256;
    let mut counts = vec![0u64; levels * levels];
    let mut pairs = 0u64;
    for y in 0..h {
        let ny = y + dy;
        if ny < 0 || ny >= h {
            continue;
        }
        for x in 0..w {
            let nx = x + dx;
            if nx < 0 || nx >= w {
                continue;
            }
            let i = bin(img.get(x as usize, y as usize));
            let j = bin(img.get(nx as usize, ny as usize));
            counts[i * levels + j] += 1;
            counts[j * levels + i] += 1;
            pairs += 2;
        }
    }
    if pairs == 0 {
        return Err(Error::NoPairs {
            dx: offset.0,
            dy: offset.1,
        });
    }
    let total = pairs as f64;
    Ok(GlcmMatrix {
        levels,
        offset,
        matrix: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

pub const FIRST_ORDER_NAMES: [&str; 6] = [
    "stat.mean",
    "stat.variance",
    "stat.skewness",
    "stat.kurtosis",
    "stat.energy",
    "stat.entropy",
];

pub const SECOND_ORDER_NAMES: [&str; 6] = [
    "stat.glcm_asm",
    "stat.glcm_correlation",
    "stat.glcm_inertia",
    "stat.glcm_inverse_difference",
    "stat.glcm_entropy",
    "stat.glcm_max_probability",
];

pub const ABSOLUTE_VALUE_NAME: &str = "stat.glcm_absolute_value";

fn entropy_bits<'a>(ps: impl Iterator<Item = &'a f64>) -> f64 {
    -ps.filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Mean, variance, skewness, excess kurtosis, energy and entropy (bits) of
/// the 256-bin normalized intensity histogram.
pub fn first_order_stats(img: &RasterGray) -> Result<[f64; 6]> {
    if img.pixels().is_empty() {
        return Err(Error::EmptyImage);
    }
    let mut hist = [0u64; 256];
    for &v in img.pixels() {
        hist[v as usize] += 1;
    }
    let n = img.pixels().len() as f64;
    let p: Vec<f64> = hist.iter().map(|&c| c as f64 / n).collect();
    let mean: f64 = p.iter().enumerate().map(|(i, &pi)| i as f64 * pi).sum();
    let central = |k: i32| -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &pi)| (i as f64 - mean).powi(k) * pi)
            .sum()
    };
    let variance = central(2);
    let (skewness, kurtosis) = if variance < GUARD {
        (0.0, 0.0)
    } else {
        (
            central(3) / variance.powf(1.5),
            central(4) / (variance * variance) - 3.0,
        )
    };
    let energy = p.iter().map(|pi| pi * pi).sum();
    Ok([mean, variance, skewness, kurtosis, energy, entropy_bits(p.iter())])
}

/// Angular second moment, correlation, inertia, inverse difference, entropy
/// (bits) and maximum probability.
pub fn second_order_stats(m: &GlcmMatrix) -> [f64; 6] {
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for (i, j, p) in m.cells() {
        mu_i += i as f64 * p;
        mu_j += j as f64 * p;
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    let (mut asm, mut inertia, mut inv_diff, mut max_p) = (0.0, 0.0, 0.0, 0.0f64);
    for (i, j, p) in m.cells() {
        let (di, dj) = (i as f64 - mu_i, j as f64 - mu_j);
        var_i += di * di * p;
        var_j += dj * dj * p;
        cov += di * dj * p;
        asm += p * p;
        let d = i.abs_diff(j) as f64;
        inertia += d * d * p;
        inv_diff += p / (1.0 + d);
        max_p = max_p.max(p);
    }
    let (sd_i, sd_j) = (var_i.sqrt(), var_j.sqrt());
    let correlation = if sd_i < GUARD || sd_j < GUARD {
        0.0
    } else {
        cov / (sd_i * sd_j)
    };
    [
        asm,
        correlation,
        inertia,
        inv_diff,
        entropy_bits(m.matrix.iter()),
        max_p,
    ]
}

/// `Σ |i − j| p(i, j)`; the optional thirteenth statistical feature.
pub fn glcm_absolute_value(m: &GlcmMatrix) -> f64 {
    m.cells().map(|(i, j, p)| i.abs_diff(j) as f64 * p).sum()
}
