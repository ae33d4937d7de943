use crate::error::{Error, Result};
use crate::imaging::RasterGray;

/// Sampled Gaussian, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Vec<f64>> {
    if ksize < 3 || ksize.is_multiple_of(2) {
        return Err(Error::BadKernel(format!(
            "kernel size must be odd and >= 3, got {ksize}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::BadKernel(format!("sigma must be positive, got {sigma}")));
    }
    let r = (ksize / 2) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Separable Gaussian blur with border replication. Intermediate values stay
/// in floating point; the result is rounded once.
pub fn gaussian_blur(img: &RasterGray, sigma: f64, ksize: usize) -> Result<RasterGray> {
    let kernel = gaussian_kernel(sigma, ksize)?;
    let (w, h) = (img.width(), img.height());
    let r = (ksize / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            horiz[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * img.get(clamp(x as isize + i as isize - r, w), y) as f64)
                .sum();
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v: f64 = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * horiz[clamp(y as isize + i as isize - r, h) * w + x])
                .sum();
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    RasterGray::new(w, h, out)
}
