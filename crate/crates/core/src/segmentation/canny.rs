//! Canny edge detection on a pre-smoothed image.
//!
//! Gradient magnitudes are the raw L2 norm of the 3×3 Sobel responses, so a
//! 0→255 step produces a peak of 1020. Thresholds are on that scale.

use std::collections::VecDeque;

use crate::imaging::{BinaryMask, RasterGray};

/// Sobel gradients `(gx, gy)` with border replication.
pub fn sobel(img: &RasterGray) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let at =
        |x: isize, y: isize| img.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize) as f64;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

pub fn sobel_magnitude(img: &RasterGray) -> Vec<f64> {
    let (gx, gy) = sobel(img);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect()
}

/// Neighbour offset along the quantized gradient direction.
fn direction_step(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Thin edges: a pixel survives when it is strictly greater than its
/// neighbour behind it along the gradient and not smaller than the one ahead.
/// The asymmetry keeps exactly one pixel of a two-pixel plateau. Border
/// pixels are always suppressed.
fn non_maximum_suppression(mag: &[f64], gx: &[f64], gy: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    if w < 3 || h < 3 {
        return out;
    }
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (dx, dy) = direction_step(gx[i], gy[i]);
            let ahead = mag[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let behind = mag[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            if m > behind && m >= ahead {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thin: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<u8> {
    let mut out = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high {
            out[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0 && thin[j] >= low {
                    out[j] = 1;
                    queue.push_back(j);
                }
            }
        }
    }
    out
}

/// Sobel gradients, 4-direction non-maximum suppression and 8-connected
/// double-threshold hysteresis. No smoothing is applied here.
pub fn canny(img: &RasterGray, low: f64, high: f64) -> BinaryMask {
    assert!(low > 0.0 && low < high, "canny thresholds must satisfy 0 < low < high");
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel(img);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let thin = non_maximum_suppression(&mag, &gx, &gy, w, h);
    BinaryMask::new(w, h, hysteresis(&thin, w, h, low, high)).expect("same dimensions as input")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertical_step() -> RasterGray {
        let px: Vec<u8> = (0..16 * 16).map(|i| if i % 16 < 8 { 0 } else { 255 }).collect();
        RasterGray::new(16, 16, px).unwrap()
    }

    #[test]
    fn constant_has_no_edges() {
        let img = RasterGray::filled(12, 12, 77).unwrap();
        assert_eq!(canny(&img, 50.0, 150.0).count_ones(), 0);
    }

    #[test]
    fn vertical_step_gives_single_line() {
        // Stage-by-stage evaluation on this fixture: gx = 1020 at columns 7
        // and 8, zero elsewhere; NMS keeps column 7 (strictly above its left
        // neighbour, tied with its right); rows 0 and 15 are border.
        let edges = canny(&vertical_step(), 50.0, 150.0);
        for y in 0..16 {
            for x in 0..16 {
                let expected = (x == 7 && (1..15).contains(&y)) as u8;
                assert_eq!(edges.get(x, y), expected, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn weak_gradient_is_rejected() {
        let px: Vec<u8> = (0..16 * 16).map(|i| if i % 16 < 8 { 100 } else { 105 }).collect();
        let img = RasterGray::new(16, 16, px).unwrap();
        let max = sobel_magnitude(&img).into_iter().fold(0.0, f64::max);
        assert!(max < 50.0);
        assert_eq!(canny(&img, 50.0, 150.0).count_ones(), 0);
    }

    #[test]
    fn weak_pixels_connect_only_through_strong_ones() {
        // a ramp: one strong step followed by a weak step further right
        let px: Vec<u8> = (0..16 * 16)
            .map(|i| match i % 16 {
                0..=4 => 0,
                5..=10 => 60,
                _ => 80,
            })
            .collect();
        let img = RasterGray::new(16, 16, px).unwrap();
        let edges = canny(&img, 50.0, 150.0);
        assert!(edges.get(4, 8) == 1);
        // the 60→80 step has magnitude 80: weak and isolated from the strong line
        assert_eq!((8..16).map(|x| edges.get(x, 8)).sum::<u8>(), 0);
        let edges = canny(&img, 50.0, 60.0);
        assert_eq!(edges.get(10, 8), 1);
    }
}
