//! Binary erosion and dilation.
//!
//! Pixels outside the mask read as background for both operations, so
//! objects touching the border shrink under erosion.

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    mask: Vec<u8>,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, mask: Vec<u8>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::BadKernel(format!(
                "structuring element must have odd dimensions, got {width}x{height}"
            )));
        }
        if mask.len() != width * height || mask.iter().any(|&v| v > 1) {
            return Err(Error::BadKernel("structuring element mask must be a {0,1} grid".into()));
        }
        if !mask.contains(&1) {
            return Err(Error::BadKernel("structuring element has no active cell".into()));
        }
        Ok(Self { width, height, mask })
    }

    pub fn rect(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![1; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn anchor(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    /// Point reflection through the anchor.
    pub fn reflect(&self) -> Self {
        let mut mask = self.mask.clone();
        mask.reverse();
        Self {
            width: self.width,
            height: self.height,
            mask,
        }
    }

    /// Offsets of active cells relative to the anchor.
    fn offsets(&self) -> Vec<(isize, isize)> {
        let (ax, ay) = self.anchor();
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.mask[y * self.width + x] == 1)
            .map(|(x, y)| (x as isize - ax as isize, y as isize - ay as isize))
            .collect()
    }
}

fn apply(img: &BinaryMask, offsets: &[(isize, isize)], hit: impl Fn(bool, bool) -> bool, init: bool) -> BinaryMask {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryMask::zeros(w, h).expect("dimensions come from a valid mask");
    for y in 0..h {
        for x in 0..w {
            let mut acc = init;
            for &(dx, dy) in offsets {
                let v = img.get_or_zero(x as isize + dx, y as isize + dy) == 1;
                acc = hit(acc, v);
                if acc != init {
                    break;
                }
            }
            out.set(x, y, acc as u8);
        }
    }
    out
}

/// `out(p) = 1` iff every active cell of `se` placed at `p` covers a 1.
pub fn erode(img: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(img, &se.offsets(), |acc, v| acc && v, true)
}

/// `out(p) = 1` iff some active cell of the reflected `se` placed at `p` covers a 1.
pub fn dilate(img: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let reflected: Vec<_> = se.offsets().into_iter().map(|(dx, dy)| (-dx, -dy)).collect();
    apply(img, &reflected, |acc, v| acc || v, false)
}
