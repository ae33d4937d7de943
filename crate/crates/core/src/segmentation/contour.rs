//! Outer-border tracing of 8-connected components and ROI box selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

/// Ordered boundary pixels of one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(usize, usize)>,
    pub closed: bool,
}

/// Half-open pixel box `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

impl Contour {
    /// Shoelace area of the boundary polygon through pixel centres.
    pub fn area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        let n = self.points.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (x0, y0) = self.points[i];
                let (x1, y1) = self.points[(i + 1) % n];
                x0 as f64 * y1 as f64 - x1 as f64 * y0 as f64
            })
            .sum();
        twice.abs() / 2.0
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut b = BoundingBox {
            x0: usize::MAX,
            y0: usize::MAX,
            x1: 0,
            y1: 0,
        };
        for &(x, y) in &self.points {
            b.x0 = b.x0.min(x);
            b.y0 = b.y0.min(y);
            b.x1 = b.x1.max(x + 1);
            b.y1 = b.y1.max(y + 1);
        }
        b
    }
}

/// Clockwise (in image coordinates, y down) starting east.
const DIRS: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn dir_index(dx: isize, dy: isize) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("backtrack pixel is always an 8-neighbour")
}

/// Moore-neighbour trace from `start`, which must be the raster-first pixel
/// of its component (so its west neighbour is background).
fn trace(mask: &BinaryMask, start: (usize, usize)) -> Vec<(usize, usize)> {
    let fg = |x: isize, y: isize| mask.get_or_zero(x, y) == 1;
    let sweep = |cur: (isize, isize), back: usize| -> Option<((isize, isize), usize)> {
        (1..=8).map(|k| (back + k) % 8).find_map(|d| {
            let q = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            fg(q.0, q.1).then_some((q, d))
        })
    };

    let p0 = (start.0 as isize, start.1 as isize);
    let mut points = vec![start];
    let Some((p1, mut d)) = sweep(p0, 4) else {
        return points;
    };
    let mut cur = p0;
    let mut next = p1;
    loop {
        // last background cell examined before `next`, seen from `next`
        let bd = DIRS[(d + 7) % 8];
        let back_pos = (cur.0 + bd.0, cur.1 + bd.1);
        cur = next;
        let back = dir_index(back_pos.0 - cur.0, back_pos.1 - cur.1);
        let (q, nd) = sweep(cur, back).expect("a traced pixel always has its predecessor as neighbour");
        if cur == p0 && q == p1 {
            break;
        }
        points.push((cur.0 as usize, cur.1 as usize));
        next = q;
        d = nd;
    }
    points
}

/// One outer contour per 8-connected foreground component, in raster order of
/// each component's first pixel. Holes are not traced.
pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (w, h) = (mask.width(), mask.height());
    let mut labelled = vec![false; w * h];
    let mut contours = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if mask.pixels()[start] == 0 || labelled[start] {
            continue;
        }
        labelled[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in DIRS {
                if mask.get_or_zero(x + dx, y + dy) == 1 {
                    let j = (y + dy) as usize * w + (x + dx) as usize;
                    if !labelled[j] {
                        labelled[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let points = trace(mask, (start % w, start / w));
        let closed = points.len() >= 3;
        contours.push(Contour { points, closed });
    }
    contours
}

/// Bounding box of the contour with the largest shoelace area; the first one
/// wins ties.
pub fn largest_contour_bbox(contours: &[Contour]) -> Result<BoundingBox> {
    let mut best: Option<(&Contour, f64)> = None;
    for c in contours {
        let a = c.area();
        if best.is_none_or(|(_, ba)| a > ba) {
            best = Some((c, a));
        }
    }
    best.map(|(c, _)| c.bounding_box()).ok_or(Error::NoContours)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_mask(w: usize, h: usize, blocks: &[(usize, usize, usize, usize)]) -> BinaryMask {
        let mut m = BinaryMask::zeros(w, h).unwrap();
        for &(x0, y0, x1, y1) in blocks {
            for y in y0..y1 {
                for x in x0..x1 {
                    m.set(x, y, 1);
                }
            }
        }
        m
    }

    fn square(x0: usize, y0: usize, x1: usize, y1: usize) -> Contour {
        let mut points = Vec::new();
        points.extend((x0..=x1).map(|x| (x, y0)));
        points.extend((y0 + 1..=y1).map(|y| (x1, y)));
        points.extend((x0..x1).rev().map(|x| (x, y1)));
        points.extend((y0 + 1..y1).rev().map(|y| (x0, y)));
        Contour { points, closed: true }
    }

    #[test]
    fn empty_mask_has_no_contours() {
        assert!(find_contours(&BinaryMask::zeros(6, 6).unwrap()).is_empty());
    }

    #[test]
    fn filled_block_border_is_traced_once() {
        let cs = find_contours(&block_mask(7, 7, &[(2, 2, 5, 5)]));
        assert_eq!(cs.len(), 1);
        assert_eq!(
            cs[0].points,
            vec![(2, 2), (3, 2), (4, 2), (4, 3), (4, 4), (3, 4), (2, 4), (2, 3)]
        );
        assert!(cs[0].closed);
        assert_eq!(cs[0].area(), 4.0);
    }

    #[test]
    fn disjoint_blocks_give_two_contours() {
        let cs = find_contours(&block_mask(12, 8, &[(1, 1, 4, 4), (6, 3, 10, 7)]));
        assert_eq!(cs.len(), 2);
        assert_eq!(
            cs[1].bounding_box(),
            BoundingBox {
                x0: 6,
                y0: 3,
                x1: 10,
                y1: 7
            }
        );
    }

    #[test]
    fn ring_holes_are_ignored() {
        let mut m = block_mask(9, 9, &[(1, 1, 8, 8)]);
        for y in 3..6 {
            for x in 3..6 {
                m.set(x, y, 0);
            }
        }
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(
            cs[0].bounding_box(),
            BoundingBox {
                x0: 1,
                y0: 1,
                x1: 8,
                y1: 8
            }
        );
        assert_eq!(cs[0].area(), 36.0);
    }

    #[test]
    fn traced_points_are_eight_connected() {
        // diagonal staircase plus a spur
        let m = block_mask(10, 10, &[(1, 1, 3, 3), (3, 3, 5, 5), (5, 5, 7, 7), (7, 1, 8, 6)]);
        for c in find_contours(&m) {
            for pair in c.points.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                assert!(a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn isolated_pixel_and_thin_line() {
        let cs = find_contours(&block_mask(5, 5, &[(2, 2, 3, 3)]));
        assert_eq!(cs[0].points, vec![(2, 2)]);
        assert!(!cs[0].closed);
        let cs = find_contours(&block_mask(6, 3, &[(1, 1, 5, 2)]));
        assert_eq!(cs[0].area(), 0.0);
        assert_eq!(
            cs[0].bounding_box(),
            BoundingBox {
                x0: 1,
                y0: 1,
                x1: 5,
                y1: 2
            }
        );
    }

    #[test]
    fn bbox_selection() {
        assert!(matches!(largest_contour_bbox(&[]), Err(Error::NoContours)));
        let s = square(2, 2, 5, 5);
        assert_eq!(
            largest_contour_bbox(std::slice::from_ref(&s)).unwrap(),
            BoundingBox {
                x0: 2,
                y0: 2,
                x1: 6,
                y1: 6
            }
        );
        let big = square(10, 10, 19, 19);
        let small = square(0, 0, 2, 2);
        assert_eq!(largest_contour_bbox(&[small.clone(), big]).unwrap().x0, 10);
        let twin = square(20, 20, 23, 23);
        assert_eq!(largest_contour_bbox(&[s, twin]).unwrap().x0, 2);
    }
}
