use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::boxes::{iou, BBox};
use super::GRID_STRIDE;

/// A prior box tied to grid cell `(row, col)` and anchor slot `slot`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub row: usize,
    pub col: usize,
    pub slot: usize,
    pub prior: BBox,
}

/// Anchors in ConvDet output order: row-major cells, then slots. Centres
/// sit in the middle of each stride-4 cell.
pub fn generate_anchors(grid_h: usize, grid_w: usize, shapes: &[(f32, f32)]) -> Vec<Anchor> {
    let mut out = Vec::with_capacity(grid_h * grid_w * shapes.len());
    let s = GRID_STRIDE as f64;
    for row in 0..grid_h {
        for col in 0..grid_w {
            for (slot, &(w, h)) in shapes.iter().enumerate() {
                out.push(Anchor {
                    row,
                    col,
                    slot,
                    prior: BBox::new((col as f64 + 0.5) * s, (row as f64 + 0.5) * s, w as f64, h as f64),
                });
            }
        }
    }
    out
}

/// k-means over box `(w, h)` with `1 - IoU` distance (boxes compared as if
/// centred together). Deterministic for a given seed; output sorted by
/// area.
pub fn fit_anchor_shapes(sizes: &[(f32, f32)], k: usize, seed: u64) -> Vec<(f32, f32)> {
    if sizes.is_empty() || k == 0 {
        return Vec::new();
    }
    let pts: Vec<BBox> = sizes
        .iter()
        .map(|&(w, h)| BBox::new(0.0, 0.0, w as f64, h as f64))
        .collect();
    let dist = |a: &BBox, b: &BBox| 1.0 - iou(a, b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // k-means++ seeding
    let mut centers: Vec<BBox> = alloc::vec![pts[rng.gen_range(0..pts.len())]];
    while centers.len() < k {
        let d: Vec<f64> = pts
            .iter()
            .map(|p| {
                let m = centers.iter().map(|c| dist(p, c)).fold(f64::INFINITY, f64::min);
                m * m
            })
            .collect();
        let total: f64 = d.iter().sum();
        if total <= 0.0 {
            centers.push(centers[centers.len() - 1]);
            continue;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = pts.len() - 1;
        for (i, &v) in d.iter().enumerate() {
            if target < v {
                pick = i;
                break;
            }
            target -= v;
        }
        centers.push(pts[pick]);
    }
    for _ in 0..100 {
        let mut sums = alloc::vec![(0.0f64, 0.0f64, 0usize); k];
        for p in &pts {
            let (best, _) = centers
                .iter()
                .enumerate()
                .map(|(i, c)| (i, dist(p, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            sums[best].0 += p.w;
            sums[best].1 += p.h;
            sums[best].2 += 1;
        }
        let mut moved = false;
        for (c, &(sw, sh, n)) in centers.iter_mut().zip(&sums) {
            if n == 0 {
                continue;
            }
            let next = BBox::new(0.0, 0.0, sw / n as f64, sh / n as f64);
            if (next.w - c.w).abs() > 1e-9 || (next.h - c.h).abs() > 1e-9 {
                moved = true;
            }
            *c = next;
        }
        if !moved {
            break;
        }
    }
    let mut out: Vec<(f32, f32)> = centers.iter().map(|c| (c.w as f32, c.h as f32)).collect();
    out.sort_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)).then(a.0.total_cmp(&b.0)));
    out
}
