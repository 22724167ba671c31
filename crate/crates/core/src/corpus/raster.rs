use alloc::vec;
use alloc::vec::Vec;

/// 8-bit RGB image, row-major, 3 bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

pub type Rgb = [u8; 3];

impl Raster {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        let mut data = vec![0u8; width * height * 3];
        for px in data.chunks_exact_mut(3) {
            px.copy_from_slice(&color);
        }
        Raster {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == width * height * 3).then_some(Raster {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Integer luma (ITU-R BT.601 weights), 0..=255.
    pub fn luma(&self, x: usize, y: usize) -> u8 {
        let [r, g, b] = self.get(x, y);
        ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
    }

    /// Sub-image `[x, x+w) × [y, y+h)`; the rectangle must lie inside.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Raster {
        assert!(x + w <= self.width && y + h <= self.height, "crop outside raster");
        let mut data = Vec::with_capacity(w * h * 3);
        for row in y..y + h {
            let start = (row * self.width + x) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        Raster {
            width: w,
            height: h,
            data,
        }
    }

    /// Nearest-neighbour resize: destination pixel `(x, y)` samples source
    /// `(floor(x·w/W), floor(y·h/H))`.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Raster {
        let mut out = Raster::filled(width, height, [0, 0, 0]);
        if self.width == 0 || self.height == 0 {
            return out;
        }
        for y in 0..height {
            let sy = y * self.height / height;
            for x in 0..width {
                let sx = x * self.width / width;
                out.put(x, y, self.get(sx, sy));
            }
        }
        out
    }

    /// Right-pads to `width` columns with `color`.
    pub fn pad_right(&self, width: usize, color: Rgb) -> Raster {
        if width <= self.width {
            return self.clone();
        }
        let mut out = Raster::filled(width, self.height, color);
        for y in 0..self.height {
            let src = y * self.width * 3;
            let dst = y * width * 3;
            out.data[dst..dst + self.width * 3]
                .copy_from_slice(&self.data[src..src + self.width * 3]);
        }
        out
    }

    /// Most frequent colour; ties go to the colour that appears first.
    pub fn dominant_color(&self) -> Rgb {
        let mut counts: alloc::collections::BTreeMap<Rgb, (usize, usize)> = Default::default();
        for (i, px) in self.data.chunks_exact(3).enumerate() {
            let e = counts.entry([px[0], px[1], px[2]]).or_insert((0, i));
            e.0 += 1;
        }
        counts
            .into_iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .map(|(c, _)| c)
            .unwrap_or([255, 255, 255])
    }
}

/// Destination index range `[lo, hi]` that nearest-neighbour sampling maps
/// into the source range `[s0, s1]` when resizing `src` → `dst` samples.
pub(crate) fn nearest_preimage(s0: usize, s1: usize, src: usize, dst: usize) -> (usize, usize) {
    // dst index d samples floor(d·src/dst); smallest d with that ≥ s is
    // ceil(s·dst/src).
    let lo = (s0 * dst).div_ceil(src);
    let hi = ((s1 + 1) * dst).div_ceil(src).saturating_sub(1);
    (lo.min(dst - 1), hi.max(lo).min(dst - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preimage_matches_brute_force() {
        for src in 1..40 {
            for dst in 1..40 {
                for s0 in 0..src {
                    for s1 in s0..src {
                        let hits: Vec<usize> =
                            (0..dst).filter(|d| (s0..=s1).contains(&(d * src / dst))).collect();
                        if hits.is_empty() {
                            continue;
                        }
                        let (lo, hi) = nearest_preimage(s0, s1, src, dst);
                        assert_eq!((lo, hi), (hits[0], *hits.last().unwrap()), "{src}->{dst}");
                    }
                }
            }
        }
    }

    #[test]
    fn dominant_color_prefers_majority() {
        let mut r = Raster::filled(3, 1, [9, 9, 9]);
        r.put(0, 0, [1, 2, 3]);
        assert_eq!(r.dominant_color(), [9, 9, 9]);
    }
}
