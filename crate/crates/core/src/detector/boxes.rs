use serde::{Deserialize, Serialize};

use crate::corpus::BoxAnnotation;

/// Centre-size box in pixel units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox { cx, cy, w, h }
    }

    /// From corner coordinates `(x0, y0)`–`(x1, y1)`.
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox {
            cx: (x0 + x1) / 2.0,
            cy: (y0 + y1) / 2.0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Intersects the box with `[0, width] × [0, height]`.
    pub fn clip(&self, width: f64, height: f64) -> BBox {
        let (x0, y0, x1, y1) = self.corners();
        let x0 = x0.clamp(0.0, width);
        let x1 = x1.clamp(0.0, width);
        let y0 = y0.clamp(0.0, height);
        let y1 = y1.clamp(0.0, height);
        BBox::from_corners(x0, y0, x1, y1)
    }
}

impl From<&BoxAnnotation> for BBox {
    fn from(b: &BoxAnnotation) -> Self {
        BBox::new(b.cx as f64, b.cy as f64, b.w as f64, b.h as f64)
    }
}

/// Intersection over union; `0` when either box is degenerate.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = ax1.min(bx1) - ax0.max(bx0);
    let ih = ay1.min(by1) - ay0.max(by0);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Largest exponent fed to `exp` when decoding widths and heights.
pub const MAX_LOG_SCALE: f64 = 10.0;

/// Box regression targets `(δx, δy, δw, δh)` of `gt` relative to `prior`.
pub fn encode(gt: &BBox, prior: &BBox) -> [f64; 4] {
    [
        (gt.cx - prior.cx) / prior.w,
        (gt.cy - prior.cy) / prior.h,
        libm::log(gt.w / prior.w),
        libm::log(gt.h / prior.h),
    ]
}

/// Inverse of [`encode`] (without clipping).
pub fn decode_box(deltas: [f64; 4], prior: &BBox) -> BBox {
    BBox::new(
        prior.cx + prior.w * deltas[0],
        prior.cy + prior.h * deltas[1],
        prior.w * libm::exp(deltas[2].min(MAX_LOG_SCALE)),
        prior.h * libm::exp(deltas[3].min(MAX_LOG_SCALE)),
    )
}
