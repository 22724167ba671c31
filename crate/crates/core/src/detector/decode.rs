use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::anchors::Anchor;
use super::boxes::{decode_box, BBox};
use super::nms::nms;
use super::DetectorConfig;
use crate::nn::{NnError, Scalar, Tensor};

/// A decoded candidate box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    /// Index into the canonical diacritic table.
    pub class: usize,
    /// Sigmoid of the confidence logit.
    pub confidence: f64,
    /// Softmax probability of `class`.
    pub class_prob: f64,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Channel offsets inside one anchor's `C + 5` slice: `C` class logits, one
/// confidence logit, then `δx, δy, δw, δh`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub classes: usize,
    pub per_anchor: usize,
}

impl Layout {
    pub fn new(classes: usize) -> Self {
        Layout {
            classes,
            per_anchor: classes + 5,
        }
    }
    pub fn conf(&self) -> usize {
        self.classes
    }
    pub fn delta(&self) -> usize {
        self.classes + 1
    }
}

/// Decodes every anchor of image `n` in a ConvDet output `[N, gh, gw, K·(C+5)]`.
/// Boxes are clipped to the `gw·4 × gh·4` input.
pub fn decode<T: Scalar>(
    output: &Tensor<T>,
    n: usize,
    anchors: &[Anchor],
    config: &DetectorConfig,
) -> Result<Vec<Detection>, NnError> {
    let (batch, gh, gw, ch) = output.dims4()?;
    let k = config.anchors_per_cell;
    if ch != config.output_channels() || anchors.len() != gh * gw * k || n >= batch {
        return Err(NnError::ShapeMismatch {
            op: "decode",
            left: output.shape().to_vec(),
            right: alloc::vec![anchors.len(), k, config.output_channels()],
        });
    }
    let layout = Layout::new(config.num_classes);
    let width = (gw * super::GRID_STRIDE) as f64;
    let height = (gh * super::GRID_STRIDE) as f64;
    let base = n * gh * gw * ch;
    let data = output.data();
    let mut out = Vec::with_capacity(anchors.len());
    for (a, anchor) in anchors.iter().enumerate() {
        let s = &data[base + a * layout.per_anchor..base + (a + 1) * layout.per_anchor];
        let (class, class_prob) = argmax_softmax(&s[..layout.classes]);
        let d = &s[layout.delta()..layout.delta() + 4];
        let deltas = [d[0].as_f64(), d[1].as_f64(), d[2].as_f64(), d[3].as_f64()];
        out.push(Detection {
            bbox: decode_box(deltas, &anchor.prior).clip(width, height),
            class,
            confidence: sigmoid(s[layout.conf()].as_f64()),
            class_prob,
        });
    }
    Ok(out)
}

fn argmax_softmax<T: Scalar>(logits: &[T]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    let m = logits[best].as_f64();
    let z: f64 = logits.iter().map(|v| libm::exp(v.as_f64() - m)).sum();
    (best, 1.0 / z)
}

/// Confidence filter followed by per-class NMS. Degenerate (zero-area)
/// boxes left after clipping are dropped.
pub fn postprocess(detections: &[Detection], config: &DetectorConfig) -> Vec<Detection> {
    let kept: Vec<Detection> = detections
        .iter()
        .filter(|d| d.confidence >= config.score_threshold && d.bbox.w > 0.0 && d.bbox.h > 0.0)
        .copied()
        .collect();
    nms(&kept, config.nms_threshold)
}
