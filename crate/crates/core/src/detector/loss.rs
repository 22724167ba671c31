use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::anchors::Anchor;
use super::boxes::{decode_box, encode, iou, BBox};
use super::decode::{sigmoid, Layout};
use super::{DetectorConfig, GRID_STRIDE};
use crate::nn::{NnError, Scalar, Tensor};

/// One annotated box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bbox: BBox,
    pub class: usize,
}

/// Which anchor answers for each ground-truth box of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthAssignment {
    /// `responsible[g]` is the anchor index for ground truth `g`.
    pub responsible: Vec<usize>,
    pub positive: Vec<bool>,
}

/// Loss components, each already weighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub class: f64,
    pub bbox: f64,
    pub conf: f64,
    pub total: f64,
}

impl LossParts {
    pub fn is_finite(&self) -> bool {
        self.class.is_finite() && self.bbox.is_finite() && self.conf.is_finite() && self.total.is_finite()
    }
}

/// Matches each ground-truth box, in order, to the still-unassigned anchor
/// with the highest prior IoU (lowest index on ties). A box that overlaps
/// no free anchor falls back to the nearest free anchor in
/// `(cx, cy, w, h)` space.
pub fn assign(ground_truth: &[GroundTruth], anchors: &[Anchor]) -> GroundTruthAssignment {
    let mut positive = vec![false; anchors.len()];
    let mut responsible = Vec::with_capacity(ground_truth.len());
    for gt in ground_truth {
        let mut best: Option<(usize, f64)> = None;
        for (i, a) in anchors.iter().enumerate() {
            if positive[i] {
                continue;
            }
            let v = iou(&gt.bbox, &a.prior);
            if v > 0.0 && best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        if best.is_none() {
            for (i, a) in anchors.iter().enumerate() {
                if positive[i] {
                    continue;
                }
                let p = &a.prior;
                let g = &gt.bbox;
                let d = (p.cx - g.cx).powi(2) + (p.cy - g.cy).powi(2) + (p.w - g.w).powi(2) + (p.h - g.h).powi(2);
                if best.map_or(true, |(_, b)| d < b) {
                    best = Some((i, d));
                }
            }
        }
        if let Some((i, _)) = best {
            positive[i] = true;
            responsible.push(i);
        }
    }
    GroundTruthAssignment { responsible, positive }
}

/// Assignment plus regression and confidence targets for a batch.
///
/// The confidence target is the IoU of the anchor's current decoded box with
/// its ground truth; it is fixed here so the loss treats it as a constant.
#[derive(Clone, Debug)]
pub struct LossTargets {
    pub assignments: Vec<GroundTruthAssignment>,
    classes: Vec<Vec<usize>>,
    deltas: Vec<Vec<[f64; 4]>>,
    ious: Vec<Vec<f64>>,
}

impl LossTargets {
    pub fn build<T: Scalar>(
        output: &Tensor<T>,
        anchors: &[Anchor],
        ground_truth: &[Vec<GroundTruth>],
        config: &DetectorConfig,
    ) -> Result<Self, NnError> {
        let (batch, gh, gw, ch) = check_output(output, anchors, ground_truth.len(), config)?;
        let layout = Layout::new(config.num_classes);
        let (width, height) = ((gw * GRID_STRIDE) as f64, (gh * GRID_STRIDE) as f64);
        let data = output.data();
        let mut t = LossTargets {
            assignments: Vec::with_capacity(batch),
            classes: Vec::with_capacity(batch),
            deltas: Vec::with_capacity(batch),
            ious: Vec::with_capacity(batch),
        };
        for (n, gts) in ground_truth.iter().enumerate() {
            let asg = assign(gts, anchors);
            let mut classes = Vec::new();
            let mut deltas = Vec::new();
            let mut ious = Vec::new();
            for (gt, &a) in gts.iter().zip(&asg.responsible) {
                let prior = &anchors[a].prior;
                let off = n * gh * gw * ch + a * layout.per_anchor + layout.delta();
                let pred = [
                    data[off].as_f64(),
                    data[off + 1].as_f64(),
                    data[off + 2].as_f64(),
                    data[off + 3].as_f64(),
                ];
                let decoded = decode_box(pred, prior).clip(width, height);
                classes.push(gt.class);
                deltas.push(encode(&gt.bbox, prior));
                ious.push(iou(&decoded, &gt.bbox));
            }
            t.assignments.push(asg);
            t.classes.push(classes);
            t.deltas.push(deltas);
            t.ious.push(ious);
        }
        Ok(t)
    }
}

fn check_output<T: Scalar>(
    output: &Tensor<T>,
    anchors: &[Anchor],
    batch: usize,
    config: &DetectorConfig,
) -> Result<(usize, usize, usize, usize), NnError> {
    let (n, gh, gw, ch) = output.dims4()?;
    if n != batch || ch != config.output_channels() || anchors.len() != gh * gw * config.anchors_per_cell {
        return Err(NnError::ShapeMismatch {
            op: "detection_loss",
            left: output.shape().to_vec(),
            right: vec![batch, anchors.len(), config.output_channels()],
        });
    }
    Ok((n, gh, gw, ch))
}

/// Weighted class, box and confidence loss together with its gradient with
/// respect to the raw ConvDet output.
///
/// Class cross-entropy and box error are averaged over positive anchors;
/// the confidence term averages `(σ(c) − IoU)²` over positives and `σ(c)²`
/// over negatives, each pool across the whole batch.
pub fn detection_loss<T: Scalar>(
    output: &Tensor<T>,
    anchors: &[Anchor],
    targets: &LossTargets,
    config: &DetectorConfig,
) -> Result<(LossParts, Tensor<T>), NnError> {
    let (batch, gh, gw, ch) = check_output(output, anchors, targets.assignments.len(), config)?;
    let layout = Layout::new(config.num_classes);
    let w = &config.loss_weights;
    let per_image = gh * gw * config.anchors_per_cell;
    let n_pos: usize = targets.assignments.iter().map(|a| a.responsible.len()).sum();
    let n_neg = batch * per_image - n_pos;
    let inv_pos = if n_pos > 0 { 1.0 / n_pos as f64 } else { 0.0 };
    let inv_neg = if n_neg > 0 { 1.0 / n_neg as f64 } else { 0.0 };

    let data = output.data();
    let mut grad = vec![T::zero(); data.len()];
    let mut parts = LossParts::default();
    let mut probs = vec![0.0f64; layout.classes];

    for n in 0..batch {
        let asg = &targets.assignments[n];
        let image = n * gh * gw * ch;
        for a in 0..per_image {
            if asg.positive[a] {
                continue;
            }
            let idx = image + a * layout.per_anchor + layout.conf();
            let s = sigmoid(data[idx].as_f64());
            parts.conf += w.conf_neg * inv_neg * s * s;
            grad[idx] = T::of_f64(w.conf_neg * inv_neg * 2.0 * s * s * (1.0 - s));
        }
        for (g, &a) in asg.responsible.iter().enumerate() {
            let off = image + a * layout.per_anchor;
            // class cross-entropy
            let logits = &data[off..off + layout.classes];
            let m = logits.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
            let mut z = 0.0;
            for (p, v) in probs.iter_mut().zip(logits) {
                *p = libm::exp(v.as_f64() - m);
                z += *p;
            }
            let target = targets.classes[n][g];
            parts.class += inv_pos * (m + libm::log(z) - logits[target].as_f64());
            for (c, p) in probs.iter().enumerate() {
                let onehot = if c == target { 1.0 } else { 0.0 };
                grad[off + c] += T::of_f64(inv_pos * (p / z - onehot));
            }
            // confidence
            let ci = off + layout.conf();
            let s = sigmoid(data[ci].as_f64());
            let e = s - targets.ious[n][g];
            parts.conf += w.conf_pos * inv_pos * e * e;
            grad[ci] += T::of_f64(w.conf_pos * inv_pos * 2.0 * e * s * (1.0 - s));
            // box regression
            for (j, t) in targets.deltas[n][g].iter().enumerate() {
                let di = off + layout.delta() + j;
                let e = data[di].as_f64() - t;
                parts.bbox += w.bbox * inv_pos * e * e;
                grad[di] += T::of_f64(w.bbox * inv_pos * 2.0 * e);
            }
        }
    }
    parts.total = parts.class + parts.bbox + parts.conf;
    Ok((parts, Tensor::from_vec(output.shape(), grad)?))
}

/// Builds targets from the current output and evaluates the loss.
pub fn assign_and_loss<T: Scalar>(
    output: &Tensor<T>,
    anchors: &[Anchor],
    ground_truth: &[Vec<GroundTruth>],
    config: &DetectorConfig,
) -> Result<(LossParts, Tensor<T>), NnError> {
    let targets = LossTargets::build(output, anchors, ground_truth, config)?;
    detection_loss(output, anchors, &targets, config)
}

/// Finite-difference check of [`detection_loss`] on a random small instance
/// (grid up to 3×3, up to 3 anchors per cell, up to 6 classes). Targets are
/// built once and held fixed, matching the stop-gradient on the IoU target.
/// Returns the worst relative error.
pub fn check_loss_gradient<R: rand::Rng>(rng: &mut R, single_anchor: bool) -> Result<f64, NnError> {
    use crate::nn::gradcheck::compare;

    let (gh, gw, k) = if single_anchor {
        (1, 1, 1)
    } else {
        (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3))
    };
    let classes = rng.gen_range(2..=6);
    let shapes: Vec<(f32, f32)> = (0..k)
        .map(|_| (rng.gen_range(2.0..6.0), rng.gen_range(2.0..6.0)))
        .collect();
    let config = DetectorConfig {
        anchors_per_cell: k,
        num_classes: classes,
        anchor_shapes: shapes,
        ..DetectorConfig::default()
    };
    let anchors = super::generate_anchors(gh, gw, &config.anchor_shapes);
    let batch = if single_anchor { 1 } else { rng.gen_range(1..=2) };
    let (width, height) = ((gw * GRID_STRIDE) as f64, (gh * GRID_STRIDE) as f64);
    let gts: Vec<Vec<GroundTruth>> = (0..batch)
        .map(|_| {
            let count = if single_anchor { 1 } else { rng.gen_range(0..=anchors.len().min(3)) };
            (0..count)
                .map(|_| {
                    let w = rng.gen_range(1.0..width.max(2.0));
                    let h = rng.gen_range(1.0..height.max(2.0));
                    GroundTruth {
                        bbox: BBox::new(rng.gen_range(0.0..width), rng.gen_range(0.0..height), w, h),
                        class: rng.gen_range(0..classes),
                    }
                })
                .collect()
        })
        .collect();
    let shape = [batch, gh, gw, config.output_channels()];
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let output = Tensor::from_vec(&shape, data)?;
    let targets = LossTargets::build(&output, &anchors, &gts, &config)?;
    let (_, grad) = detection_loss(&output, &anchors, &targets, &config)?;
    let mut xs = output.data().to_vec();
    Ok(compare(&mut xs, grad.data(), |v| {
        let t = Tensor::from_vec(&shape, v.to_vec()).expect("same shape");
        detection_loss(&t, &anchors, &targets, &config).expect("valid instance").0.total
    }))
}
