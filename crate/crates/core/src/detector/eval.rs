use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::anchors::generate_anchors;
use super::decode::{decode, postprocess, Detection};
use super::loss::{assign_and_loss, GroundTruth, LossParts};
use super::train::{ground_truth, input_tensor, padded_width};
use super::{iou, DetectorConfig, DetectorNet};
use crate::corpus::{AnnotatedImage, Raster};
use crate::Error;

/// Minimum IoU for a detection to count as finding a ground-truth box.
pub const MATCH_IOU: f64 = 0.5;

/// Corpus-level detection quality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectorMetrics {
    pub class_loss: f64,
    pub bbox_loss: f64,
    pub conf_loss: f64,
    pub total_loss: f64,
    pub mean_iou: f64,
    pub recall: f64,
    pub precision: f64,
    pub ground_truth: usize,
    pub detections: usize,
    pub matched: usize,
}

/// Matching outcome for one image.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImageMatch {
    /// `(ground-truth index, detection index, IoU)` triples.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// One-to-one matching of same-class pairs with IoU ≥ [`MATCH_IOU`],
/// greedily by descending IoU (ties by ground-truth then detection index).
pub fn match_detections(ground_truth: &[GroundTruth], detections: &[Detection]) -> ImageMatch {
    let mut cand = Vec::new();
    for (g, gt) in ground_truth.iter().enumerate() {
        for (d, det) in detections.iter().enumerate() {
            if det.class != gt.class {
                continue;
            }
            let v = iou(&gt.bbox, &det.bbox);
            if v >= MATCH_IOU {
                cand.push((g, d, v));
            }
        }
    }
    cand.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_g = alloc::vec![false; ground_truth.len()];
    let mut used_d = alloc::vec![false; detections.len()];
    let mut pairs = Vec::new();
    for (g, d, v) in cand {
        if !used_g[g] && !used_d[d] {
            used_g[g] = true;
            used_d[d] = true;
            pairs.push((g, d, v));
        }
    }
    ImageMatch { pairs }
}

/// Accumulates recall, precision and mean IoU from per-image results.
#[derive(Clone, Debug, Default)]
pub struct MatchTally {
    ground_truth: usize,
    detections: usize,
    matched: usize,
    iou_sum: f64,
}

impl MatchTally {
    pub fn add(&mut self, ground_truth: &[GroundTruth], detections: &[Detection]) {
        let m = match_detections(ground_truth, detections);
        self.ground_truth += ground_truth.len();
        self.detections += detections.len();
        self.matched += m.pairs.len();
        self.iou_sum += m.pairs.iter().map(|p| p.2).sum::<f64>();
    }

    pub fn finish(&self, losses: LossParts) -> DetectorMetrics {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        DetectorMetrics {
            class_loss: losses.class,
            bbox_loss: losses.bbox,
            conf_loss: losses.conf,
            total_loss: losses.total,
            mean_iou: if self.matched == 0 { 0.0 } else { self.iou_sum / self.matched as f64 },
            recall: ratio(self.matched, self.ground_truth),
            precision: ratio(self.matched, self.detections),
            ground_truth: self.ground_truth,
            detections: self.detections,
            matched: self.matched,
        }
    }
}

/// Post-NMS detections for one raster (height divisible by 4); the width
/// is right-padded to the grid stride with the dominant colour.
pub fn detect(net: &DetectorNet<f32>, raster: &Raster, config: &DetectorConfig) -> Result<Vec<Detection>, Error> {
    let x = input_tensor(&[raster], padded_width(raster.width()))?;
    let out = net.infer(&x)?;
    let (_, gh, gw, _) = out.dims4()?;
    let anchors = generate_anchors(gh, gw, &config.anchor_shapes);
    let all = decode(&out, 0, &anchors, config)?;
    Ok(postprocess(&all, config))
}

/// Inference-mode losses and matching metrics over a corpus. Losses are
/// averaged per image; images of equal padded width are batched together.
pub fn evaluate_detector(
    net: &DetectorNet<f32>,
    corpus: &[AnnotatedImage],
    config: &DetectorConfig,
) -> Result<DetectorMetrics, Error> {
    if corpus.is_empty() {
        return Err(Error::Input("empty evaluation corpus".into()));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, im) in corpus.iter().enumerate() {
        groups.entry(padded_width(im.raster.width())).or_default().push(i);
    }
    let mut tally = MatchTally::default();
    let mut sum = LossParts::default();
    for (width, members) in groups {
        for chunk in members.chunks(config.batch_size.max(1)) {
            let rasters: Vec<&Raster> = chunk.iter().map(|&i| &corpus[i].raster).collect();
            let x = input_tensor(&rasters, width)?;
            let out = net.infer(&x)?;
            let (_, gh, gw, _) = out.dims4()?;
            let anchors = generate_anchors(gh, gw, &config.anchor_shapes);
            for (n, &i) in chunk.iter().enumerate() {
                let gts = ground_truth(&corpus[i]);
                let single = slice_batch(&out, n)?;
                let (parts, _) = assign_and_loss(&single, &anchors, core::slice::from_ref(&gts), config)?;
                sum.class += parts.class;
                sum.bbox += parts.bbox;
                sum.conf += parts.conf;
                sum.total += parts.total;
                let dets = postprocess(&decode(&out, n, &anchors, config)?, config);
                tally.add(&gts, &dets);
            }
        }
    }
    let n = corpus.len().max(1) as f64;
    Ok(tally.finish(LossParts {
        class: sum.class / n,
        bbox: sum.bbox / n,
        conf: sum.conf / n,
        total: sum.total / n,
    }))
}

fn slice_batch(t: &crate::nn::Tensor<f32>, n: usize) -> Result<crate::nn::Tensor<f32>, crate::nn::NnError> {
    let (_, h, w, c) = t.dims4()?;
    let per = h * w * c;
    crate::nn::Tensor::from_vec(&[1, h, w, c], t.data()[n * per..(n + 1) * per].to_vec())
}
