use alloc::vec::Vec;

use super::boxes::iou;
use super::Detection;

/// Greedy per-class non-maximum suppression.
///
/// Detections are visited by descending confidence (ties by input index);
/// one is kept iff its IoU with every kept detection of the same class is
/// at most `threshold`. Output is in visiting order.
pub fn nms(detections: &[Detection], threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .confidence
            .total_cmp(&detections[a].confidence)
            .then(a.cmp(&b))
    });
    let mut kept_by_class: alloc::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut out = Vec::new();
    for i in order {
        let d = &detections[i];
        let kept = kept_by_class.entry(d.class).or_default();
        if kept
            .iter()
            .all(|&k| iou(&detections[k].bbox, &d.bbox) <= threshold)
        {
            kept.push(i);
            out.push(*d);
        }
    }
    out
}
