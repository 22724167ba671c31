use diaclid_core::detector::{
    assign, assign_and_loss, decode, decode_box, encode, generate_anchors, iou, nms, BBox,
    Detection, DetectorConfig, GroundTruth,
};
use diaclid_core::nn::Tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// IoU of two boxes with integer corners, by counting unit cells.
fn cell_count_iou(a: (i32, i32, i32, i32), b: (i32, i32, i32, i32)) -> f64 {
    let inside = |r: (i32, i32, i32, i32), x: i32, y: i32| x >= r.0 && x < r.2 && y >= r.1 && y < r.3;
    let (mut inter, mut union) = (0u32, 0u32);
    for y in 0..40 {
        for x in 0..40 {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += (ia && ib) as u32;
            union += (ia || ib) as u32;
        }
    }
    inter as f64 / union as f64
}

fn random_rect(rng: &mut ChaCha8Rng) -> (i32, i32, i32, i32) {
    let x0 = rng.gen_range(0..30);
    let y0 = rng.gen_range(0..30);
    (x0, y0, x0 + rng.gen_range(1..=10), y0 + rng.gen_range(1..=10))
}

fn to_bbox(r: (i32, i32, i32, i32)) -> BBox {
    BBox::from_corners(r.0 as f64, r.1 as f64, r.2 as f64, r.3 as f64)
}

#[test]
fn iou_matches_cell_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let (a, b) = (random_rect(&mut rng), random_rect(&mut rng));
        let got = iou(&to_bbox(a), &to_bbox(b));
        assert!((got - cell_count_iou(a, b)).abs() <= 1e-9, "{a:?} {b:?}");
    }
}

#[test]
fn iou_corner_example() {
    let a = BBox::from_corners(0.0, 0.0, 4.0, 4.0);
    let b = BBox::from_corners(2.0, 2.0, 6.0, 6.0);
    assert!((iou(&a, &b) - 4.0 / 28.0).abs() < 1e-12);
}

/// Textbook NMS: repeatedly take the best remaining detection and drop every
/// remaining same-class detection that overlaps it too much.
fn brute_force_nms(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    let mut remaining: Vec<usize> = (0..dets.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for (pos, &i) in remaining.iter().enumerate() {
            let cur = remaining[best];
            if dets[i].confidence > dets[cur].confidence
                || (dets[i].confidence == dets[cur].confidence && i < cur)
            {
                best = pos;
            }
        }
        let top = remaining.remove(best);
        out.push(dets[top]);
        remaining.retain(|&j| dets[j].class != dets[top].class || iou(&dets[j].bbox, &dets[top].bbox) <= threshold);
    }
    out
}

fn random_detections(rng: &mut ChaCha8Rng) -> Vec<Detection> {
    let n = rng.gen_range(0..40);
    (0..n)
        .map(|_| Detection {
            bbox: BBox::new(
                rng.gen_range(0.0..30.0),
                rng.gen_range(0.0..16.0),
                rng.gen_range(1.0..10.0),
                rng.gen_range(1.0..16.0),
            ),
            class: rng.gen_range(0..3),
            // coarse confidences so ties actually happen
            confidence: rng.gen_range(0..10) as f64 / 10.0,
            class_prob: 1.0,
        })
        .collect()
}

#[test]
fn nms_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let dets = random_detections(&mut rng);
        let t = rng.gen_range(0.0..0.6);
        assert_eq!(nms(&dets, t), brute_force_nms(&dets, t));
    }
}

#[test]
fn nms_single_and_monotone() {
    let d = Detection {
        bbox: BBox::new(5.0, 5.0, 3.0, 3.0),
        class: 7,
        confidence: 0.4,
        class_prob: 0.9,
    };
    assert_eq!(nms(&[d], 0.2), vec![d]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let kept = nms(&random_detections(&mut rng), 0.2);
        for c in 0..3 {
            let conf: Vec<f64> = kept.iter().filter(|d| d.class == c).map(|d| d.confidence).collect();
            assert!(conf.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

proptest! {
    #[test]
    fn iou_is_symmetric_and_bounded(
        a in (0.0f64..50.0, 0.0f64..50.0, 0.1f64..20.0, 0.1f64..20.0),
        b in (0.0f64..50.0, 0.0f64..50.0, 0.1f64..20.0, 0.1f64..20.0),
    ) {
        let (a, b) = (BBox::new(a.0, a.1, a.2, a.3), BBox::new(b.0, b.1, b.2, b.3));
        let v = iou(&a, &b);
        prop_assert_eq!(v, iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn decode_inverts_encode(
        gt in (0.0f64..64.0, 0.0f64..16.0, 0.5f64..20.0, 0.5f64..16.0),
        prior in (0.0f64..64.0, 0.0f64..16.0, 2.0f64..12.0, 5.0f64..16.0),
    ) {
        let gt = BBox::new(gt.0, gt.1, gt.2, gt.3);
        let prior = BBox::new(prior.0, prior.1, prior.2, prior.3);
        let back = decode_box(encode(&gt, &prior), &prior);
        for (x, y) in [(back.cx, gt.cx), (back.cy, gt.cy), (back.w, gt.w), (back.h, gt.h)] {
            prop_assert!((x - y).abs() < 1e-5);
        }
    }
}

#[test]
fn zero_output_decodes_to_priors() {
    let config = DetectorConfig::default();
    let anchors = generate_anchors(4, 16, &config.anchor_shapes);
    let out = Tensor::<f32>::zeros(&[1, 4, 16, config.output_channels()]);
    let dets = decode(&out, 0, &anchors, &config).unwrap();
    assert_eq!(dets.len(), 576);
    for (d, a) in dets.iter().zip(&anchors) {
        assert_eq!(d.bbox, a.prior.clip(64.0, 16.0));
        assert_eq!(d.confidence, 0.5);
    }
}


#[test]
fn loss_is_zero_at_the_trivial_minimum() {
    let config = DetectorConfig::default();
    let (gh, gw) = (4, 8);
    let anchors = generate_anchors(gh, gw, &config.anchor_shapes);
    let gts = vec![
        GroundTruth { bbox: BBox::new(6.0, 8.0, 6.0, 12.0), class: 3 },
        GroundTruth { bbox: BBox::new(20.0, 7.0, 7.0, 14.0), class: 40 },
    ];
    let asg = assign(&gts, &anchors);
    let per = config.num_classes + 5;
    let mut data = vec![0.0f64; gh * gw * config.output_channels()];
    // negatives: confidence driven to (numerically) zero
    for a in 0..anchors.len() {
        data[a * per + config.num_classes] = -800.0;
    }
    for (gt, &a) in gts.iter().zip(&asg.responsible) {
        let off = a * per;
        for c in 0..config.num_classes {
            data[off + c] = if c == gt.class { 0.0 } else { -800.0 };
        }
        let d = encode(&gt.bbox, &anchors[a].prior);
        data[off + config.num_classes + 1..off + per].copy_from_slice(&d);
        // the decoded box equals the ground truth, so the IoU target is 1
        data[off + config.num_classes] = 800.0;
    }
    let out = Tensor::from_vec(&[1, gh, gw, config.output_channels()], data).unwrap();
    let (parts, _) = assign_and_loss(&out, &anchors, &[gts], &config).unwrap();
    assert!(parts.class.abs() < 1e-12, "{parts:?}");
    assert!(parts.bbox.abs() < 1e-12, "{parts:?}");
    assert!(parts.conf.abs() < 1e-12, "{parts:?}");
    assert_eq!(parts.total, parts.class + parts.bbox + parts.conf);
}

#[test]
fn loss_is_non_negative_and_assignment_unique() {
    let config = DetectorConfig::default();
    let anchors = generate_anchors(4, 10, &config.anchor_shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let gts: Vec<GroundTruth> = (0..rng.gen_range(0..8))
            .map(|_| GroundTruth {
                bbox: BBox::new(rng.gen_range(0.0..40.0), rng.gen_range(0.0..16.0), rng.gen_range(2.0..10.0), rng.gen_range(4.0..16.0)),
                class: rng.gen_range(0..85),
            })
            .collect();
        let asg = assign(&gts, &anchors);
        assert_eq!(asg.responsible.len(), gts.len());
        let mut seen = asg.responsible.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), gts.len());
        assert_eq!(asg.positive.iter().filter(|&&p| p).count(), gts.len());
        let n = 4 * 10 * config.output_channels();
        let data: Vec<f32> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let out = Tensor::from_vec(&[1, 4, 10, config.output_channels()], data).unwrap();
        let (parts, _) = assign_and_loss(&out, &anchors, &[gts], &config).unwrap();
        assert!(parts.class >= 0.0 && parts.bbox >= 0.0 && parts.conf >= 0.0);
    }
}
