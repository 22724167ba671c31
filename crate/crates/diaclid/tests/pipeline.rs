use diaclid::cli::generate;
use diaclid::core::corpus::{render_test_image_with_layout, Raster, RenderStyle};
use diaclid::core::detector::{BBox, Detection, DetectorConfig, DetectorNet};
use diaclid::core::langid::{build_shallow, PresenceVector};
use diaclid::core::pipeline::{detect_line, identify_language, localize_lines, EvalReport, LineBox};
use diaclid::core::{Language, LANGUAGE_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inside(line: &LineBox, x: usize, y: usize) -> bool {
    x >= line.x && x < line.x + line.w && y >= line.y && y < line.y + line.h
}

#[test]
fn three_lines_give_three_boxes_covering_all_ink() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let style = RenderStyle { scale: 1, ..RenderStyle::random(&mut rng) };
        let (img, cells) =
            render_test_image_with_layout(&["la forêt", "déjà vu", "où est Noël"], Language::French, &style).unwrap();
        assert_eq!(cells.len(), 3);
        let lines = localize_lines(&img.raster);
        assert_eq!(lines.len(), 3, "{lines:?} for {style:?}");
        assert!(lines.windows(2).all(|w| w[0].y + w[0].h <= w[1].y));
        for y in 0..img.raster.height() {
            for x in 0..img.raster.width() {
                if img.raster.get(x, y) != style.bg {
                    assert!(lines.iter().any(|l| inside(l, x, y)), "ink at ({x}, {y}) outside {lines:?}");
                }
            }
        }
    }
}

#[test]
fn every_diacritic_box_lies_in_a_located_line() {
    let images = generate(&Language::ALL, 20, 11, None, true).unwrap();
    let mut boxes = 0;
    for (i, im) in images.iter().enumerate() {
        let lines = localize_lines(&im.raster);
        assert!(lines.windows(2).all(|w| w[0].y < w[1].y));
        for b in &im.boxes {
            let (x0, y0) = ((b.cx - b.w / 2.0) as usize, (b.cy - b.h / 2.0) as usize);
            let (x1, y1) = ((b.cx + b.w / 2.0) as usize - 1, (b.cy + b.h / 2.0) as usize - 1);
            let covered = lines.iter().any(|l| inside(l, x0, y0) && inside(l, x1, y1));
            assert!(covered, "image {i}: box {b:?} outside {lines:?}");
            boxes += 1;
        }
    }
    assert!(boxes > images.len());
}

#[test]
fn blank_image_is_indeterminate() {
    let config = DetectorConfig::default();
    let detector = DetectorNet::zeros(&config);
    let blank = Raster::filled(150, 150, [240, 240, 240]);
    let id = identify_language(&blank, &detector, &config, &build_shallow(0)).unwrap();
    assert!(id.lines.is_empty());
    assert!(id.detections.is_empty());
    assert_eq!(id.prediction.language, None);
}

#[test]
fn per_line_and_whole_image_presence_agree() {
    let config = DetectorConfig::default();
    let detector = DetectorNet::new(&config, &mut ChaCha8Rng::seed_from_u64(3));
    let images = generate(&[Language::German, Language::Czech], 2, 5, None, true).unwrap();
    for im in &images {
        let id = identify_language(&im.raster, &detector, &config, &build_shallow(0)).unwrap();
        let mut union = PresenceVector::EMPTY;
        for line in &id.lines {
            union |= PresenceVector::from_detections(&detect_line(&detector, &config, &im.raster, line).unwrap(), 0.5);
        }
        assert_eq!(union, id.presence);
        for d in &id.detections {
            assert!(d.bbox.cx >= 0.0 && d.bbox.cx <= im.raster.width() as f64);
            assert!(d.bbox.cy >= 0.0 && d.bbox.cy <= im.raster.height() as f64);
        }
    }
}

#[test]
fn presence_ignores_low_confidence_and_order() {
    let det = |class, confidence| Detection {
        bbox: BBox::new(5.0, 5.0, 2.0, 2.0),
        class,
        confidence,
        class_prob: 1.0,
    };
    let dets = [det(3, 0.9), det(7, 0.2), det(10, 0.5)];
    let v = PresenceVector::from_detections(&dets, 0.5);
    assert_eq!(v.indices().collect::<Vec<_>>(), [3, 10]);
    let mut rev = dets;
    rev.reverse();
    assert_eq!(PresenceVector::from_detections(&rev, 0.5), v);
}

#[test]
fn report_counts_reconstruct_the_confusion_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairs: Vec<(Language, Option<Language>)> = (0..2000)
        .map(|_| {
            let t = Language::ALL[rng.gen_range(0..LANGUAGE_COUNT)];
            let p = match rng.gen_range(0..4) {
                0 => None,
                1 => Some(Language::ALL[rng.gen_range(0..LANGUAGE_COUNT)]),
                _ => Some(t),
            };
            (t, p)
        })
        .collect();
    let r = EvalReport::from_pairs(&pairs);
    assert_eq!(r.samples, 2000);
    assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 2000);
    for s in &r.languages {
        let l = s.language.id();
        assert_eq!(s.true_positives, r.confusion[l][l]);
        assert_eq!(s.support, r.confusion[l].iter().sum::<usize>());
        assert_eq!(s.false_negatives, s.support - s.true_positives);
        assert_eq!(s.false_positives, (0..LANGUAGE_COUNT).map(|t| r.confusion[t][l]).sum::<usize>() - s.true_positives);
        assert!((0.0..=1.0).contains(&s.precision) && (0.0..=1.0).contains(&s.recall));
        let hm = if s.precision + s.recall == 0.0 { 0.0 } else { 2.0 * s.precision * s.recall / (s.precision + s.recall) };
        assert!((s.f1 - hm).abs() < 1e-12);
    }
    let macro_f1 = r.languages.iter().map(|s| s.f1).sum::<f64>() / LANGUAGE_COUNT as f64;
    assert!((r.macro_f1 - macro_f1).abs() < 1e-12);
}

#[test]
fn identification_is_deterministic() {
    let config = DetectorConfig::default();
    let detector = DetectorNet::new(&config, &mut ChaCha8Rng::seed_from_u64(4));
    let im = &generate(&[Language::Hungarian], 1, 2, None, true).unwrap()[0];
    let a = identify_language(&im.raster, &detector, &config, &build_shallow(2)).unwrap();
    let b = identify_language(&im.raster, &detector, &config, &build_shallow(2)).unwrap();
    assert_eq!(a, b);
}
