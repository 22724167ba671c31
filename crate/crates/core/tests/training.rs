use diaclid_core::corpus::{render_word, AnnotatedImage, RenderStyle};
use diaclid_core::detector::{
    evaluate_detector, fit_anchor_shapes, ground_truth, train_detector, Detection, DetectorConfig,
    DetectorTrainer, MatchTally, LossParts, OptimizerKind,
};
use diaclid_core::nn::Module;
use diaclid_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 10] = ["forêt", "Straße", "mañana", "città", "până", "Ärger", "hőség", "søster", "één", "väljä"];

fn corpus(n: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| render_word(WORDS[i % WORDS.len()], &RenderStyle::random(&mut rng)).unwrap())
        .collect()
}

fn fitted(corpus: &[AnnotatedImage]) -> DetectorConfig {
    let mut config = DetectorConfig::default();
    let sizes: Vec<(f32, f32)> = corpus.iter().flat_map(|im| im.boxes.iter().map(|b| (b.w, b.h))).collect();
    config.anchor_shapes = fit_anchor_shapes(&sizes, 9, 0);
    config
}

fn weights(net: &impl Module<f32>) -> Vec<f32> {
    let mut w = Vec::new();
    net.visit_params("", &mut |_, p| w.extend_from_slice(p.value.data()));
    w
}

#[test]
fn fifty_image_overfit_loss_falls() {
    let images = corpus(50, 1);
    let config = fitted(&images);
    let (_, log) = train_detector(&images, &config, 10, 1).unwrap();
    assert_eq!(log.len(), 10);
    let totals: Vec<f64> = log.iter().map(|l| l.total).collect();
    let avg: Vec<f64> = totals.windows(3).map(|w| w.iter().sum::<f64>() / 3.0).collect();
    assert!(avg.windows(2).all(|w| w[1] < w[0]), "moving averages {avg:?}");
    assert!(log.iter().all(|l| l.class_loss.is_finite() && l.bbox_loss.is_finite() && l.conf_loss.is_finite()));
}

#[test]
fn same_seed_same_weights() {
    let images = corpus(20, 2);
    let config = fitted(&images);
    let (a, la) = train_detector(&images, &config, 1, 5).unwrap();
    let (b, lb) = train_detector(&images, &config, 1, 5).unwrap();
    assert_eq!(la, lb);
    assert_eq!(weights(&a), weights(&b));
}

#[test]
fn divergence_restores_last_good_weights() {
    let images = corpus(16, 3);
    let mut config = fitted(&images);
    config.optimizer = OptimizerKind::Sgd;
    config.lr = 1e30;
    config.clip_norm = None;
    let mut trainer = DetectorTrainer::new(config, 3).unwrap();
    let start = weights(trainer.last_good());
    let mut outcome = Ok(());
    for _ in 0..5 {
        if let Err(e) = trainer.run_epoch(&images, |_, _| {}) {
            outcome = Err(e);
            break;
        }
    }
    assert!(matches!(outcome, Err(Error::Diverged { .. })), "{outcome:?}");
    let restored = weights(&trainer.net);
    assert!(restored.iter().all(|w| w.is_finite()));
    assert_eq!(restored, weights(trainer.last_good()));
    if trainer.log.is_empty() {
        assert_eq!(restored, start);
    }
}

#[test]
fn perfect_and_empty_detections() {
    let images = corpus(5, 4);
    let mut perfect = MatchTally::default();
    let mut empty = MatchTally::default();
    for im in &images {
        let gts = ground_truth(im);
        let dets: Vec<Detection> = gts
            .iter()
            .map(|g| Detection {
                bbox: g.bbox,
                class: g.class,
                confidence: 0.9,
                class_prob: 1.0,
            })
            .collect();
        perfect.add(&gts, &dets);
        empty.add(&gts, &[]);
    }
    let m = perfect.finish(LossParts::default());
    assert_eq!((m.recall, m.mean_iou, m.precision), (1.0, 1.0, 1.0));
    assert_eq!(empty.finish(LossParts::default()).recall, 0.0);
}

#[test]
fn evaluating_an_empty_corpus_fails() {
    let config = DetectorConfig::default();
    let net = diaclid_core::detector::DetectorNet::zeros(&config);
    assert!(evaluate_detector(&net, &[], &config).is_err());
}

#[test]
fn training_needs_a_corpus() {
    assert!(train_detector(&[], &DetectorConfig::default(), 1, 0).is_err());
}
