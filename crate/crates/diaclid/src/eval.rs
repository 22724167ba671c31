//! Language-identification evaluation over a labelled test set.

use diaclid_core::corpus::AnnotatedImage;
use diaclid_core::detector::{ground_truth, DetectorConfig, DetectorMetrics, DetectorNet, LossParts, MatchTally};
use diaclid_core::langid::{predict, PresenceVector, ShallowNet};
use diaclid_core::pipeline::{identify_language, EvalReport};
use diaclid_core::Language;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Evaluation of the full pipeline, plus the classifier alone fed the
/// ground-truth presence vectors of the same images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub pipeline: EvalReport,
    pub ground_truth_presence: EvalReport,
    /// Recall, precision and mean IoU of the pipeline's detections against
    /// the rendered diacritic boxes (losses are not computed and read 0).
    pub detection: DetectorMetrics,
}

fn labels(testset: &[AnnotatedImage]) -> Result<Vec<Language>, Error> {
    testset
        .iter()
        .enumerate()
        .map(|(i, im)| {
            im.language
                .ok_or_else(|| Error::Data(format!("test image {i} has no language label")))
        })
        .collect()
}

/// Presence vector of an image's annotated boxes.
pub fn ground_truth_presence(image: &AnnotatedImage) -> PresenceVector {
    PresenceVector::from_indices(image.boxes.iter().map(|b| b.class))
}

/// Classifier alone on ground-truth presence vectors.
pub fn eval_ground_truth(testset: &[AnnotatedImage], langid: &ShallowNet<f32>) -> Result<EvalReport, Error> {
    let truth = labels(testset)?;
    let mut pairs = Vec::with_capacity(testset.len());
    for (im, &t) in testset.iter().zip(&truth) {
        pairs.push((t, predict(langid, &ground_truth_presence(im))?.language));
    }
    Ok(EvalReport::from_pairs(&pairs))
}

/// Image to language over every test image. Unlabelled images are an error.
pub fn eval_langid(
    testset: &[AnnotatedImage],
    detector: &DetectorNet<f32>,
    config: &DetectorConfig,
    langid: &ShallowNet<f32>,
) -> Result<EvalSummary, Error> {
    let truth = labels(testset)?;
    let mut pairs = Vec::with_capacity(testset.len());
    let mut tally = MatchTally::default();
    for (im, &t) in testset.iter().zip(&truth) {
        let id = identify_language(&im.raster, detector, config, langid)?;
        tally.add(&ground_truth(im), &id.detections);
        pairs.push((t, id.prediction.language));
    }
    Ok(EvalSummary {
        pipeline: EvalReport::from_pairs(&pairs),
        ground_truth_presence: eval_ground_truth(testset, langid)?,
        detection: tally.finish(LossParts::default()),
    })
}
