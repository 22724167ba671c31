use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::table::DIACRITIC_COUNT;

/// Weights of the three loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub bbox: f64,
    pub conf_pos: f64,
    pub conf_neg: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            bbox: 5.0,
            conf_pos: 75.0,
            conf_neg: 100.0,
        }
    }
}

/// Update rule used by the detector trainer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Hyper-parameters of the diacritic detector. Serialized into the model
/// descriptor so a saved model carries its anchors and thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub anchors_per_cell: usize,
    pub num_classes: usize,
    pub nms_threshold: f64,
    pub dropout: f64,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub decay: f64,
    /// SGD only.
    pub momentum: f64,
    pub clip_norm: Option<f64>,
    pub batch_size: usize,
    /// `(w, h)` prior sizes in input pixels, one per anchor slot.
    pub anchor_shapes: Vec<(f32, f32)>,
    pub loss_weights: LossWeights,
    /// Detections below this confidence are dropped before NMS.
    pub score_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            anchors_per_cell: 9,
            num_classes: DIACRITIC_COUNT,
            nms_threshold: 0.2,
            dropout: 0.5,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            decay: 1e-4,
            momentum: 0.9,
            clip_norm: Some(10.0),
            batch_size: 16,
            anchor_shapes: default_anchor_shapes(),
            loss_weights: LossWeights::default(),
            score_threshold: 0.5,
        }
    }
}

/// Priors used until k-means over a corpus replaces them: glyph-sized
/// boxes at a 16-pixel line height.
pub fn default_anchor_shapes() -> Vec<(f32, f32)> {
    let mut v = Vec::with_capacity(9);
    for &h in &[10.0f32, 13.0, 16.0] {
        for &w in &[5.0f32, 8.0, 11.0] {
            v.push((w, h));
        }
    }
    v
}

impl DetectorConfig {
    /// Channels emitted by the ConvDet layer: per anchor, class logits, one
    /// confidence logit and four box deltas.
    pub fn output_channels(&self) -> usize {
        self.anchors_per_cell * (self.num_classes + 5)
    }

    pub fn validate(&self) -> Result<(), crate::Error> {
        let bad = |msg: &str| Err(crate::Error::Config(msg.into()));
        if self.anchors_per_cell == 0 {
            return bad("anchors_per_cell must be at least 1");
        }
        if self.anchor_shapes.len() != self.anchors_per_cell {
            return bad("anchor_shapes must list one (w, h) per anchor slot");
        }
        if self.anchor_shapes.iter().any(|&(w, h)| !(w > 0.0 && h > 0.0)) {
            return bad("anchor shapes must be positive");
        }
        if self.num_classes == 0 {
            return bad("num_classes must be positive");
        }
        for (name, v) in [
            ("nms_threshold", self.nms_threshold),
            ("score_threshold", self.score_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(crate::Error::Config(alloc::format!("{name} must lie in (0, 1)")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.lr > 0.0) || self.batch_size == 0 {
            return bad("lr and batch_size must be positive");
        }
        Ok(())
    }
}
