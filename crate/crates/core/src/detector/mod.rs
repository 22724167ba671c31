//! Anchor-based diacritic detector: network, anchors, box transforms, NMS,
//! loss, training and evaluation.

mod anchors;
mod boxes;
mod config;
mod decode;
mod eval;
mod loss;
mod net;
mod nms;
mod train;

pub use anchors::{fit_anchor_shapes, generate_anchors, Anchor};
pub use boxes::{decode_box, encode, iou, BBox, MAX_LOG_SCALE};
pub use config::{default_anchor_shapes, DetectorConfig, LossWeights, OptimizerKind};
pub use decode::{decode, postprocess, Detection};
pub use loss::{assign, assign_and_loss, check_loss_gradient, detection_loss, GroundTruth, GroundTruthAssignment, LossParts, LossTargets};
pub use net::{parameter_layout, DetectorCache, DetectorNet, GRID_STRIDE};
pub use nms::nms;
pub use eval::{detect, evaluate_detector, match_detections, DetectorMetrics, ImageMatch, MatchTally, MATCH_IOU};
pub use train::{ground_truth, input_tensor, padded_width, plan_batches, train_detector, DetectorTrainer, EpochLog};
