use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::anchors::generate_anchors;
use super::loss::{assign_and_loss, GroundTruth, LossParts};
use super::{BBox, DetectorConfig, DetectorNet, OptimizerKind, GRID_STRIDE};
use crate::corpus::{AnnotatedImage, Raster};
use crate::nn::{Adam, AdamConfig, Module, NnError, Optimizer, Sgd, SgdConfig, Tensor};
use crate::Error;

/// Mean training losses over one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub class_loss: f64,
    pub bbox_loss: f64,
    pub conf_loss: f64,
    pub total: f64,
    pub steps: usize,
}

/// Rounds a width up to the next multiple of the grid stride.
pub fn padded_width(width: usize) -> usize {
    width.div_ceil(GRID_STRIDE) * GRID_STRIDE
}

/// Packs rasters of equal height into an NHWC batch, right-padding each to
/// `width` with its own dominant colour. Pixels map to `[-1, 1]`.
pub fn input_tensor(rasters: &[&Raster], width: usize) -> Result<Tensor<f32>, NnError> {
    let height = rasters.first().map_or(0, |r| r.height());
    let mut data = Vec::with_capacity(rasters.len() * height * width * 3);
    for r in rasters {
        if r.height() != height || r.width() > width {
            return Err(NnError::invalid("input_tensor", "rasters must share a height and fit the width"));
        }
        let padded = r.pad_right(width, r.dominant_color());
        data.extend(padded.as_raw().iter().map(|&p| p as f32 / 127.5 - 1.0));
    }
    Tensor::from_vec(&[rasters.len(), height, width, 3], data)
}

/// Ground-truth boxes of an annotated image in detector form.
pub fn ground_truth(image: &AnnotatedImage) -> Vec<GroundTruth> {
    image
        .boxes
        .iter()
        .map(|b| GroundTruth {
            bbox: BBox::from(b),
            class: b.class,
        })
        .collect()
}

/// Splits the corpus into batches whose members share one padded width.
///
/// Images are shuffled, grouped into windows of eight batches, sorted by
/// width inside each window and cut; batch order is then shuffled again.
pub fn plan_batches(widths: &[usize], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..widths.len()).collect();
    order.shuffle(rng);
    let mut batches = Vec::new();
    for window in order.chunks(batch_size * 8) {
        let mut w = window.to_vec();
        w.sort_by_key(|&i| padded_width(widths[i]));
        let mut start = 0;
        while start < w.len() {
            let pw = padded_width(widths[w[start]]);
            let mut end = start + 1;
            while end < w.len() && end - start < batch_size && padded_width(widths[w[end]]) == pw {
                end += 1;
            }
            batches.push(w[start..end].to_vec());
            start = end;
        }
    }
    batches.shuffle(rng);
    batches
}

/// Stateful, seed-deterministic training driver.
///
/// After every clean epoch the network is snapshotted; a non-finite loss or
/// gradient restores that snapshot and reports [`Error::Diverged`].
pub struct DetectorTrainer {
    pub net: DetectorNet<f32>,
    pub config: DetectorConfig,
    pub log: Vec<EpochLog>,
    optimizer: Box<dyn Optimizer<f32> + Send>,
    rng: ChaCha8Rng,
    last_good: DetectorNet<f32>,
    step: u64,
}

impl DetectorTrainer {
    pub fn new(config: DetectorConfig, seed: u64) -> Result<Self, Error> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = DetectorNet::new(&config, &mut rng);
        let optimizer: Box<dyn Optimizer<f32> + Send> = match config.optimizer {
            OptimizerKind::Sgd => Box::new(Sgd::new(SgdConfig {
                lr: config.lr,
                decay: config.decay,
                momentum: config.momentum,
                clip_norm: config.clip_norm,
            })),
            OptimizerKind::Adam => Box::new(Adam::new(AdamConfig {
                lr: config.lr,
                decay: config.decay,
                clip_norm: config.clip_norm,
                ..AdamConfig::default()
            })),
        };
        Ok(DetectorTrainer {
            last_good: net.clone(),
            net,
            config,
            log: Vec::new(),
            optimizer,
            rng,
            step: 0,
        })
    }

    /// Network state after the most recent clean epoch.
    pub fn last_good(&self) -> &DetectorNet<f32> {
        &self.last_good
    }

    /// One pass over `corpus`. `on_step` sees every batch's loss.
    pub fn run_epoch(
        &mut self,
        corpus: &[AnnotatedImage],
        mut on_step: impl FnMut(u64, &LossParts),
    ) -> Result<EpochLog, Error> {
        if corpus.is_empty() {
            return Err(Error::Input("empty training corpus".into()));
        }
        let widths: Vec<usize> = corpus.iter().map(|im| im.raster.width()).collect();
        let batches = plan_batches(&widths, self.config.batch_size, &mut self.rng);
        let mut sum = LossParts::default();
        for batch in &batches {
            match self.train_step(corpus, batch) {
                Ok(parts) => {
                    on_step(self.step, &parts);
                    sum.class += parts.class;
                    sum.bbox += parts.bbox;
                    sum.conf += parts.conf;
                    sum.total += parts.total;
                }
                Err(e) => {
                    self.net = self.last_good.clone();
                    return Err(e);
                }
            }
        }
        let n = batches.len() as f64;
        let entry = EpochLog {
            epoch: self.log.len() + 1,
            class_loss: sum.class / n,
            bbox_loss: sum.bbox / n,
            conf_loss: sum.conf / n,
            total: sum.total / n,
            steps: batches.len(),
        };
        self.log.push(entry);
        self.last_good = self.net.clone();
        Ok(entry)
    }

    fn train_step(&mut self, corpus: &[AnnotatedImage], batch: &[usize]) -> Result<LossParts, Error> {
        let width = batch
            .iter()
            .map(|&i| padded_width(corpus[i].raster.width()))
            .max()
            .unwrap_or(GRID_STRIDE);
        let rasters: Vec<&Raster> = batch.iter().map(|&i| &corpus[i].raster).collect();
        let x = input_tensor(&rasters, width)?;
        let gts: Vec<Vec<GroundTruth>> = batch.iter().map(|&i| ground_truth(&corpus[i])).collect();
        let (out, cache) = self.net.forward(&x, &mut self.rng)?;
        let (_, gh, gw, _) = out.dims4()?;
        let anchors = generate_anchors(gh, gw, &self.config.anchor_shapes);
        let (parts, d_out) = assign_and_loss(&out, &anchors, &gts, &self.config)?;
        if !parts.is_finite() {
            return Err(Error::Diverged {
                step: self.step,
                msg: alloc::format!("non-finite loss {parts:?}"),
            });
        }
        self.net.zero_grad();
        self.net.backward(&cache, &d_out)?;
        self.optimizer.step(&mut self.net).map_err(|e| match e {
            NnError::NonFinite { step, what } => Error::Diverged { step, msg: what },
            other => other.into(),
        })?;
        self.step += 1;
        Ok(parts)
    }
}

/// Trains for `epochs` passes and returns the network and its log.
pub fn train_detector(
    corpus: &[AnnotatedImage],
    config: &DetectorConfig,
    epochs: usize,
    seed: u64,
) -> Result<(DetectorNet<f32>, Vec<EpochLog>), Error> {
    let mut trainer = DetectorTrainer::new(config.clone(), seed)?;
    for _ in 0..epochs {
        trainer.run_epoch(corpus, |_, _| {})?;
    }
    Ok((trainer.net, trainer.log))
}
