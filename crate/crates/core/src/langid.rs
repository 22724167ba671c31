//! Diacritic presence vectors and the shallow language classifier.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{BitOr, BitOrAssign};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::detector::Detection;
use crate::nn::init::kaiming_dense;
use crate::nn::{
    join_name, softmax, Adam, AdamConfig, Dense, DenseCache, Module, NnError, Optimizer, Param,
    Scalar, Tensor,
};
use crate::table::{canonical_index, is_diacritic, Language, DIACRITIC_COUNT, LANGUAGE_COUNT};
use crate::Error;

/// Hidden layer widths of the classifier.
pub const HIDDEN: [usize; 2] = [50, 30];

/// Default confidence a detection needs to count as present.
pub const MIN_DETECTION_CONFIDENCE: f64 = 0.5;

/// Which of the 85 diacritics occur, one bit per canonical index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PresenceVector(u128);

impl PresenceVector {
    pub const EMPTY: PresenceVector = PresenceVector(0);

    pub fn set(&mut self, index: usize) {
        assert!(index < DIACRITIC_COUNT, "diacritic index {index} out of range");
        self.0 |= 1u128 << index;
    }

    pub fn get(&self, index: usize) -> bool {
        index < DIACRITIC_COUNT && self.0 >> index & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn bits(&self) -> u128 {
        self.0
    }

    /// Set indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..DIACRITIC_COUNT).filter(move |&i| self.get(i))
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = PresenceVector::EMPTY;
        for i in indices {
            v.set(i);
        }
        v
    }

    /// Bit `i` is set iff the diacritic with canonical index `i` occurs.
    pub fn from_text(text: &str) -> Self {
        PresenceVector::from_indices(text.chars().filter_map(canonical_index))
    }

    /// Bit `i` is set iff some detection of class `i` reaches `min_confidence`.
    pub fn from_detections(detections: &[Detection], min_confidence: f64) -> Self {
        PresenceVector::from_indices(
            detections
                .iter()
                .filter(|d| d.confidence >= min_confidence && d.class < DIACRITIC_COUNT)
                .map(|d| d.class),
        )
    }

    /// Dense 0/1 features in canonical order.
    pub fn features<T: Scalar>(&self) -> [T; DIACRITIC_COUNT] {
        core::array::from_fn(|i| if self.get(i) { T::one() } else { T::zero() })
    }
}

impl BitOr for PresenceVector {
    type Output = PresenceVector;

    fn bitor(self, rhs: PresenceVector) -> PresenceVector {
        PresenceVector(self.0 | rhs.0)
    }
}

impl BitOrAssign for PresenceVector {
    fn bitor_assign(&mut self, rhs: PresenceVector) {
        self.0 |= rhs.0;
    }
}

pub fn presence_from_text(text: &str) -> PresenceVector {
    PresenceVector::from_text(text)
}

pub fn presence_from_detections(detections: &[Detection], min_confidence: f64) -> PresenceVector {
    PresenceVector::from_detections(detections, min_confidence)
}

/// Classifier output. `language` is `None` (indeterminate) when the input
/// carried no diacritic evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguagePrediction {
    pub probabilities: [f64; LANGUAGE_COUNT],
    pub language: Option<Language>,
    pub confidence: f64,
}

impl LanguagePrediction {
    /// Most probable language regardless of the evidence flag.
    pub fn argmax(&self) -> Language {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        Language::ALL[best]
    }
}

/// 85 -> dense(50)+ReLU -> dense(30)+ReLU -> dense(13)+softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct ShallowNet<T = f32> {
    pub hidden1: Dense<T>,
    pub hidden2: Dense<T>,
    pub output: Dense<T>,
}

pub struct ShallowCache<T> {
    c1: DenseCache<T>,
    a1: Tensor<T>,
    c2: DenseCache<T>,
    a2: Tensor<T>,
    c3: DenseCache<T>,
}

fn relu_in_place<T: Scalar>(x: &mut Tensor<T>) {
    for v in x.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

fn relu_mask<T: Scalar>(y: &Tensor<T>, dy: &mut Tensor<T>) {
    for (d, &v) in dy.data_mut().iter_mut().zip(y.data()) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
}

impl<T: Scalar> ShallowNet<T> {
    /// Zero-initialised network with the fixed layer sizes.
    pub fn zeros() -> Self {
        ShallowNet {
            hidden1: Dense::new(DIACRITIC_COUNT, HIDDEN[0]),
            hidden2: Dense::new(HIDDEN[0], HIDDEN[1]),
            output: Dense::new(HIDDEN[1], LANGUAGE_COUNT),
        }
    }

    /// Kaiming-initialised network.
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut net = Self::zeros();
        kaiming_dense(&mut net.hidden1, rng);
        kaiming_dense(&mut net.hidden2, rng);
        kaiming_dense(&mut net.output, rng);
        net
    }

    /// Output logits for a `[batch, 85]` input.
    pub fn logits(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut a = self.hidden1.infer(x)?;
        relu_in_place(&mut a);
        let mut a = self.hidden2.infer(&a)?;
        relu_in_place(&mut a);
        self.output.infer(&a)
    }

    /// Class probabilities for a `[batch, 85]` input.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ShallowCache<T>), NnError> {
        let (mut a1, c1) = self.hidden1.forward(x)?;
        relu_in_place(&mut a1);
        let (mut a2, c2) = self.hidden2.forward(&a1)?;
        relu_in_place(&mut a2);
        let (z, c3) = self.output.forward(&a2)?;
        Ok((z, ShallowCache { c1, a1, c2, a2, c3 }))
    }

    /// Accumulates parameter gradients given `d_logits`.
    pub fn backward(&mut self, cache: &ShallowCache<T>, d_logits: &Tensor<T>) -> Result<(), NnError> {
        let mut d = self.output.backward(&cache.c3, d_logits)?;
        relu_mask(&cache.a2, &mut d);
        let mut d = self.hidden2.backward(&cache.c2, &d)?;
        relu_mask(&cache.a1, &mut d);
        self.hidden1.backward(&cache.c1, &d)?;
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ShallowNet<U> {
        let cast = |d: &Dense<T>| Dense {
            weight: d.weight.cast(),
            bias: d.bias.cast(),
        };
        ShallowNet {
            hidden1: cast(&self.hidden1),
            hidden2: cast(&self.hidden2),
            output: cast(&self.output),
        }
    }
}

impl<T: Scalar> Module<T> for ShallowNet<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param<T>)) {
        self.hidden1.visit_params(&join_name(prefix, "hidden1"), f);
        self.hidden2.visit_params(&join_name(prefix, "hidden2"), f);
        self.output.visit_params(&join_name(prefix, "output"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param<T>)) {
        self.hidden1.visit_params_mut(&join_name(prefix, "hidden1"), f);
        self.hidden2.visit_params_mut(&join_name(prefix, "hidden2"), f);
        self.output.visit_params_mut(&join_name(prefix, "output"), f);
    }
}

/// Freshly initialised classifier.
pub fn build_shallow(seed: u64) -> ShallowNet<f32> {
    ShallowNet::new(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Mean cross-entropy of `logits` against `labels` and its gradient.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(f64, Tensor<T>), NnError> {
    let (n, c) = logits.dims2()?;
    if labels.len() != n || labels.iter().any(|&l| l >= c) {
        return Err(NnError::invalid("cross_entropy", "labels must match the batch and class count"));
    }
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    let scale = T::of_f64(1.0 / n as f64);
    for (row, &label) in grad.data_mut().chunks_exact_mut(c).zip(labels) {
        loss -= libm::log(row[label].as_f64().max(1e-300));
        row[label] -= T::one();
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok((loss / n as f64, grad))
}

/// One labelled presence vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub vector: PresenceVector,
    pub language: Language,
}

/// Train/validation split of generated presence vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LangidDataset {
    pub train: Vec<LabeledVector>,
    pub validation: Vec<LabeledVector>,
}

/// Sampling parameters for [`gen_training_vectors`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub samples_per_language: usize,
    /// Leading share of each language's samples used for training.
    pub train_fraction: f64,
    /// Inclusive bounds on chunk length in words.
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            samples_per_language: 1000,
            train_fraction: 0.9,
            min_words: 3,
            max_words: 40,
        }
    }
}

/// Tokens of `text` usable for `lang`: words with a foreign diacritic are
/// dropped so every vector stays within the language's row.
fn language_tokens(text: &str, lang: Language) -> Vec<&str> {
    tokenize(text)
        .filter(|w| w.chars().all(|c| !is_diacritic(c) || lang.has_diacritic(c)))
        .collect()
}

/// Samples presence vectors from random word chunks of each language's text.
///
/// Chunks whose vector would be empty are redrawn; the first
/// `train_fraction` of each language's samples form the training split.
pub fn gen_training_vectors(
    texts: &[(Language, &str)],
    config: &ChunkConfig,
    seed: u64,
) -> Result<LangidDataset, Error> {
    if config.min_words == 0 || config.min_words > config.max_words {
        return Err(Error::Config("chunk length bounds must satisfy 1 <= min <= max".into()));
    }
    if !(0.0..=1.0).contains(&config.train_fraction) {
        return Err(Error::Config("train_fraction must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.samples_per_language;
    let n_train = libm::round(n as f64 * config.train_fraction) as usize;
    let mut data = LangidDataset::default();
    for &(lang, text) in texts {
        let tokens = language_tokens(text, lang);
        let marked: Vec<usize> = (0..tokens.len())
            .filter(|&i| tokens[i].chars().any(is_diacritic))
            .collect();
        if marked.is_empty() {
            return Err(Error::InsufficientWords {
                language: lang,
                wanted: n,
                found: 0,
            });
        }
        let budget = n.saturating_mul(100).max(1000);
        let mut samples = Vec::with_capacity(n);
        let mut attempts = 0;
        while samples.len() < n {
            if attempts == budget {
                return Err(Error::InsufficientWords {
                    language: lang,
                    wanted: n,
                    found: samples.len(),
                });
            }
            attempts += 1;
            let len = rng.gen_range(config.min_words..=config.max_words).min(tokens.len());
            let start = rng.gen_range(0..=tokens.len() - len);
            let vector = tokens[start..start + len]
                .iter()
                .fold(PresenceVector::EMPTY, |v, w| v | PresenceVector::from_text(w));
            if !vector.is_empty() {
                samples.push(LabeledVector { vector, language: lang });
            }
        }
        let validation = samples.split_off(n_train.min(n));
        data.train.extend(samples);
        data.validation.extend(validation);
    }
    Ok(data)
}

/// Optimiser and schedule for [`train_langid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LangidTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for LangidTrainConfig {
    fn default() -> Self {
        LangidTrainConfig {
            epochs: 20,
            batch_size: 32,
            adam: AdamConfig {
                lr: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-7,
                decay: 0.0,
                clip_norm: None,
            },
        }
    }
}

/// Per-epoch training record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LangidEpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

fn batch_tensor(vectors: &[LabeledVector]) -> Tensor<f32> {
    let mut data = Vec::with_capacity(vectors.len() * DIACRITIC_COUNT);
    for v in vectors {
        data.extend_from_slice(&v.vector.features::<f32>());
    }
    Tensor::from_vec(&[vectors.len(), DIACRITIC_COUNT], data).expect("feature rows have fixed width")
}

/// Fraction of `vectors` whose argmax matches their label.
pub fn accuracy(net: &ShallowNet<f32>, vectors: &[LabeledVector]) -> Result<f64, NnError> {
    if vectors.is_empty() {
        return Ok(0.0);
    }
    let probs = net.infer(&batch_tensor(vectors))?;
    let hits = probs
        .data()
        .chunks_exact(LANGUAGE_COUNT)
        .zip(vectors)
        .filter(|(row, v)| argmax(row) == v.language.id())
        .count();
    Ok(hits as f64 / vectors.len() as f64)
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = i;
        }
    }
    best
}

/// Trains a fresh classifier with mini-batch Adam; deterministic in `seed`.
pub fn train_langid(
    data: &LangidDataset,
    config: &LangidTrainConfig,
    seed: u64,
) -> Result<(ShallowNet<f32>, Vec<LangidEpochLog>), Error> {
    if data.train.is_empty() {
        return Err(Error::Input("no training vectors".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = ShallowNet::<f32>::new(&mut rng);
    let mut optimizer = Adam::<f32>::new(config.adam);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    let mut step = 0u64;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<LabeledVector> = idx.iter().map(|&i| data.train[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|v| v.language.id()).collect();
            let (logits, cache) = net.forward(&batch_tensor(&batch))?;
            let (loss, grad) = cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    step,
                    msg: alloc::format!("non-finite loss {loss}"),
                });
            }
            net.zero_grad();
            net.backward(&cache, &grad)?;
            optimizer.step(&mut net).map_err(|e| match e {
                NnError::NonFinite { step, what } => Error::Diverged { step, msg: what },
                other => other.into(),
            })?;
            loss_sum += loss;
            batches += 1;
            step += 1;
        }
        log.push(LangidEpochLog {
            epoch,
            loss: loss_sum / batches as f64,
            train_accuracy: accuracy(&net, &data.train)?,
            validation_accuracy: accuracy(&net, &data.validation)?,
        });
    }
    Ok((net, log))
}

/// Language distribution for one presence vector. The empty vector yields
/// an indeterminate prediction.
pub fn predict(net: &ShallowNet<f32>, vector: &PresenceVector) -> Result<LanguagePrediction, NnError> {
    let x = Tensor::from_vec(&[1, DIACRITIC_COUNT], vector.features::<f32>().to_vec())?;
    let logits = net.logits(&x)?.cast::<f64>();
    let probs = softmax(&logits);
    let probabilities: [f64; LANGUAGE_COUNT] = core::array::from_fn(|i| probs.data()[i]);
    let best = (0..LANGUAGE_COUNT).fold(0, |b, i| if probabilities[i] > probabilities[b] { i } else { b });
    Ok(LanguagePrediction {
        probabilities,
        language: if vector.is_empty() { None } else { Some(Language::ALL[best]) },
        confidence: probabilities[best],
    })
}
