//! Binary model files.
//!
//! Layout, all integers little-endian: magic `DKRT`, `u16` format version,
//! `u32` descriptor length and UTF-8 JSON descriptor, `u32` tensor count,
//! then per tensor a `u32` name length and name, `u32` rank, `rank` `u32`
//! dims and the `f32` values in row-major order.

use std::collections::BTreeMap;
use std::path::Path;

use diaclid_core::detector::{DetectorConfig, DetectorNet};
use diaclid_core::langid::{ShallowNet, HIDDEN};
use diaclid_core::nn::{Module, Tensor};
use diaclid_core::{DIACRITIC_COUNT, LANGUAGE_COUNT};
use serde::{Deserialize, Serialize};

use crate::{Error, ModelError};

pub const MAGIC: [u8; 4] = *b"DKRT";
pub const FORMAT_VERSION: u16 = 1;

/// Architecture descriptor stored in the JSON header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Descriptor {
    Detector { config: DetectorConfig },
    Langid { layers: Vec<usize> },
}

impl Descriptor {
    pub fn kind(&self) -> &'static str {
        match self {
            Descriptor::Detector { .. } => "detector",
            Descriptor::Langid { .. } => "langid",
        }
    }
}

/// Layer sizes of the language classifier, input to output.
pub fn langid_layers() -> Vec<usize> {
    vec![DIACRITIC_COUNT, HIDDEN[0], HIDDEN[1], LANGUAGE_COUNT]
}

/// One named tensor of a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Decoded contents of a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub descriptor: Descriptor,
    pub tensors: Vec<NamedTensor>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(ModelError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<usize, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }
}

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("length fits in u32").to_le_bytes());
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let desc = serde_json::to_vec(&self.descriptor).expect("descriptor serializes");
        let floats: usize = self.tensors.iter().map(|t| t.data.len()).sum();
        let mut out = Vec::with_capacity(16 + desc.len() + 4 * floats + 64 * self.tensors.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        push_u32(&mut out, desc.len());
        out.extend_from_slice(&desc);
        push_u32(&mut out, self.tensors.len());
        for t in &self.tensors {
            push_u32(&mut out, t.name.len());
            out.extend_from_slice(t.name.as_bytes());
            push_u32(&mut out, t.shape.len());
            for &d in &t.shape {
                push_u32(&mut out, d);
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut c = Cursor { bytes, pos: 0 };
        let mut magic = [0u8; 4];
        magic.copy_from_slice(c.take(4, "magic")?);
        if magic != MAGIC {
            return Err(ModelError::Version { magic, version: None });
        }
        let version = c.u16("format version")?;
        if version != FORMAT_VERSION {
            return Err(ModelError::Version {
                magic,
                version: Some(version),
            });
        }
        let len = c.u32("descriptor length")?;
        let descriptor: Descriptor = serde_json::from_slice(c.take(len, "descriptor")?)
            .map_err(|e| ModelError::Descriptor(e.to_string()))?;
        let count = c.u32("tensor count")?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let len = c.u32("tensor name length")?;
            let name = std::str::from_utf8(c.take(len, "tensor name")?)
                .map_err(|e| ModelError::Descriptor(format!("tensor name: {e}")))?
                .to_owned();
            let rank = c.u32("tensor rank")?;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(c.u32("tensor dims")?);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .and_then(|n| n.checked_mul(4))
                .ok_or(ModelError::Truncated("tensor data"))?;
            let data = c
                .take(n, "tensor data")?
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        if c.pos != bytes.len() {
            return Err(ModelError::TrailingBytes(bytes.len() - c.pos));
        }
        Ok(ModelFile { descriptor, tensors })
    }

    /// Captures every parameter of `module`, in visiting order.
    pub fn from_module(descriptor: Descriptor, module: &impl Module<f32>) -> Self {
        let mut tensors = Vec::new();
        module.visit_params("", &mut |name, p| {
            tensors.push(NamedTensor {
                name,
                shape: p.value.shape().to_vec(),
                data: p.value.data().to_vec(),
            })
        });
        ModelFile { descriptor, tensors }
    }

    /// Copies the stored tensors into `module`, which must have exactly the
    /// same names and shapes.
    pub fn fill_module(&self, module: &mut impl Module<f32>) -> Result<(), ModelError> {
        let mut stored: BTreeMap<&str, &NamedTensor> = BTreeMap::new();
        for t in &self.tensors {
            if stored.insert(&t.name, t).is_some() {
                return Err(ModelError::UnexpectedTensor(t.name.clone()));
            }
        }
        let mut failure = None;
        module.visit_params_mut("", &mut |name, p| {
            if failure.is_some() {
                return;
            }
            match stored.remove(name.as_str()) {
                None => failure = Some(ModelError::MissingTensor(name)),
                Some(t) if t.shape != p.value.shape() => {
                    failure = Some(ModelError::ShapeMismatch {
                        name,
                        stored: t.shape.clone(),
                        expected: p.value.shape().to_vec(),
                    })
                }
                Some(t) => p.value = Tensor::from_vec(&t.shape, t.data.clone()).expect("shape checked"),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        match stored.into_keys().next() {
            Some(extra) => Err(ModelError::UnexpectedTensor(extra.to_owned())),
            None => Ok(()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_bytes()).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let bytes = std::fs::read(path).map_err(Error::io(path))?;
        Self::from_bytes(&bytes).map_err(model_err(path))
    }
}

fn model_err(path: &Path) -> impl Fn(ModelError) -> Error + '_ {
    move |source| Error::Model {
        path: path.to_path_buf(),
        source,
    }
}

fn wrong_kind(expected: &str, found: &Descriptor) -> ModelError {
    ModelError::WrongKind {
        expected: expected.into(),
        found: found.kind().into(),
    }
}

/// Serialized detector: its configuration plus all weights.
pub fn detector_file(net: &DetectorNet<f32>, config: &DetectorConfig) -> ModelFile {
    ModelFile::from_module(Descriptor::Detector { config: config.clone() }, net)
}

/// Rebuilds a detector from a decoded model file.
pub fn detector_from_file(file: &ModelFile) -> Result<(DetectorNet<f32>, DetectorConfig), ModelError> {
    let Descriptor::Detector { config } = &file.descriptor else {
        return Err(wrong_kind("detector", &file.descriptor));
    };
    config.validate().map_err(|e| ModelError::Descriptor(e.to_string()))?;
    let mut net = DetectorNet::zeros(config);
    file.fill_module(&mut net)?;
    Ok((net, config.clone()))
}

/// Serialized language classifier.
pub fn langid_file(net: &ShallowNet<f32>) -> ModelFile {
    ModelFile::from_module(Descriptor::Langid { layers: langid_layers() }, net)
}

pub fn langid_from_file(file: &ModelFile) -> Result<ShallowNet<f32>, ModelError> {
    let Descriptor::Langid { layers } = &file.descriptor else {
        return Err(wrong_kind("langid", &file.descriptor));
    };
    if *layers != langid_layers() {
        return Err(ModelError::Descriptor(format!(
            "layer sizes {layers:?}, expected {:?}",
            langid_layers()
        )));
    }
    let mut net = ShallowNet::zeros();
    file.fill_module(&mut net)?;
    Ok(net)
}

pub fn save_detector(path: &Path, net: &DetectorNet<f32>, config: &DetectorConfig) -> Result<(), Error> {
    detector_file(net, config).save(path)
}

pub fn load_detector(path: &Path) -> Result<(DetectorNet<f32>, DetectorConfig), Error> {
    detector_from_file(&ModelFile::load(path)?).map_err(model_err(path))
}

pub fn save_langid(path: &Path, net: &ShallowNet<f32>) -> Result<(), Error> {
    langid_file(net).save(path)
}

pub fn load_langid(path: &Path) -> Result<ShallowNet<f32>, Error> {
    langid_from_file(&ModelFile::load(path)?).map_err(model_err(path))
}
