//! Minimal tensor and layer substrate shared by the detector and the
//! language classifier.
//!
//! Layers keep their parameters in [`Param`]s and expose an explicit
//! `forward` / `backward` pair; there is no general autodiff graph. Tensors
//! are NHWC for images and `[batch, features]` for dense layers.

pub(crate) mod act;
mod conv;
mod dense;
mod error;
mod fire;
pub mod gradcheck;
pub mod init;
mod optim;
mod pool;
mod scalar;
mod tensor;

pub use act::{
    channel_concat, channel_split, dropout, dropout_backward, relu, relu_backward, softmax,
    softmax_backward, DropoutMask,
};
pub use conv::{conv2d, Conv2d, ConvCache, Padding};
pub use dense::{dense, Dense, DenseCache};
pub use error::NnError;
pub use fire::{Fire, FireCache};
pub use optim::{adam_step, sgd_step, Adam, AdamConfig, Optimizer, Sgd, SgdConfig};
pub use pool::{maxpool, maxpool_backward, MaxPool, PoolCache};
pub use scalar::{matmul, Scalar};
pub use tensor::{Param, Tensor};

use alloc::string::String;

/// Visitor over the named parameters of a layer or network.
pub trait Module<T: Scalar> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param<T>));
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param<T>));

    fn param_count(&self) -> usize {
        let mut total = 0;
        self.visit_params("", &mut |_, p| total += p.value.len());
        total
    }

    fn zero_grad(&mut self) {
        self.visit_params_mut("", &mut |_, p| p.zero_grad());
    }
}

pub fn join_name(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        String::from(name)
    } else {
        let mut s = String::with_capacity(prefix.len() + name.len() + 1);
        s.push_str(prefix);
        s.push('.');
        s.push_str(name);
        s
    }
}
