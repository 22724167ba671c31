use alloc::string::String;
use alloc::vec::Vec;

use super::{join_name, matmul, Module, NnError, Param, Scalar, Tensor};

/// Fully connected layer, weights `[in, out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T = f32> {
    pub weight: Param<T>,
    pub bias: Param<T>,
}

#[derive(Clone, Debug)]
pub struct DenseCache<T> {
    input: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Param::new(Tensor::zeros(&[inputs, outputs])),
            bias: Param::new(Tensor::zeros(&[outputs])),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        dense(x, &self.weight.value, &self.bias.value)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, DenseCache<T>), NnError> {
        let y = self.infer(x)?;
        Ok((y, DenseCache { input: x.clone() }))
    }

    pub fn backward(&mut self, cache: &DenseCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (n, i) = cache.input.dims2()?;
        let o = self.outputs();
        if dy.shape() != [n, o] {
            return Err(NnError::shape("dense backward", dy.shape(), &[n, o]));
        }
        matmul(
            cache.input.data(),
            true,
            dy.data(),
            false,
            self.weight.grad.data_mut(),
            i,
            n,
            o,
            T::one(),
        );
        let db = self.bias.grad.data_mut();
        for r in dy.data().chunks_exact(o) {
            for (b, &v) in db.iter_mut().zip(r) {
                *b += v;
            }
        }
        let mut dx = Tensor::zeros(&[n, i]);
        matmul(
            dy.data(),
            false,
            self.weight.value.data(),
            true,
            dx.data_mut(),
            n,
            o,
            i,
            T::zero(),
        );
        Ok(dx)
    }
}

impl<T: Scalar> Module<T> for Dense<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param<T>)) {
        f(join_name(prefix, "weight"), &self.weight);
        f(join_name(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param<T>)) {
        f(join_name(prefix, "weight"), &mut self.weight);
        f(join_name(prefix, "bias"), &mut self.bias);
    }
}

/// `x·W + b` for `x: [n, in]`, `W: [in, out]`, `b: [out]`.
pub fn dense<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (n, i) = x.dims2()?;
    let (wi, o) = weights.dims2()?;
    if wi != i {
        return Err(NnError::shape("dense", x.shape(), weights.shape()));
    }
    if bias.shape() != [o] {
        return Err(NnError::shape("dense", weights.shape(), bias.shape()));
    }
    let mut out = Vec::with_capacity(n * o);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    matmul(x.data(), false, weights.data(), false, &mut out, n, i, o, T::one());
    Tensor::from_vec(&[n, o], out)
}
