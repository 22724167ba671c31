use alloc::string::String;

use super::act::{relu_inplace, relu_mask_inplace};
use super::{
    channel_concat, channel_split, join_name, Conv2d, ConvCache, Module, NnError, Padding, Param,
    Scalar, Tensor,
};

/// Squeeze 1×1 → ReLU → (expand 1×1 ‖ expand 3×3) → ReLU → channel concat.
#[derive(Clone, Debug, PartialEq)]
pub struct Fire<T = f32> {
    pub squeeze: Conv2d<T>,
    pub expand1: Conv2d<T>,
    pub expand3: Conv2d<T>,
}

#[derive(Clone, Debug)]
pub struct FireCache<T> {
    squeeze: ConvCache<T>,
    squeezed: Tensor<T>,
    expand1: ConvCache<T>,
    expand3: ConvCache<T>,
    output: Tensor<T>,
}

impl<T: Scalar> Fire<T> {
    pub fn new(c_in: usize, s1x1: usize, e1x1: usize, e3x3: usize) -> Self {
        Fire {
            squeeze: Conv2d::new(c_in, s1x1, 1, 1, Padding::Same),
            expand1: Conv2d::new(s1x1, e1x1, 1, 1, Padding::Same),
            expand3: Conv2d::new(s1x1, e3x3, 3, 1, Padding::Same),
        }
    }

    pub fn out_channels(&self) -> usize {
        self.expand1.out_channels() + self.expand3.out_channels()
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut s = self.squeeze.infer(x)?;
        relu_inplace(&mut s);
        let mut a = self.expand1.infer(&s)?;
        let mut b = self.expand3.infer(&s)?;
        relu_inplace(&mut a);
        relu_inplace(&mut b);
        channel_concat(&a, &b)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, FireCache<T>), NnError> {
        let (mut s, squeeze) = self.squeeze.forward(x)?;
        relu_inplace(&mut s);
        let (mut a, expand1) = self.expand1.forward(&s)?;
        let (mut b, expand3) = self.expand3.forward(&s)?;
        relu_inplace(&mut a);
        relu_inplace(&mut b);
        let y = channel_concat(&a, &b)?;
        Ok((
            y.clone(),
            FireCache {
                squeeze,
                squeezed: s,
                expand1,
                expand3,
                output: y,
            },
        ))
    }

    pub fn backward(
        &mut self,
        cache: &FireCache<T>,
        dy: &Tensor<T>,
        need_input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        let mut dy = dy.clone();
        relu_mask_inplace(cache.output.data(), dy.data_mut());
        let (da, db) = channel_split(&dy, self.expand1.out_channels())?;
        let mut ds = self
            .expand1
            .backward(&cache.expand1, &da, true)?
            .expect("input grad requested");
        let ds3 = self
            .expand3
            .backward(&cache.expand3, &db, true)?
            .expect("input grad requested");
        ds.add_assign(&ds3)?;
        relu_mask_inplace(cache.squeezed.data(), ds.data_mut());
        self.squeeze.backward(&cache.squeeze, &ds, need_input_grad)
    }

    pub fn cast<U: Scalar>(&self) -> Fire<U> {
        Fire {
            squeeze: self.squeeze.cast(),
            expand1: self.expand1.cast(),
            expand3: self.expand3.cast(),
        }
    }
}

impl<T: Scalar> Module<T> for Fire<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param<T>)) {
        self.squeeze.visit_params(&join_name(prefix, "squeeze1x1"), f);
        self.expand1.visit_params(&join_name(prefix, "expand1x1"), f);
        self.expand3.visit_params(&join_name(prefix, "expand3x3"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param<T>)) {
        self.squeeze.visit_params_mut(&join_name(prefix, "squeeze1x1"), f);
        self.expand1.visit_params_mut(&join_name(prefix, "expand1x1"), f);
        self.expand3.visit_params_mut(&join_name(prefix, "expand3x3"), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_channels_are_expand_sum() {
        let fire = Fire::<f32>::new(64, 16, 64, 64);
        let y = fire.infer(&Tensor::zeros(&[1, 16, 10, 64])).unwrap();
        assert_eq!(y.shape(), &[1, 16, 10, 128]);
        // zero input with zero biases stays zero
        assert!(y.data().iter().all(|&v| v == 0.0));
    }
}
