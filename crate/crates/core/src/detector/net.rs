use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::DetectorConfig;
use crate::nn::{
    channel_concat, channel_split, dropout, dropout_backward, init, join_name, maxpool_backward,
    Conv2d, ConvCache, DropoutMask, Fire, FireCache, MaxPool, Module, NnError, Padding, Param,
    PoolCache, Scalar, Tensor,
};

/// Input pixels per output grid cell along each axis.
pub const GRID_STRIDE: usize = 4;

/// The diacritic detection network:
///
/// ```text
/// conv1(64,3x3,s1) -> fire2 -> fire3 -> pool ------------------> pool(align) -+
///                                      \-> fire4 -> fire5 -> pool ------------+-> concat
/// concat -> fire6 -> fire7 -> fire8 -> fire9 -> fire10 -> dropout -> convdet(3x3)
/// ```
///
/// All pools are 3×3, stride 2, same padding. The extra pool on the first
/// branch brings it to the second branch's stride-4 grid before the concat.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorNet<T = f32> {
    pub conv1: Conv2d<T>,
    pub fire2: Fire<T>,
    pub fire3: Fire<T>,
    pub fire4: Fire<T>,
    pub fire5: Fire<T>,
    pub fire6: Fire<T>,
    pub fire7: Fire<T>,
    pub fire8: Fire<T>,
    pub fire9: Fire<T>,
    pub fire10: Fire<T>,
    pub convdet: Conv2d<T>,
    pub dropout: f64,
}

/// Intermediate activations kept for the backward pass.
pub struct DetectorCache<T> {
    conv1: ConvCache<T>,
    conv1_out: Tensor<T>,
    fire2: FireCache<T>,
    fire3: FireCache<T>,
    pool1: PoolCache,
    fire4: FireCache<T>,
    fire5: FireCache<T>,
    pool2: PoolCache,
    align: PoolCache,
    fire6: FireCache<T>,
    fire7: FireCache<T>,
    fire8: FireCache<T>,
    fire9: FireCache<T>,
    fire10: FireCache<T>,
    dropout: Option<DropoutMask<T>>,
    convdet: ConvCache<T>,
}

const POOL: MaxPool = MaxPool {
    kernel: 3,
    stride: 2,
    padding: Padding::Same,
};

impl<T: Scalar> DetectorNet<T> {
    /// Zero-initialised network with the fixed layer inventory.
    pub fn zeros(config: &DetectorConfig) -> Self {
        DetectorNet {
            conv1: Conv2d::new(3, 64, 3, 1, Padding::Same),
            fire2: Fire::new(64, 16, 64, 64),
            fire3: Fire::new(128, 16, 64, 64),
            fire4: Fire::new(128, 32, 128, 128),
            fire5: Fire::new(256, 32, 128, 128),
            fire6: Fire::new(384, 48, 192, 192),
            fire7: Fire::new(384, 48, 192, 192),
            fire8: Fire::new(384, 96, 384, 384),
            fire9: Fire::new(768, 96, 384, 384),
            fire10: Fire::new(768, 96, 384, 384),
            convdet: Conv2d::new(768, config.output_channels(), 3, 1, Padding::Same),
            dropout: config.dropout,
        }
    }

    /// Kaiming-initialised network. ConvDet starts near zero so every anchor
    /// begins at its prior with confidence 0.5.
    pub fn new<R: Rng + ?Sized>(config: &DetectorConfig, rng: &mut R) -> Self {
        let mut net = Self::zeros(config);
        init::kaiming_conv(&mut net.conv1, rng);
        for fire in net.fires_mut() {
            init::kaiming_conv(&mut fire.squeeze, rng);
            init::kaiming_conv(&mut fire.expand1, rng);
            init::kaiming_conv(&mut fire.expand3, rng);
        }
        let fan_in = 9 * net.convdet.in_channels();
        init::fill_normal(net.convdet.weight.value.data_mut(), fan_in, 1e-4, rng);
        net
    }

    fn fires_mut(&mut self) -> [&mut Fire<T>; 9] {
        [
            &mut self.fire2,
            &mut self.fire3,
            &mut self.fire4,
            &mut self.fire5,
            &mut self.fire6,
            &mut self.fire7,
            &mut self.fire8,
            &mut self.fire9,
            &mut self.fire10,
        ]
    }

    fn check_input(x: &Tensor<T>) -> Result<(), NnError> {
        let (_, h, w, c) = x.dims4()?;
        if c != 3 {
            return Err(NnError::invalid("detector", "input must have 3 channels"));
        }
        if h == 0 || h % GRID_STRIDE != 0 || w == 0 {
            return Err(NnError::invalid(
                "detector",
                alloc::format!("input height {h} must be a positive multiple of {GRID_STRIDE}"),
            ));
        }
        Ok(())
    }

    /// Inference: raw ConvDet output `[n, ceil(h/4), ceil(w/4), K(C+5)]`.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Self::check_input(x)?;
        let mut y = self.conv1.infer(x)?;
        crate::nn::act::relu_inplace(&mut y);
        let y = self.fire2.infer(&y)?;
        let y = self.fire3.infer(&y)?;
        let (p1, _) = POOL.forward(&y)?;
        let y = self.fire4.infer(&p1)?;
        let y = self.fire5.infer(&y)?;
        let (p2, _) = POOL.forward(&y)?;
        let (a, _) = POOL.forward(&p1)?;
        let y = channel_concat(&a, &p2)?;
        let y = self.fire6.infer(&y)?;
        let y = self.fire7.infer(&y)?;
        let y = self.fire8.infer(&y)?;
        let y = self.fire9.infer(&y)?;
        let y = self.fire10.infer(&y)?;
        self.convdet.infer(&y)
    }

    /// Training forward pass (dropout active).
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: &Tensor<T>,
        rng: &mut R,
    ) -> Result<(Tensor<T>, DetectorCache<T>), NnError> {
        Self::check_input(x)?;
        let (mut y, conv1) = self.conv1.forward(x)?;
        crate::nn::act::relu_inplace(&mut y);
        let conv1_out = y.clone();
        let (y, fire2) = self.fire2.forward(&y)?;
        let (y, fire3) = self.fire3.forward(&y)?;
        let (p1, pool1) = POOL.forward(&y)?;
        let (y, fire4) = self.fire4.forward(&p1)?;
        let (y, fire5) = self.fire5.forward(&y)?;
        let (p2, pool2) = POOL.forward(&y)?;
        let (a, align) = POOL.forward(&p1)?;
        let y = channel_concat(&a, &p2)?;
        let (y, fire6) = self.fire6.forward(&y)?;
        let (y, fire7) = self.fire7.forward(&y)?;
        let (y, fire8) = self.fire8.forward(&y)?;
        let (y, fire9) = self.fire9.forward(&y)?;
        let (y, fire10) = self.fire10.forward(&y)?;
        let (y, mask) = dropout(&y, self.dropout, rng, true)?;
        let (out, convdet) = self.convdet.forward(&y)?;
        Ok((
            out,
            DetectorCache {
                conv1,
                conv1_out,
                fire2,
                fire3,
                pool1,
                fire4,
                fire5,
                pool2,
                align,
                fire6,
                fire7,
                fire8,
                fire9,
                fire10,
                dropout: mask,
                convdet,
            },
        ))
    }

    /// Accumulates parameter gradients for `d_out = dL/d(convdet output)`.
    pub fn backward(&mut self, cache: &DetectorCache<T>, d_out: &Tensor<T>) -> Result<(), NnError> {
        let need = |o: Option<Tensor<T>>| o.expect("input grad requested");
        let dy = need(self.convdet.backward(&cache.convdet, d_out, true)?);
        let dy = dropout_backward(cache.dropout.as_ref(), &dy);
        let dy = need(self.fire10.backward(&cache.fire10, &dy, true)?);
        let dy = need(self.fire9.backward(&cache.fire9, &dy, true)?);
        let dy = need(self.fire8.backward(&cache.fire8, &dy, true)?);
        let dy = need(self.fire7.backward(&cache.fire7, &dy, true)?);
        let dy = need(self.fire6.backward(&cache.fire6, &dy, true)?);
        let (da, dp2) = channel_split(&dy, self.fire3.out_channels())?;
        let mut dp1 = maxpool_backward(&cache.align, &da)?;
        let dy = maxpool_backward(&cache.pool2, &dp2)?;
        let dy = need(self.fire5.backward(&cache.fire5, &dy, true)?);
        let dy = need(self.fire4.backward(&cache.fire4, &dy, true)?);
        dp1.add_assign(&dy)?;
        let dy = maxpool_backward(&cache.pool1, &dp1)?;
        let dy = need(self.fire3.backward(&cache.fire3, &dy, true)?);
        let mut dy = need(self.fire2.backward(&cache.fire2, &dy, true)?);
        crate::nn::act::relu_mask_inplace(cache.conv1_out.data(), dy.data_mut());
        self.conv1.backward(&cache.conv1, &dy, false)?;
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> DetectorNet<U> {
        DetectorNet {
            conv1: self.conv1.cast(),
            fire2: self.fire2.cast(),
            fire3: self.fire3.cast(),
            fire4: self.fire4.cast(),
            fire5: self.fire5.cast(),
            fire6: self.fire6.cast(),
            fire7: self.fire7.cast(),
            fire8: self.fire8.cast(),
            fire9: self.fire9.cast(),
            fire10: self.fire10.cast(),
            convdet: self.convdet.cast(),
            dropout: self.dropout,
        }
    }
}

impl<T: Scalar> Module<T> for DetectorNet<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param<T>)) {
        self.conv1.visit_params(&join_name(prefix, "conv1"), f);
        let fires: [(&str, &Fire<T>); 9] = [
            ("fire2", &self.fire2),
            ("fire3", &self.fire3),
            ("fire4", &self.fire4),
            ("fire5", &self.fire5),
            ("fire6", &self.fire6),
            ("fire7", &self.fire7),
            ("fire8", &self.fire8),
            ("fire9", &self.fire9),
            ("fire10", &self.fire10),
        ];
        for (name, fire) in fires {
            fire.visit_params(&join_name(prefix, name), f);
        }
        self.convdet.visit_params(&join_name(prefix, "convdet"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param<T>)) {
        self.conv1.visit_params_mut(&join_name(prefix, "conv1"), f);
        let names = [
            "fire2", "fire3", "fire4", "fire5", "fire6", "fire7", "fire8", "fire9", "fire10",
        ];
        for (name, fire) in names.into_iter().zip(self.fires_mut()) {
            fire.visit_params_mut(&join_name(prefix, name), f);
        }
        self.convdet.visit_params_mut(&join_name(prefix, "convdet"), f);
    }
}

/// Names and shapes of every parameter tensor, in serialization order.
pub fn parameter_layout<T: Scalar>(net: &DetectorNet<T>) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    net.visit_params("", &mut |name, p| out.push((name, p.value.shape().to_vec())));
    out
}
