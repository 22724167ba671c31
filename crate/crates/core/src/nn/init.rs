//! Kaiming-style fan-in initialisation.

use rand::Rng;

use super::{Conv2d, Dense, Scalar};

/// One standard-normal draw (Box–Muller, deterministic given the RNG).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

pub fn kaiming_conv<T: Scalar, R: Rng + ?Sized>(layer: &mut Conv2d<T>, rng: &mut R) {
    let fan_in = layer.kernel * layer.kernel * layer.in_channels();
    fill_normal(layer.weight.value.data_mut(), fan_in, 2.0, rng);
    layer.bias.value.data_mut().iter_mut().for_each(|b| *b = T::zero());
}

pub fn kaiming_dense<T: Scalar, R: Rng + ?Sized>(layer: &mut Dense<T>, rng: &mut R) {
    let fan_in = layer.inputs();
    fill_normal(layer.weight.value.data_mut(), fan_in, 2.0, rng);
    layer.bias.value.data_mut().iter_mut().for_each(|b| *b = T::zero());
}

/// Normal init with variance `gain / fan_in`.
pub fn fill_normal<T: Scalar, R: Rng + ?Sized>(data: &mut [T], fan_in: usize, gain: f64, rng: &mut R) {
    let std = libm::sqrt(gain / fan_in.max(1) as f64);
    for w in data {
        *w = T::of_f64(standard_normal(rng) * std);
    }
}
