use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Module, NnError, Param, Scalar};

/// One plain SGD update with time-decayed step size
/// `lr_t = lr / (1 + decay * step)`.
pub fn sgd_step<T: Scalar>(param: &mut [T], grad: &[T], lr: f64, decay: f64, step: u64) {
    let lr_t = T::of_f64(decayed_lr(lr, decay, step));
    for (p, &g) in param.iter_mut().zip(grad) {
        *p -= lr_t * g;
    }
}

pub fn decayed_lr(lr: f64, decay: f64, step: u64) -> f64 {
    lr / (1.0 + decay * step as f64)
}

/// One Adam update with bias correction. `step` counts from 0.
#[allow(clippy::too_many_arguments)]
pub fn adam_step<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    cfg: &AdamConfig,
    step: u64,
) {
    let t = (step + 1) as i32;
    let b1 = cfg.beta1;
    let b2 = cfg.beta2;
    let c1 = 1.0 - libm::pow(b1, t as f64);
    let c2 = 1.0 - libm::pow(b2, t as f64);
    let lr_t = T::of_f64(decayed_lr(cfg.lr, cfg.decay, step) * libm::sqrt(c2) / c1);
    let (b1t, b2t) = (T::of_f64(b1), T::of_f64(b2));
    let (one, eps) = (T::one(), T::of_f64(cfg.eps));
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1t * m[i] + (one - b1t) * g;
        v[i] = b2t * v[i] + (one - b2t) * g * g;
        param[i] -= lr_t * m[i] / (v[i].sqrt() + eps);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub lr: f64,
    pub decay: f64,
    pub momentum: f64,
    /// Rescale the global gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            lr: 0.01,
            decay: 1e-4,
            momentum: 0.0,
            clip_norm: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub decay: f64,
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
            decay: 0.0,
            clip_norm: None,
        }
    }
}

/// Stateful optimiser over every parameter a [`Module`] exposes.
pub trait Optimizer<T: Scalar> {
    /// Applies one update from the accumulated gradients. Returns the global
    /// gradient norm before clipping.
    fn step(&mut self, model: &mut dyn Module<T>) -> Result<f64, NnError>;
    fn steps_taken(&self) -> u64;
}

fn check_and_norm<T: Scalar>(model: &dyn Module<T>, step: u64) -> Result<f64, NnError> {
    let mut sq = 0.0f64;
    let mut bad: Option<String> = None;
    model.visit_params("", &mut |name, p: &Param<T>| {
        for &g in p.grad.data() {
            let g = g.as_f64();
            if !g.is_finite() && bad.is_none() {
                bad = Some(name.clone());
            }
            sq += g * g;
        }
    });
    if let Some(what) = bad {
        return Err(NnError::NonFinite {
            step,
            what: alloc::format!("gradient of {what}"),
        });
    }
    Ok(libm::sqrt(sq))
}

fn clip_scale(norm: f64, clip: Option<f64>) -> Option<f64> {
    match clip {
        Some(c) if norm > c && norm > 0.0 => Some(c / norm),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct Sgd<T = f32> {
    pub config: SgdConfig,
    velocity: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(config: SgdConfig) -> Self {
        Sgd {
            config,
            velocity: Vec::new(),
            step: 0,
        }
    }
}

impl<T: Scalar> Optimizer<T> for Sgd<T> {
    fn step(&mut self, model: &mut dyn Module<T>) -> Result<f64, NnError> {
        let norm = check_and_norm(model, self.step)?;
        let scale = clip_scale(norm, self.config.clip_norm).map(T::of_f64);
        let cfg = self.config;
        let step = self.step;
        let mu = T::of_f64(cfg.momentum);
        let lr_t = T::of_f64(decayed_lr(cfg.lr, cfg.decay, step));
        let velocity = &mut self.velocity;
        let mut idx = 0;
        model.visit_params_mut("", &mut |_, p| {
            let (value, grad) = (p.value.data_mut(), p.grad.data());
            if cfg.momentum == 0.0 && scale.is_none() {
                sgd_step(value, grad, cfg.lr, cfg.decay, step);
            } else {
                if velocity.len() <= idx {
                    velocity.push(alloc::vec![T::zero(); value.len()]);
                }
                let vel = &mut velocity[idx];
                for i in 0..value.len() {
                    let g = scale.map_or(grad[i], |s| grad[i] * s);
                    vel[i] = mu * vel[i] - lr_t * g;
                    value[i] += vel[i];
                }
            }
            idx += 1;
        });
        self.step += 1;
        Ok(norm)
    }

    fn steps_taken(&self) -> u64 {
        self.step
    }
}

#[derive(Clone, Debug)]
pub struct Adam<T = f32> {
    pub config: AdamConfig,
    moments: Vec<(Vec<T>, Vec<T>)>,
    step: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            moments: Vec::new(),
            step: 0,
        }
    }
}

impl<T: Scalar> Optimizer<T> for Adam<T> {
    fn step(&mut self, model: &mut dyn Module<T>) -> Result<f64, NnError> {
        let norm = check_and_norm(model, self.step)?;
        let scale = clip_scale(norm, self.config.clip_norm).map(T::of_f64);
        let cfg = self.config;
        let step = self.step;
        let moments = &mut self.moments;
        let mut idx = 0;
        let mut scaled = Vec::new();
        model.visit_params_mut("", &mut |_, p| {
            if moments.len() <= idx {
                let n = p.value.len();
                moments.push((alloc::vec![T::zero(); n], alloc::vec![T::zero(); n]));
            }
            let (m, v) = &mut moments[idx];
            let grad = match scale {
                Some(s) => {
                    scaled.clear();
                    scaled.extend(p.grad.data().iter().map(|&g| g * s));
                    &scaled[..]
                }
                None => p.grad.data(),
            };
            adam_step(p.value.data_mut(), grad, m, v, &cfg, step);
            idx += 1;
        });
        self.step += 1;
        Ok(norm)
    }

    fn steps_taken(&self) -> u64 {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = [1.0f32, -2.0];
        sgd_step(&mut p, &[0.0, 0.0], 0.01, 1e-4, 7);
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn single_scalar_step() {
        let mut p = [1.0f64];
        sgd_step(&mut p, &[1.0], 0.01, 0.0, 0);
        assert!((p[0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn decay_halves_rate_at_ten_thousand_steps() {
        assert!((decayed_lr(0.01, 1e-4, 10_000) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = [0.0f64];
        let (mut m, mut v) = ([0.0], [0.0]);
        let cfg = AdamConfig {
            eps: 0.0,
            ..AdamConfig::default()
        };
        adam_step(&mut p, &[3.0], &mut m, &mut v, &cfg, 0);
        assert!((p[0] + 1e-3).abs() < 1e-12);
    }
}
