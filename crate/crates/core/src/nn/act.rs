use alloc::vec::Vec;

use rand::Rng;

use super::{NnError, Scalar, Tensor};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient of ReLU given its forward *output*.
pub fn relu_backward<T: Scalar>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
    dx
}

pub(crate) fn relu_inplace<T: Scalar>(x: &mut Tensor<T>) {
    for v in x.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

pub(crate) fn relu_mask_inplace<T: Scalar>(y: &[T], dy: &mut [T]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
}

/// Softmax along the last axis with max subtraction.
pub fn softmax<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let c = *x.shape().last().unwrap_or(&1);
    let mut y = x.clone();
    if c == 0 {
        return y;
    }
    for row in y.data_mut().chunks_exact_mut(c) {
        softmax_row(row);
    }
    y
}

pub(crate) fn softmax_row<T: Scalar>(row: &mut [T]) {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// Gradient of softmax given its forward output.
pub fn softmax_backward<T: Scalar>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let c = *y.shape().last().unwrap_or(&1);
    let mut dx = dy.clone();
    if c == 0 {
        return dx;
    }
    for (d, yr) in dx.data_mut().chunks_exact_mut(c).zip(y.data().chunks_exact(c)) {
        let dot: T = d.iter().zip(yr).map(|(&a, &b)| a * b).sum();
        for (g, &p) in d.iter_mut().zip(yr) {
            *g = p * (*g - dot);
        }
    }
    dx
}

/// Per-element keep scale: `0` for dropped units, `1/(1-rate)` for kept.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask<T> {
    scale: Vec<T>,
}

/// Inverted dropout. Identity (and no mask) outside training.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(
    x: &Tensor<T>,
    rate: f64,
    rng: &mut R,
    train: bool,
) -> Result<(Tensor<T>, Option<DropoutMask<T>>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::invalid("dropout", "rate must lie in [0, 1)"));
    }
    if !train || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = T::of_f64(1.0 / (1.0 - rate));
    let scale: Vec<T> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    let mut y = x.clone();
    for (v, &s) in y.data_mut().iter_mut().zip(&scale) {
        *v *= s;
    }
    Ok((y, Some(DropoutMask { scale })))
}

pub fn dropout_backward<T: Scalar>(mask: Option<&DropoutMask<T>>, dy: &Tensor<T>) -> Tensor<T> {
    let mut dx = dy.clone();
    if let Some(m) = mask {
        for (d, &s) in dx.data_mut().iter_mut().zip(&m.scale) {
            *d *= s;
        }
    }
    dx
}

/// Concatenates two NHWC tensors along channels.
pub fn channel_concat<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (n, h, w, ca) = a.dims4()?;
    let (nb, hb, wb, cb) = b.dims4()?;
    if (n, h, w) != (nb, hb, wb) {
        return Err(NnError::shape("channel_concat", a.shape(), b.shape()));
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    if ca + cb > 0 {
        for i in 0..n * h * w {
            out.extend_from_slice(&a.data()[i * ca..(i + 1) * ca]);
            out.extend_from_slice(&b.data()[i * cb..(i + 1) * cb]);
        }
    }
    Tensor::from_vec(&[n, h, w, ca + cb], out)
}

/// Inverse of [`channel_concat`]: splits the first `ca` channels off.
pub fn channel_split<T: Scalar>(
    x: &Tensor<T>,
    ca: usize,
) -> Result<(Tensor<T>, Tensor<T>), NnError> {
    let (n, h, w, c) = x.dims4()?;
    if ca > c {
        return Err(NnError::invalid("channel_split", "split point beyond channel count"));
    }
    let cb = c - ca;
    let mut a = Vec::with_capacity(n * h * w * ca);
    let mut b = Vec::with_capacity(n * h * w * cb);
    for px in x.data().chunks_exact(c.max(1)) {
        a.extend_from_slice(&px[..ca]);
        b.extend_from_slice(&px[ca..]);
    }
    Ok((
        Tensor::from_vec(&[n, h, w, ca], a)?,
        Tensor::from_vec(&[n, h, w, cb], b)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let y = softmax(&Tensor::<f64>::full(&[1, 13], 0.7));
        for &p in y.data() {
            assert!((p - 1.0 / 13.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_survives_extreme_logits() {
        let x = Tensor::<f32>::from_vec(&[1, 3], alloc::vec![1e4, -1e4, 0.0]).unwrap();
        let y = softmax(&x);
        assert!(y.is_finite());
        assert!((y.sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dropout_zero_rate_and_inference_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f32>::from_vec(&[1, 4], alloc::vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap().0, x);
        assert_eq!(dropout(&x, 0.5, &mut rng, false).unwrap().0, x);
        assert!(dropout(&x, 1.0, &mut rng, true).is_err());
    }

    #[test]
    fn dropout_scales_survivors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor::<f32>::full(&[1, 1000], 1.0);
        let (y, _) = dropout(&x, 0.5, &mut rng, true).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = y.data().iter().filter(|&&v| v > 0.0).count();
        assert!((400..600).contains(&kept));
    }

    #[test]
    fn concat_rejects_spatial_mismatch() {
        let a = Tensor::<f32>::zeros(&[1, 8, 8, 2]);
        let b = Tensor::<f32>::zeros(&[1, 4, 4, 2]);
        assert!(matches!(channel_concat(&a, &b), Err(NnError::ShapeMismatch { .. })));
    }

    #[test]
    fn concat_then_split_round_trips() {
        let a = Tensor::<f32>::from_vec(&[1, 1, 2, 1], alloc::vec![1.0, 2.0]).unwrap();
        let b = Tensor::<f32>::from_vec(&[1, 1, 2, 2], alloc::vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = channel_concat(&a, &b).unwrap();
        assert_eq!(c.data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let (a2, b2) = channel_split(&c, 1).unwrap();
        assert_eq!((a2, b2), (a, b));
    }
}
