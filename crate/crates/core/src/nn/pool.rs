use alloc::vec;
use alloc::vec::Vec;

use super::conv::out_geometry;
use super::{NnError, Padding, Scalar, Tensor};

/// Per-channel windowed max. Padded positions never win.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaxPool {
    pub kernel: usize,
    pub stride: usize,
    pub padding: Padding,
}

/// Flat input index of each output's winning element.
#[derive(Clone, Debug)]
pub struct PoolCache {
    argmax: Vec<usize>,
    in_shape: [usize; 4],
}

impl Default for MaxPool {
    fn default() -> Self {
        MaxPool {
            kernel: 3,
            stride: 2,
            padding: Padding::Same,
        }
    }
}

impl MaxPool {
    pub fn forward<T: Scalar>(&self, x: &Tensor<T>) -> Result<(Tensor<T>, PoolCache), NnError> {
        maxpool(x, self.kernel, self.stride, self.padding)
    }
}

pub fn maxpool<T: Scalar>(
    x: &Tensor<T>,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> Result<(Tensor<T>, PoolCache), NnError> {
    let (n, h, w, c) = x.dims4()?;
    if kernel == 0 || stride == 0 {
        return Err(NnError::invalid("maxpool", "kernel and stride must be positive"));
    }
    let (oh, pt) = out_geometry(h, kernel, stride, padding);
    let (ow, pl) = out_geometry(w, kernel, stride, padding);
    let data = x.data();
    let mut out = vec![T::zero(); n * oh * ow * c];
    let mut argmax = vec![0usize; n * oh * ow * c];
    for b in 0..n {
        for oy in 0..oh {
            let y0 = (oy * stride) as isize - pt as isize;
            let ys = y0.max(0) as usize..((y0 + kernel as isize).min(h as isize)) as usize;
            for ox in 0..ow {
                let x0 = (ox * stride) as isize - pl as isize;
                let xs = x0.max(0) as usize..((x0 + kernel as isize).min(w as isize)) as usize;
                let o = ((b * oh + oy) * ow + ox) * c;
                for ch in 0..c {
                    let mut best = T::neg_infinity();
                    let mut best_i = usize::MAX;
                    for iy in ys.clone() {
                        for ix in xs.clone() {
                            let i = ((b * h + iy) * w + ix) * c + ch;
                            // strict '>' keeps the first scanned maximum
                            if best_i == usize::MAX || data[i] > best {
                                best = data[i];
                                best_i = i;
                            }
                        }
                    }
                    out[o + ch] = best;
                    argmax[o + ch] = best_i;
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(&[n, oh, ow, c], out)?,
        PoolCache {
            argmax,
            in_shape: [n, h, w, c],
        },
    ))
}

pub fn maxpool_backward<T: Scalar>(cache: &PoolCache, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if dy.len() != cache.argmax.len() {
        return Err(NnError::shape("maxpool backward", dy.shape(), &[cache.argmax.len()]));
    }
    let mut dx = Tensor::zeros(&cache.in_shape);
    let d = dx.data_mut();
    for (&i, &g) in cache.argmax.iter().zip(dy.data()) {
        d[i] += g;
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_gives_constant_output() {
        let x = Tensor::<f32>::full(&[2, 6, 5, 3], 1.5);
        let (y, _) = MaxPool::default().forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 3, 3, 3]);
        assert!(y.data().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn height_sixteen_pools_to_four() {
        let x = Tensor::<f32>::zeros(&[1, 16, 8, 1]);
        let (y, _) = MaxPool::default().forward(&x).unwrap();
        assert_eq!(y.shape()[1], 8);
        let (z, _) = MaxPool::default().forward(&y).unwrap();
        assert_eq!(z.shape()[1], 4);
    }

    #[test]
    fn ties_route_gradient_to_first_position() {
        let x = Tensor::<f32>::full(&[1, 2, 2, 1], 1.0);
        let (_, cache) = maxpool(&x, 2, 2, Padding::Valid).unwrap();
        let dx = maxpool_backward(&cache, &Tensor::full(&[1, 1, 1, 1], 1.0)).unwrap();
        assert_eq!(dx.data(), &[1.0, 0.0, 0.0, 0.0]);
    }
}
