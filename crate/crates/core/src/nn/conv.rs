use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{join_name, matmul, Module, NnError, Param, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Output size `ceil(in / stride)`, zero padding split with the extra
    /// pixel at the bottom/right.
    Same,
    Valid,
}

/// Output length and leading pad for one spatial axis.
pub(crate) fn out_geometry(
    input: usize,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> (usize, usize) {
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let needed = ((out.max(1) - 1) * stride + kernel).saturating_sub(input);
            (out, needed / 2)
        }
        Padding::Valid => {
            if input < kernel {
                (0, 0)
            } else {
                ((input - kernel) / stride + 1, 0)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Geometry {
    n: usize,
    h: usize,
    w: usize,
    c: usize,
    oh: usize,
    ow: usize,
    pad_top: usize,
    pad_left: usize,
    k: usize,
    stride: usize,
}

impl Geometry {
    fn is_pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1 && self.pad_top == 0 && self.pad_left == 0
    }

    fn rows(&self) -> usize {
        self.n * self.oh * self.ow
    }

    fn cols(&self) -> usize {
        self.k * self.k * self.c
    }
}

fn im2col<T: Scalar>(x: &[T], g: &Geometry) -> Vec<T> {
    let cols = g.cols();
    let mut out = vec![T::zero(); g.rows() * cols];
    let kc = g.k * g.c;
    let mut row = 0;
    for n in 0..g.n {
        let img = &x[n * g.h * g.w * g.c..(n + 1) * g.h * g.w * g.c];
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let dst = &mut out[row * cols..(row + 1) * cols];
                for ky in 0..g.k {
                    let iy = (oy * g.stride + ky) as isize - g.pad_top as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let iy = iy as usize;
                    for kx in 0..g.k {
                        let ix = (ox * g.stride + kx) as isize - g.pad_left as isize;
                        if ix < 0 || ix >= g.w as isize {
                            continue;
                        }
                        let src = (iy * g.w + ix as usize) * g.c;
                        let d = ky * kc + kx * g.c;
                        dst[d..d + g.c].copy_from_slice(&img[src..src + g.c]);
                    }
                }
                row += 1;
            }
        }
    }
    out
}

fn col2im<T: Scalar>(cols_data: &[T], g: &Geometry) -> Vec<T> {
    let mut dx = vec![T::zero(); g.n * g.h * g.w * g.c];
    let cols = g.cols();
    let kc = g.k * g.c;
    let mut row = 0;
    for n in 0..g.n {
        let img = &mut dx[n * g.h * g.w * g.c..(n + 1) * g.h * g.w * g.c];
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let src = &cols_data[row * cols..(row + 1) * cols];
                for ky in 0..g.k {
                    let iy = (oy * g.stride + ky) as isize - g.pad_top as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let iy = iy as usize;
                    for kx in 0..g.k {
                        let ix = (ox * g.stride + kx) as isize - g.pad_left as isize;
                        if ix < 0 || ix >= g.w as isize {
                            continue;
                        }
                        let dst = (iy * g.w + ix as usize) * g.c;
                        let s = ky * kc + kx * g.c;
                        for (d, &v) in img[dst..dst + g.c].iter_mut().zip(&src[s..s + g.c]) {
                            *d += v;
                        }
                    }
                }
                row += 1;
            }
        }
    }
    dx
}

/// Square-kernel 2-D cross-correlation over NHWC input.
///
/// Weights are laid out `[k, k, c_in, c_out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T = f32> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub kernel: usize,
    pub stride: usize,
    pub padding: Padding,
}

/// Saved forward state needed by [`Conv2d::backward`].
#[derive(Clone, Debug)]
pub struct ConvCache<T> {
    cols: Vec<T>,
    geometry: Geometry,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    ) -> Self {
        Conv2d {
            weight: Param::new(Tensor::zeros(&[kernel, kernel, c_in, c_out])),
            bias: Param::new(Tensor::zeros(&[c_out])),
            kernel,
            stride,
            padding,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[3]
    }

    fn geometry(&self, x: &Tensor<T>) -> Result<Geometry, NnError> {
        let (n, h, w, c) = x.dims4()?;
        if c != self.in_channels() {
            return Err(NnError::shape("conv2d", x.shape(), self.weight.value.shape()));
        }
        if self.stride == 0 || self.kernel == 0 {
            return Err(NnError::invalid("conv2d", "kernel and stride must be positive"));
        }
        let (oh, pad_top) = out_geometry(h, self.kernel, self.stride, self.padding);
        let (ow, pad_left) = out_geometry(w, self.kernel, self.stride, self.padding);
        Ok(Geometry {
            n,
            h,
            w,
            c,
            oh,
            ow,
            pad_top,
            pad_left,
            k: self.kernel,
            stride: self.stride,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ConvCache<T>), NnError> {
        let g = self.geometry(x)?;
        let cols = if g.is_pointwise() {
            x.data().to_vec()
        } else {
            im2col(x.data(), &g)
        };
        let y = self.apply(&cols, &g)?;
        Ok((y, ConvCache { cols, geometry: g }))
    }

    /// Forward pass without keeping the im2col buffer around.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let g = self.geometry(x)?;
        if g.is_pointwise() {
            self.apply(x.data(), &g)
        } else {
            self.apply(&im2col(x.data(), &g), &g)
        }
    }

    fn apply(&self, cols: &[T], g: &Geometry) -> Result<Tensor<T>, NnError> {
        let c_out = self.out_channels();
        let rows = g.rows();
        let mut out = Vec::with_capacity(rows * c_out);
        let bias = self.bias.value.data();
        for _ in 0..rows {
            out.extend_from_slice(bias);
        }
        matmul(
            cols,
            false,
            self.weight.value.data(),
            false,
            &mut out,
            rows,
            g.cols(),
            c_out,
            T::one(),
        );
        Tensor::from_vec(&[g.n, g.oh, g.ow, c_out], out)
    }

    /// Accumulates parameter gradients and returns the input gradient when
    /// `need_input_grad` is set.
    pub fn backward(
        &mut self,
        cache: &ConvCache<T>,
        dy: &Tensor<T>,
        need_input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        let g = cache.geometry;
        let c_out = self.out_channels();
        let rows = g.rows();
        if dy.shape() != [g.n, g.oh, g.ow, c_out] {
            return Err(NnError::shape(
                "conv2d backward",
                dy.shape(),
                &[g.n, g.oh, g.ow, c_out],
            ));
        }
        let k = g.cols();
        matmul(
            &cache.cols,
            true,
            dy.data(),
            false,
            self.weight.grad.data_mut(),
            k,
            rows,
            c_out,
            T::one(),
        );
        let db = self.bias.grad.data_mut();
        for r in dy.data().chunks_exact(c_out) {
            for (b, &v) in db.iter_mut().zip(r) {
                *b += v;
            }
        }
        if !need_input_grad {
            return Ok(None);
        }
        let mut dcols = vec![T::zero(); rows * k];
        matmul(
            dy.data(),
            false,
            self.weight.value.data(),
            true,
            &mut dcols,
            rows,
            c_out,
            k,
            T::zero(),
        );
        let dx = if g.is_pointwise() {
            dcols
        } else {
            col2im(&dcols, &g)
        };
        Tensor::from_vec(&[g.n, g.h, g.w, g.c], dx).map(Some)
    }

    pub fn cast<U: Scalar>(&self) -> Conv2d<U> {
        Conv2d {
            weight: self.weight.cast(),
            bias: self.bias.cast(),
            kernel: self.kernel,
            stride: self.stride,
            padding: self.padding,
        }
    }
}

impl<T: Scalar> Module<T> for Conv2d<T> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(String, &Param<T>)) {
        f(join_name(prefix, "weight"), &self.weight);
        f(join_name(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param<T>)) {
        f(join_name(prefix, "weight"), &mut self.weight);
        f(join_name(prefix, "bias"), &mut self.bias);
    }
}

/// Functional convolution: `weights` is `[k, k, c_in, c_out]`, `bias` is
/// `[c_out]`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<Tensor<T>, NnError> {
    let ws = weights.shape();
    if ws.len() != 4 || ws[0] != ws[1] || bias.shape() != [ws[3]] {
        return Err(NnError::shape("conv2d", ws, bias.shape()));
    }
    let layer = Conv2d {
        weight: Param::new(weights.clone()),
        bias: Param::new(bias.clone()),
        kernel: ws[0],
        stride,
        padding,
    };
    layer.infer(input)
}
