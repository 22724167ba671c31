//! Central finite-difference gradient verification in `f64`.
//!
//! Each `check_*` function builds one random instance of an operation,
//! contracts its output with a random tensor `r` (so the scalar objective is
//! `Σ r·y`), and compares the analytic gradient of every input and parameter
//! with `(f(x+ε) − f(x−ε)) / 2ε`. The returned value is the worst relative
//! error `|a − n| / max(|a|, |n|)` (pairs with both magnitudes below
//! [`NEGLIGIBLE`] count as exact).


use alloc::vec::Vec;

use rand::Rng;

use super::act::relu_inplace;
use super::{
    channel_concat, channel_split, dense, dropout, dropout_backward, maxpool, maxpool_backward,
    relu, relu_backward, softmax, softmax_backward, Conv2d, Dense, Fire, Module, NnError,
    Padding, Tensor,
};

/// Step used for central differences.
pub const EPS: f64 = 1e-4;
/// Gradient magnitudes below this are treated as zero.
pub const NEGLIGIBLE: f64 = 1e-9;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < NEGLIGIBLE {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Worst relative error between `analytic` and the central difference of
/// `f` at `x`, over every coordinate.
pub fn compare(x: &mut [f64], analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + EPS;
        let hi = f(x);
        x[i] = orig - EPS;
        let lo = f(x);
        x[i] = orig;
        worst = worst.max(relative_error(analytic[i], (hi - lo) / (2.0 * EPS)));
    }
    worst
}

fn random_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Values kept at least `gap` away from zero so ReLU kinks stay outside the
/// finite-difference stencil.
fn away_from_zero<R: Rng + ?Sized>(rng: &mut R, n: usize, gap: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.gen_range(gap..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor<f64> {
    Tensor::from_vec(shape, data).expect("shape matches data")
}

/// Compares input and parameter gradients of any [`Module`] whose forward
/// is `run` and whose backward (for upstream `r`) is `back`.
fn check_module<M: Module<f64> + Clone>(
    layer: &mut M,
    x: &Tensor<f64>,
    run: impl Fn(&M, &Tensor<f64>) -> Result<Tensor<f64>, NnError>,
    back: impl Fn(&mut M, &Tensor<f64>, &Tensor<f64>) -> Result<Tensor<f64>, NnError>,
    rng: &mut impl Rng,
) -> Result<f64, NnError> {
    let y = run(layer, x)?;
    let r = tensor(y.shape(), random_vec(rng, y.len()));
    layer.zero_grad();
    let dx = back(layer, x, &r)?;
    let mut worst = 0.0f64;

    let shape = x.shape().to_vec();
    let mut xs = x.data().to_vec();
    worst = worst.max(compare(&mut xs, dx.data(), |v| {
        dot(run(layer, &tensor(&shape, v.to_vec())).unwrap().data(), r.data())
    }));

    let mut grads = Vec::new();
    layer.visit_params("", &mut |name, p| grads.push((name, p.grad.data().to_vec())));
    for (name, g) in grads {
        let mut values = Vec::new();
        layer.visit_params("", &mut |n, p| {
            if n == name {
                values = p.value.data().to_vec();
            }
        });
        let mut probe = layer.clone();
        worst = worst.max(compare(&mut values, &g, |v| {
            probe.visit_params_mut("", &mut |n, p| {
                if n == name {
                    p.value.data_mut().copy_from_slice(v);
                }
            });
            dot(run(&probe, x).unwrap().data(), r.data())
        }));
    }
    Ok(worst)
}

fn random_image<R: Rng + ?Sized>(rng: &mut R, max_side: usize, max_c: usize) -> Tensor<f64> {
    let n = rng.gen_range(1..=2);
    let h = rng.gen_range(1..=max_side);
    let w = rng.gen_range(1..=max_side);
    let c = rng.gen_range(1..=max_c);
    tensor(&[n, h, w, c], random_vec(rng, n * h * w * c))
}

pub fn check_conv2d<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    let kernel = [1, 2, 3][rng.gen_range(0..3)];
    let stride = rng.gen_range(1..=2);
    let padding = if rng.gen_bool(0.5) { Padding::Same } else { Padding::Valid };
    let mut x = random_image(rng, 7, 4);
    if padding == Padding::Valid {
        // make sure at least one output position exists
        let (n, h, w, c) = x.dims4()?;
        let (h, w) = (h.max(kernel), w.max(kernel));
        x = tensor(&[n, h, w, c], random_vec(rng, n * h * w * c));
    }
    let c_out = rng.gen_range(1..=4);
    let mut layer = Conv2d::<f64>::new(x.shape()[3], c_out, kernel, stride, padding);
    for p in [&mut layer.weight, &mut layer.bias] {
        let v = random_vec(rng, p.value.len());
        p.value.data_mut().copy_from_slice(&v);
    }
    check_module(
        &mut layer,
        &x,
        |l, x| l.infer(x),
        |l, x, r| {
            let (_, cache) = l.forward(x)?;
            Ok(l.backward(&cache, r, true)?.expect("input grad"))
        },
        rng,
    )
}

pub fn check_dense<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    let n = rng.gen_range(1..=4);
    let i = rng.gen_range(1..=8);
    let o = rng.gen_range(1..=8);
    let x = tensor(&[n, i], random_vec(rng, n * i));
    let mut layer = Dense::<f64>::new(i, o);
    for p in [&mut layer.weight, &mut layer.bias] {
        let v = random_vec(rng, p.value.len());
        p.value.data_mut().copy_from_slice(&v);
    }
    let check = check_module(
        &mut layer,
        &x,
        |l, x| l.infer(x),
        |l, x, r| {
            let (_, cache) = l.forward(x)?;
            l.backward(&cache, r)
        },
        rng,
    )?;
    // the functional form must agree with the layer
    let y = dense(&x, &layer.weight.value, &layer.bias.value)?;
    if y != layer.infer(&x)? {
        return Err(NnError::invalid("gradcheck", "dense() disagrees with Dense::infer"));
    }
    Ok(check)
}

pub fn check_fire<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    // Resample until every internal pre-activation sits clear of the ReLU kink.
    let (mut layer, x) = loop {
        let n = rng.gen_range(1..=2);
        let h = rng.gen_range(1..=5);
        let w = rng.gen_range(1..=5);
        let c = rng.gen_range(1..=4);
        let x = tensor(&[n, h, w, c], random_vec(rng, n * h * w * c));
        let mut layer =
            Fire::<f64>::new(c, rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
        layer.visit_params_mut("", &mut |_, p| {
            for v in p.value.data_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        });
        if fire_margin(&layer, &x)? > KINK_MARGIN {
            break (layer, x);
        }
    };
    check_module(
        &mut layer,
        &x,
        |l, x| l.infer(x),
        |l, x, r| {
            let (_, cache) = l.forward(x)?;
            Ok(l.backward(&cache, r, true)?.expect("input grad"))
        },
        rng,
    )
}

const KINK_MARGIN: f64 = 1e-2;

fn fire_margin(layer: &Fire<f64>, x: &Tensor<f64>) -> Result<f64, NnError> {
    let s = layer.squeeze.infer(x)?;
    let mut a = s.clone();
    relu_inplace(&mut a);
    let e1 = layer.expand1.infer(&a)?;
    let e3 = layer.expand3.infer(&a)?;
    Ok(s.data()
        .iter()
        .chain(e1.data())
        .chain(e3.data())
        .fold(f64::INFINITY, |m, v| m.min(v.abs())))
}

/// Elementwise or parameter-free op: `y = f(x)`, `dx = b(x, y, r)`.
fn check_unary(
    x: &Tensor<f64>,
    f: impl Fn(&Tensor<f64>) -> Result<Tensor<f64>, NnError>,
    b: impl Fn(&Tensor<f64>, &Tensor<f64>, &Tensor<f64>) -> Result<Tensor<f64>, NnError>,
    rng: &mut impl Rng,
) -> Result<f64, NnError> {
    let y = f(x)?;
    let r = tensor(y.shape(), random_vec(rng, y.len()));
    let dx = b(x, &y, &r)?;
    let shape = x.shape().to_vec();
    let mut xs = x.data().to_vec();
    Ok(compare(&mut xs, dx.data(), |v| {
        dot(f(&tensor(&shape, v.to_vec())).unwrap().data(), r.data())
    }))
}

pub fn check_relu<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    let n = rng.gen_range(1..=3);
    let d = rng.gen_range(1..=10);
    let x = tensor(&[n, d], away_from_zero(rng, n * d, 10.0 * EPS));
    check_unary(&x, |x| Ok(relu(x)), |_, y, r| Ok(relu_backward(y, r)), rng)
}

pub fn check_softmax<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    let n = rng.gen_range(1..=3);
    let d = rng.gen_range(1..=10);
    let x = tensor(&[n, d], random_vec(rng, n * d).into_iter().map(|v| 3.0 * v).collect());
    check_unary(&x, |x| Ok(softmax(x)), |_, y, r| Ok(softmax_backward(y, r)), rng)
}

pub fn check_maxpool<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    let kernel = rng.gen_range(2..=3);
    let stride = rng.gen_range(1..=2);
    let padding = if rng.gen_bool(0.5) { Padding::Same } else { Padding::Valid };
    let (n, c) = (rng.gen_range(1..=2), rng.gen_range(1..=3));
    let h = rng.gen_range(kernel..=7);
    let w = rng.gen_range(kernel..=7);
    // distinct values spaced well beyond the stencil so no window has a tie
    let mut vals: Vec<f64> = (0..n * h * w * c).map(|i| i as f64 * 0.01).collect();
    for i in (1..vals.len()).rev() {
        let j = rng.gen_range(0..=i);
        vals.swap(i, j);
    }
    let x = tensor(&[n, h, w, c], vals);
    check_unary(
        &x,
        |x| Ok(maxpool(x, kernel, stride, padding)?.0),
        |x, _, r| {
            let (_, cache) = maxpool(x, kernel, stride, padding)?;
            maxpool_backward(&cache, r)
        },
        rng,
    )
}

pub fn check_dropout<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    use rand::SeedableRng;
    let x = random_image(rng, 5, 4);
    let rate = rng.gen_range(0.1..0.9);
    let seed: u64 = rng.gen();
    // the same seed reproduces the same mask on every evaluation
    let run = move |x: &Tensor<f64>| {
        let mut mask_rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        dropout(x, rate, &mut mask_rng, true)
    };
    check_unary(
        &x,
        |x| Ok(run(x)?.0),
        |x, _, r| {
            let (_, mask) = run(x)?;
            Ok(dropout_backward(mask.as_ref(), r))
        },
        rng,
    )
}

pub fn check_concat<R: Rng>(rng: &mut R) -> Result<f64, NnError> {
    let a = random_image(rng, 4, 3);
    let (n, h, w, _) = a.dims4()?;
    let cb = rng.gen_range(1..=3);
    let b = tensor(&[n, h, w, cb], random_vec(rng, n * h * w * cb));
    let ca = a.shape()[3];
    // treat (a, b) as one input by splitting a joint tensor
    let joint = channel_concat(&a, &b)?;
    check_unary(
        &joint,
        |j| {
            let (a, b) = channel_split(j, ca)?;
            channel_concat(&b, &a)
        },
        |_, _, r| {
            let (db, da) = channel_split(r, cb)?;
            channel_concat(&da, &db)
        },
        rng,
    )
}

/// Named operation checks, in a fixed order.
pub type CheckFn = fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64, NnError>;

pub const LAYER_CHECKS: [(&str, CheckFn); 8] = [
    ("conv2d", check_conv2d),
    ("dense", check_dense),
    ("fire", check_fire),
    ("relu", check_relu),
    ("softmax", check_softmax),
    ("maxpool", check_maxpool),
    ("dropout", check_dropout),
    ("channel_concat", check_concat),
];

/// Runs `cases` random instances of `check` and keeps the worst error.
pub fn worst_of(check: CheckFn, cases: usize, seed: u64) -> Result<f64, NnError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        worst = worst.max(check(&mut rng)?);
    }
    Ok(worst)
}

