//! Layer kernels with their hand-written backward passes.
//!
//! Convolutions use im2col per batch item and a matrix product; items are
//! processed in parallel but every reduction over the batch runs in item
//! order, so results do not depend on the thread count.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};
use rayon::prelude::*;

use super::{NnError, Tensor};

/// Probability floor inside the log of the cross-entropy.
pub const LOG_FLOOR: f64 = 1e-12;

fn im2col(item: &[f64], h: usize, w: usize, c: usize, k: usize, cols: &mut [f64]) {
    let pad = k / 2;
    let width = k * k * c;
    cols.fill(0.0);
    for y in 0..h {
        for x in 0..w {
            let row = &mut cols[(y * w + x) * width..(y * w + x + 1) * width];
            for dy in 0..k {
                let sy = y + dy;
                if sy < pad || sy - pad >= h {
                    continue;
                }
                for dx in 0..k {
                    let sx = x + dx;
                    if sx < pad || sx - pad >= w {
                        continue;
                    }
                    let src = ((sy - pad) * w + (sx - pad)) * c;
                    let dst = (dy * k + dx) * c;
                    row[dst..dst + c].copy_from_slice(&item[src..src + c]);
                }
            }
        }
    }
}

fn col2im_add(cols: &[f64], h: usize, w: usize, c: usize, k: usize, item: &mut [f64]) {
    let pad = k / 2;
    let width = k * k * c;
    for y in 0..h {
        for x in 0..w {
            let row = &cols[(y * w + x) * width..(y * w + x + 1) * width];
            for dy in 0..k {
                let sy = y + dy;
                if sy < pad || sy - pad >= h {
                    continue;
                }
                for dx in 0..k {
                    let sx = x + dx;
                    if sx < pad || sx - pad >= w {
                        continue;
                    }
                    let dst = ((sy - pad) * w + (sx - pad)) * c;
                    let src = (dy * k + dx) * c;
                    for ch in 0..c {
                        item[dst + ch] += row[src + ch];
                    }
                }
            }
        }
    }
}

fn conv_dims(input: &Tensor, filters: &Tensor, bias: &[f64]) -> Result<(usize, usize, usize, usize, usize, usize), NnError> {
    let (n, h, w, c) = input.image_dims()?;
    let (k, k2, cin, cout) = match filters.shape()[..] {
        [a, b, ci, co] => (a, b, ci, co),
        _ => return Err(NnError::Shape(format!("filters must be [k, k, cin, cout], got {:?}", filters.shape()))),
    };
    if k != k2 || k % 2 == 0 {
        return Err(NnError::Shape(format!("filters must be square with odd size, got {k}x{k2}")));
    }
    if cin != c {
        return Err(NnError::ChannelMismatch { input: c, filters: cin });
    }
    if bias.len() != cout {
        return Err(NnError::Shape(format!("{} biases for {cout} filters", bias.len())));
    }
    Ok((n, h, w, c, k, cout))
}

/// Same-padded (zero) stride-1 convolution, NHWC.
pub fn conv2d(input: &Tensor, filters: &Tensor, bias: &[f64]) -> Result<Tensor, NnError> {
    let (n, h, w, c, k, cout) = conv_dims(input, filters, bias)?;
    let width = k * k * c;
    let wmat = ArrayView2::from_shape((width, cout), filters.data()).expect("filter layout");
    let mut out = vec![0.0; n * h * w * cout];
    out.par_chunks_mut(h * w * cout)
        .zip(input.data().par_chunks(h * w * c))
        .for_each_init(
            || vec![0.0; h * w * width],
            |cols, (o, item)| {
                im2col(item, h, w, c, k, cols);
                let a = ArrayView2::from_shape((h * w, width), &cols[..]).expect("cols layout");
                let mut y = ArrayViewMut2::from_shape((h * w, cout), o).expect("out layout");
                general_mat_mul(1.0, &a, &wmat, 0.0, &mut y);
                for px in o.chunks_mut(cout) {
                    for (v, b) in px.iter_mut().zip(bias) {
                        *v += b;
                    }
                }
            },
        );
    Tensor::new(&[n, h, w, cout], out)
}

pub struct ConvGrads {
    pub input: Tensor,
    pub filters: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn conv2d_backward(input: &Tensor, filters: &Tensor, grad_out: &Tensor) -> Result<ConvGrads, NnError> {
    let cout = *filters.shape().last().unwrap();
    let (n, h, w, c, k, _) = conv_dims(input, filters, &vec![0.0; cout])?;
    if grad_out.shape() != [n, h, w, cout] {
        return Err(NnError::Shape(format!("grad_out {:?} for conv output", grad_out.shape())));
    }
    let width = k * k * c;
    let wmat = ArrayView2::from_shape((width, cout), filters.data()).expect("filter layout");
    let per_item: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = input
        .data()
        .par_chunks(h * w * c)
        .zip(grad_out.data().par_chunks(h * w * cout))
        .map_init(
            || (vec![0.0; h * w * width], vec![0.0; h * w * width]),
            |(cols, dcols), (item, g)| {
                im2col(item, h, w, c, k, cols);
                let a = ArrayView2::from_shape((h * w, width), &cols[..]).expect("cols layout");
                let gy = ArrayView2::from_shape((h * w, cout), g).expect("grad layout");
                let mut dw = vec![0.0; width * cout];
                {
                    let mut dwm = ArrayViewMut2::from_shape((width, cout), &mut dw[..]).expect("dw layout");
                    general_mat_mul(1.0, &a.t(), &gy, 0.0, &mut dwm);
                }
                {
                    let mut dc = ArrayViewMut2::from_shape((h * w, width), &mut dcols[..]).expect("dcols layout");
                    general_mat_mul(1.0, &gy, &wmat.t(), 0.0, &mut dc);
                }
                let mut dx = vec![0.0; h * w * c];
                col2im_add(dcols, h, w, c, k, &mut dx);
                let mut db = vec![0.0; cout];
                for px in g.chunks(cout) {
                    for (d, v) in db.iter_mut().zip(px) {
                        *d += v;
                    }
                }
                (dx, dw, db)
            },
        )
        .collect();

    let mut dx = Vec::with_capacity(input.len());
    let mut dw = vec![0.0; width * cout];
    let mut db = vec![0.0; cout];
    for (x, wgt, b) in per_item {
        dx.extend_from_slice(&x);
        dw.iter_mut().zip(&wgt).for_each(|(a, v)| *a += v);
        db.iter_mut().zip(&b).for_each(|(a, v)| *a += v);
    }
    Ok(ConvGrads {
        input: Tensor::new(input.shape(), dx)?,
        filters: dw,
        bias: db,
    })
}

/// 2x2 stride-2 max pooling; an odd trailing row/column is dropped. Returns
/// the output and, per output value, the flat input index it came from (the
/// first maximum in window order on ties).
pub fn maxpool2(input: &Tensor) -> Result<(Tensor, Vec<usize>), NnError> {
    let (n, h, w, c) = input.image_dims()?;
    if h < 2 || w < 2 {
        return Err(NnError::Shape(format!("pooling needs at least 2x2, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut arg = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for y in 0..oh {
            for xx in 0..ow {
                for ch in 0..c {
                    let mut best_idx = ((b * h + 2 * y) * w + 2 * xx) * c + ch;
                    let mut best = x[best_idx];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = ((b * h + 2 * y + dy) * w + 2 * xx + dx) * c + ch;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                    out.push(best);
                    arg.push(best_idx);
                }
            }
        }
    }
    Ok((Tensor::new(&[n, oh, ow, c], out)?, arg))
}

pub fn maxpool2_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        d[i] += g;
    }
    dx
}

/// Affine map on flattened items: `[n, in] x [in, out] + bias`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &[f64]) -> Result<Tensor, NnError> {
    let (n, inputs) = (input.batch(), input.item_len());
    let (rows, units) = match weights.shape()[..] {
        [r, u] => (r, u),
        _ => return Err(NnError::Shape(format!("weights must be 2-d, got {:?}", weights.shape()))),
    };
    if rows != inputs || bias.len() != units {
        return Err(NnError::Shape(format!(
            "dense {rows}x{units} (bias {}) applied to {inputs} inputs",
            bias.len()
        )));
    }
    let x = ArrayView2::from_shape((n, inputs), input.data()).expect("input layout");
    let wm = ArrayView2::from_shape((rows, units), weights.data()).expect("weight layout");
    let mut out = vec![0.0; n * units];
    for row in out.chunks_mut(units) {
        row.copy_from_slice(bias);
    }
    {
        let mut y = ArrayViewMut2::from_shape((n, units), &mut out[..]).expect("out layout");
        general_mat_mul(1.0, &x, &wm, 1.0, &mut y);
    }
    Tensor::new(&[n, units], out)
}

pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<DenseGrads, NnError> {
    let (n, inputs) = (input.batch(), input.item_len());
    let units = weights.shape()[1];
    if grad_out.shape() != [n, units] {
        return Err(NnError::Shape(format!("grad_out {:?} for dense output", grad_out.shape())));
    }
    let x = ArrayView2::from_shape((n, inputs), input.data()).expect("input layout");
    let wm = ArrayView2::from_shape((inputs, units), weights.data()).expect("weight layout");
    let g = ArrayView2::from_shape((n, units), grad_out.data()).expect("grad layout");
    let mut dw = vec![0.0; inputs * units];
    general_mat_mul(
        1.0,
        &x.t(),
        &g,
        0.0,
        &mut ArrayViewMut2::from_shape((inputs, units), &mut dw[..]).expect("dw layout"),
    );
    let mut dx = vec![0.0; n * inputs];
    general_mat_mul(
        1.0,
        &g,
        &wm.t(),
        0.0,
        &mut ArrayViewMut2::from_shape((n, inputs), &mut dx[..]).expect("dx layout"),
    );
    let mut db = vec![0.0; units];
    for row in grad_out.data().chunks(units) {
        db.iter_mut().zip(row).for_each(|(d, v)| *d += v);
    }
    Ok(DenseGrads {
        input: Tensor::new(input.shape(), dx)?,
        weights: dw,
        bias: db,
    })
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(input.shape(), data).expect("same shape")
}

/// Gradient through ReLU given its input; zero where the input is <= 0.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape(), data).expect("same shape")
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub struct SoftmaxLoss {
    pub loss: f64,
    pub probabilities: Vec<f64>,
    /// `probabilities - onehot`
    pub logit_gradient: Vec<f64>,
}

/// Softmax followed by cross-entropy against a one-hot label.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<SoftmaxLoss, NnError> {
    if logits.len() < 2 || label >= logits.len() {
        return Err(NnError::Label {
            label,
            classes: logits.len(),
        });
    }
    let probabilities = softmax(logits);
    let loss = -probabilities[label].max(LOG_FLOOR).ln();
    let mut logit_gradient = probabilities.clone();
    logit_gradient[label] -= 1.0;
    Ok(SoftmaxLoss {
        loss,
        probabilities,
        logit_gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Central differences of a scalar function of a vector, at every index.
    fn numeric_grad(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let h = 1e-4;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                p[i] += h;
                let up = f(&p);
                p[i] -= 2.0 * h;
                (up - f(&p)) / (2.0 * h)
            })
            .collect()
    }

    fn max_rel(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-7))
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_filter() {
        let x = random(&[2, 4, 3, 1], 1);
        let f = Tensor::new(&[1, 1, 1, 1], vec![1.0]).unwrap();
        assert_eq!(conv2d(&x, &f, &[0.0]).unwrap(), x);
    }

    #[test]
    fn ones_filter_counts_neighbours() {
        let x = Tensor::new(&[1, 5, 5, 1], vec![1.0; 25]).unwrap();
        let f = Tensor::new(&[3, 3, 1, 1], vec![1.0; 9]).unwrap();
        let y = conv2d(&x, &f, &[0.0]).unwrap();
        let at = |r: usize, c: usize| y.data()[r * 5 + c];
        assert_eq!(at(2, 2), 9.0);
        assert_eq!(at(1, 3), 9.0);
        assert_eq!(at(0, 0), 4.0);
        assert_eq!(at(4, 4), 4.0);
        assert_eq!(at(0, 2), 6.0);
    }

    #[test]
    fn conv_channel_mismatch() {
        let x = random(&[1, 4, 4, 2], 2);
        let f = random(&[3, 3, 3, 1], 3);
        assert_eq!(
            conv2d(&x, &f, &[0.0]).unwrap_err(),
            NnError::ChannelMismatch { input: 2, filters: 3 }
        );
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let x = random(&[1, 6, 6, 2], 4);
        let f = random(&[3, 3, 2, 3], 5);
        let b = vec![0.1, -0.2, 0.3];
        let g = random(&[1, 6, 6, 3], 6);
        // loss = <conv(x), g>
        let loss = |x: &Tensor, f: &Tensor, b: &[f64]| -> f64 {
            conv2d(x, f, b).unwrap().data().iter().zip(g.data()).map(|(p, q)| p * q).sum()
        };
        let grads = conv2d_backward(&x, &f, &g).unwrap();
        let nx = numeric_grad(x.data(), |v| loss(&Tensor::new(x.shape(), v.to_vec()).unwrap(), &f, &b));
        let nf = numeric_grad(f.data(), |v| loss(&x, &Tensor::new(f.shape(), v.to_vec()).unwrap(), &b));
        let nb = numeric_grad(&b, |v| loss(&x, &f, v));
        assert!(max_rel(grads.input.data(), &nx) < 1e-4);
        assert!(max_rel(&grads.filters, &nf) < 1e-4);
        assert!(max_rel(&grads.bias, &nb) < 1e-4);
    }

    #[test]
    fn pooling_examples() {
        let x = Tensor::new(&[1, 2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, arg) = maxpool2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(arg, vec![3]);

        let c = Tensor::new(&[1, 4, 4, 1], vec![2.0; 16]).unwrap();
        let (y, arg) = maxpool2(&c).unwrap();
        assert!(y.data().iter().all(|&v| v == 2.0));
        let g = maxpool2_backward(c.shape(), &arg, &Tensor::new(&[1, 2, 2, 1], vec![1.0; 4]).unwrap());
        let expect: Vec<f64> = (0..16)
            .map(|i| if (i / 4) % 2 == 0 && (i % 4) % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(g.data(), expect.as_slice());

        let big = Tensor::zeros(&[1, 70, 10, 3]);
        assert_eq!(maxpool2(&big).unwrap().0.shape(), &[1, 35, 5, 3]);
        let odd = Tensor::zeros(&[1, 7, 5, 1]);
        assert_eq!(maxpool2(&odd).unwrap().0.shape(), &[1, 3, 2, 1]);
        assert!(maxpool2(&Tensor::zeros(&[1, 1, 4, 1])).is_err());
    }

    #[test]
    fn dense_examples_and_gradients() {
        let x = random(&[3, 4], 7);
        let eye = Tensor::new(&[4, 4], (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect()).unwrap();
        assert_eq!(dense(&x, &eye, &[0.0; 4]).unwrap(), x);
        let zero = Tensor::zeros(&[4, 2]);
        let y = dense(&x, &zero, &[1.5, -2.0]).unwrap();
        assert!(y.data().chunks(2).all(|r| r == [1.5, -2.0]));
        assert!(dense(&x, &Tensor::zeros(&[5, 2]), &[0.0; 2]).is_err());

        let w = random(&[4, 3], 8);
        let b = vec![0.5, 0.0, -0.5];
        let g = random(&[3, 3], 9);
        let loss = |x: &Tensor, w: &Tensor, b: &[f64]| -> f64 {
            dense(x, w, b).unwrap().data().iter().zip(g.data()).map(|(p, q)| p * q).sum()
        };
        let grads = dense_backward(&x, &w, &g).unwrap();
        let nx = numeric_grad(x.data(), |v| loss(&Tensor::new(x.shape(), v.to_vec()).unwrap(), &w, &b));
        let nw = numeric_grad(w.data(), |v| loss(&x, &Tensor::new(w.shape(), v.to_vec()).unwrap(), &b));
        let nb = numeric_grad(&b, |v| loss(&x, &w, v));
        assert!(max_rel(grads.input.data(), &nx) < 1e-4);
        assert!(max_rel(&grads.weights, &nw) < 1e-4);
        assert!(max_rel(&grads.bias, &nb) < 1e-4);
    }

    #[test]
    fn relu_examples() {
        let x = Tensor::new(&[1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::new(&[1, 3], vec![5.0; 3]).unwrap());
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
        let neg = Tensor::new(&[1, 2], vec![-3.0, -0.1]).unwrap();
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
        assert!(relu_backward(&neg, &Tensor::new(&[1, 2], vec![1.0; 2]).unwrap()).data().iter().all(|&v| v == 0.0));
        assert_eq!(relu(&relu(&x)), relu(&x));
    }

    #[test]
    fn softmax_loss_examples() {
        let s = softmax_cross_entropy(&[0.0, 0.0], 0).unwrap();
        assert_eq!(s.probabilities, vec![0.5, 0.5]);
        assert!((s.loss - 2f64.ln()).abs() < 1e-12);
        let s = softmax_cross_entropy(&[30.0, -30.0], 0).unwrap();
        assert!(s.loss >= 0.0 && s.loss < 1e-20);
        let s = softmax_cross_entropy(&[1000.0, -1000.0], 1).unwrap();
        assert!(s.loss.is_finite());
        assert!((s.loss - -LOG_FLOOR.ln()).abs() < 1e-9);
        assert!(softmax_cross_entropy(&[1.0], 0).is_err());
        assert!(softmax_cross_entropy(&[1.0, 2.0], 2).is_err());

        let z = [0.3, -1.2, 0.8];
        let s = softmax_cross_entropy(&z, 2).unwrap();
        let num = numeric_grad(&z, |v| softmax_cross_entropy(v, 2).unwrap().loss);
        assert!(max_rel(&s.logit_gradient, &num) < 1e-4);
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(z in proptest::collection::vec(-20.0f64..20.0, 2..6), c in -50.0f64..50.0) {
            let p = softmax(&z);
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let q = softmax(&shifted);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn same_padding_keeps_shape(h in 1usize..9, w in 1usize..9, k in prop_oneof![Just(1usize), Just(3), Just(5)]) {
            let x = Tensor::zeros(&[1, h, w, 2]);
            let f = Tensor::zeros(&[k, k, 2, 3]);
            let y = conv2d(&x, &f, &[0.0; 3]).unwrap();
            prop_assert_eq!(y.shape(), &[1, h, w, 3]);
        }
    }
}
