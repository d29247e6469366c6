use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, conv2d, conv2d_backward, dense, dense_backward, maxpool2, maxpool2_backward, relu, relu_backward};
use super::{NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Same-padded, stride 1, `kernel × kernel`.
    Conv { filters: usize, kernel: usize },
    /// 2×2, stride 2.
    MaxPool,
    Relu,
    Dense { units: usize },
    /// Must be last; the network computes logits and applies it in
    /// [`Network::predict`] and inside the loss.
    Softmax,
}

/// The four layer stacks evaluated for detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Cnn1,
    Cnn2,
    Cnn3,
    Cnn4,
}

/// Sizes substituted into an [`Architecture`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchParams {
    pub filters: usize,
    pub kernel: usize,
    pub dense_units: usize,
    pub classes: usize,
}

impl Default for ArchParams {
    fn default() -> Self {
        Self {
            filters: 10,
            kernel: 5,
            dense_units: 1000,
            classes: 2,
        }
    }
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Self::Cnn1, Self::Cnn2, Self::Cnn3, Self::Cnn4];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cnn1 => "CNN1",
            Self::Cnn2 => "CNN2",
            Self::Cnn3 => "CNN3",
            Self::Cnn4 => "CNN4",
        }
    }

    pub fn layers(self, p: &ArchParams) -> Vec<LayerSpec> {
        use LayerSpec::*;
        let conv = Conv {
            filters: p.filters,
            kernel: p.kernel,
        };
        let features: Vec<LayerSpec> = match self {
            Self::Cnn1 => vec![conv, Relu, MaxPool],
            Self::Cnn2 => vec![conv, Relu, conv, Relu, MaxPool],
            Self::Cnn3 => vec![conv, Relu, MaxPool, conv, Relu, MaxPool],
            Self::Cnn4 => vec![conv, Relu, conv, Relu, MaxPool, conv, Relu, conv, Relu, MaxPool],
        };
        let head = [
            Dense { units: p.dense_units },
            Relu,
            Dense { units: p.classes },
            Softmax,
        ];
        features.into_iter().chain(head).collect()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| NnError::Architecture(format!("unknown architecture {s:?}, expected CNN1..CNN4")))
    }
}

/// How the last dense layer starts out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Zero weights and bias: untrained output is uniform.
    #[default]
    ZeroOutput,
    /// Same fan-in scaled init as the other layers.
    RandomOutput,
}

/// Deliberate backward-pass corruption, for testing the gradient checker.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackwardFault {
    FlipConvSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layer {
    /// `param` indexes the filter tensor; the bias follows it.
    Conv { param: usize },
    MaxPool,
    Relu,
    Dense { param: usize },
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    specs: Vec<LayerSpec>,
    input_shape: [usize; 3],
    layers: Vec<Layer>,
    params: Vec<Tensor>,
    names: Vec<String>,
    fault: Option<BackwardFault>,
}

/// Per-sample losses plus gradients of `scale · Σ losses`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub losses: Vec<f64>,
    pub params: Vec<Vec<f64>>,
    pub input: Tensor,
}

enum Cached {
    Input(Tensor),
    Pool { shape: Vec<usize>, argmax: Vec<usize> },
    None,
}

/// Which side of every nondifferentiable switch the forward pass landed on.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Switches {
    relu: Vec<Vec<bool>>,
    pool: Vec<Vec<usize>>,
}

impl Network {
    /// Builds and initializes. Weights are uniform in ±√(6/fan_in) from a
    /// stream seeded by `seed`; biases start at zero.
    pub fn new(specs: &[LayerSpec], input_shape: [usize; 3], seed: u64, init: Init) -> Result<Self, NnError> {
        if input_shape.contains(&0) {
            return Err(NnError::Architecture(format!("input shape {input_shape:?} has a zero dimension")));
        }
        match specs {
            [.., LayerSpec::Dense { units }, LayerSpec::Softmax] if *units >= 2 => {}
            _ => {
                return Err(NnError::Architecture(
                    "layer list must end with dense(classes >= 2) followed by softmax".into(),
                ))
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(specs.len());
        let mut params = Vec::new();
        let mut names = Vec::new();
        let mut shape = input_shape.to_vec();
        let mut flat = false;
        let last_dense = specs.len() - 2;
        for (i, spec) in specs.iter().enumerate() {
            match *spec {
                LayerSpec::Conv { filters, kernel } => {
                    if flat {
                        return Err(NnError::Architecture(format!("layer {i}: convolution after dense")));
                    }
                    if filters == 0 || kernel == 0 || kernel % 2 == 0 {
                        return Err(NnError::Architecture(format!(
                            "layer {i}: conv needs filters >= 1 and an odd kernel, got {filters} and {kernel}"
                        )));
                    }
                    let cin = shape[2];
                    let fan_in = kernel * kernel * cin;
                    layers.push(Layer::Conv { param: params.len() });
                    params.push(uniform(&mut rng, &[kernel, kernel, cin, filters], fan_in));
                    params.push(Tensor::zeros(&[filters]));
                    names.push(format!("layer{i}.conv.filters"));
                    names.push(format!("layer{i}.conv.bias"));
                    shape[2] = filters;
                }
                LayerSpec::MaxPool => {
                    if flat || shape[0] < 2 || shape[1] < 2 {
                        return Err(NnError::Architecture(format!(
                            "layer {i}: cannot pool a {}x{} map",
                            shape[0], shape[1]
                        )));
                    }
                    layers.push(Layer::MaxPool);
                    shape[0] /= 2;
                    shape[1] /= 2;
                }
                LayerSpec::Relu => layers.push(Layer::Relu),
                LayerSpec::Dense { units } => {
                    if units == 0 {
                        return Err(NnError::Architecture(format!("layer {i}: dense with zero units")));
                    }
                    let fan_in: usize = if flat { shape[0] } else { shape.iter().product() };
                    layers.push(Layer::Dense { param: params.len() });
                    let w = if i == last_dense && init == Init::ZeroOutput {
                        Tensor::zeros(&[fan_in, units])
                    } else {
                        uniform(&mut rng, &[fan_in, units], fan_in)
                    };
                    params.push(w);
                    params.push(Tensor::zeros(&[units]));
                    names.push(format!("layer{i}.dense.weights"));
                    names.push(format!("layer{i}.dense.bias"));
                    shape = vec![units];
                    flat = true;
                }
                LayerSpec::Softmax => {
                    if i != specs.len() - 1 {
                        return Err(NnError::Architecture(format!("layer {i}: softmax before the end")));
                    }
                    layers.push(Layer::Softmax);
                }
            }
        }
        Ok(Self {
            specs: specs.to_vec(),
            input_shape,
            layers,
            params,
            names,
            fault: None,
        })
    }

    pub fn from_architecture(
        arch: Architecture,
        params: &ArchParams,
        input_shape: [usize; 3],
        seed: u64,
    ) -> Result<Self, NnError> {
        Self::new(&arch.layers(params), input_shape, seed, Init::ZeroOutput)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn classes(&self) -> usize {
        self.params.last().map(|b| b.len()).unwrap_or(0)
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Replaces every parameter tensor; shapes must match exactly.
    pub fn set_params(&mut self, params: Vec<Tensor>) -> Result<(), NnError> {
        if params.len() != self.params.len()
            || params.iter().zip(&self.params).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(NnError::Shape("parameter tensors do not match the architecture".into()));
        }
        self.params = params;
        Ok(())
    }

    #[doc(hidden)]
    pub fn with_fault(mut self, fault: BackwardFault) -> Self {
        self.fault = Some(fault);
        self
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NnError> {
        let [h, w, c] = self.input_shape;
        if x.shape().len() != 4 || x.shape()[1..] != [h, w, c] {
            return Err(NnError::Shape(format!(
                "network expects [n, {h}, {w}, {c}], got {:?}",
                x.shape()
            )));
        }
        Ok(())
    }

    fn forward(&self, x: &Tensor, keep: bool) -> Result<(Tensor, Vec<Cached>, Switches), NnError> {
        self.check_input(x)?;
        let mut cache = Vec::with_capacity(if keep { self.layers.len() } else { 0 });
        let mut switches = Switches::default();
        let mut cur = x.clone();
        for layer in &self.layers {
            let (next, cached) = match *layer {
                Layer::Conv { param } => {
                    let y = conv2d(&cur, &self.params[param], self.params[param + 1].data())?;
                    (y, Cached::Input(cur))
                }
                Layer::MaxPool => {
                    let (y, argmax) = maxpool2(&cur)?;
                    if !keep {
                        switches.pool.push(argmax.clone());
                    }
                    let shape = cur.shape().to_vec();
                    (y, Cached::Pool { shape, argmax })
                }
                Layer::Relu => {
                    let y = relu(&cur);
                    if !keep {
                        switches.relu.push(cur.data().iter().map(|&v| v > 0.0).collect());
                    }
                    (y, Cached::Input(cur))
                }
                Layer::Dense { param } => {
                    let y = dense(&cur, &self.params[param], self.params[param + 1].data())?;
                    (y, Cached::Input(cur))
                }
                Layer::Softmax => (cur, Cached::None),
            };
            if keep {
                cache.push(cached);
            }
            cur = next;
        }
        let n = cur.batch();
        let logits = cur.reshape(&[n, self.classes()])?;
        Ok((logits, cache, switches))
    }

    /// Logits, `[n, classes]`.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward(x, false)?.0)
    }

    /// Class probabilities per sample.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<Vec<f64>>, NnError> {
        let logits = self.logits(x)?;
        Ok(logits.data().chunks(self.classes()).map(ops::softmax).collect())
    }

    /// Probability of class 1 per sample.
    pub fn positive_scores(&self, x: &Tensor) -> Result<Vec<f64>, NnError> {
        Ok(self.predict(x)?.into_iter().map(|p| p[1]).collect())
    }

    /// Per-sample losses.
    pub fn losses(&self, x: &Tensor, labels: &[usize]) -> Result<Vec<f64>, NnError> {
        let logits = self.logits(x)?;
        self.check_labels(x, labels)?;
        logits
            .data()
            .chunks(self.classes())
            .zip(labels)
            .map(|(z, &y)| Ok(ops::softmax_cross_entropy(z, y)?.loss))
            .collect()
    }

    pub(crate) fn switches(&self, x: &Tensor) -> Result<Switches, NnError> {
        Ok(self.forward(x, false)?.2)
    }

    fn check_labels(&self, x: &Tensor, labels: &[usize]) -> Result<(), NnError> {
        if labels.len() != x.batch() {
            return Err(NnError::Shape(format!("{} labels for {} samples", labels.len(), x.batch())));
        }
        Ok(())
    }

    /// Gradients of `scale · Σᵢ Lᵢ`. Use `scale = 1/n` for the mean loss;
    /// with `scale = 1` the input gradient of sample i is exactly ∂Lᵢ/∂xᵢ.
    pub fn gradients(&self, x: &Tensor, labels: &[usize], scale: f64) -> Result<Gradients, NnError> {
        self.check_labels(x, labels)?;
        let (logits, mut cache, _) = self.forward(x, true)?;
        let k = self.classes();
        let mut losses = Vec::with_capacity(labels.len());
        let mut dlogits = Vec::with_capacity(logits.len());
        for (z, &y) in logits.data().chunks(k).zip(labels) {
            let s = ops::softmax_cross_entropy(z, y)?;
            losses.push(s.loss);
            dlogits.extend(s.logit_gradient.iter().map(|g| g * scale));
        }
        let mut grad = Tensor::new(&[x.batch(), k], dlogits)?;
        let mut pgrads: Vec<Vec<f64>> = vec![Vec::new(); self.params.len()];
        for (layer, cached) in self.layers.iter().zip(cache.drain(..)).rev() {
            grad = match (*layer, cached) {
                (Layer::Softmax, _) => grad,
                (Layer::Dense { param }, Cached::Input(input)) => {
                    let g = grad.reshape(&[input.batch(), self.params[param].shape()[1]])?;
                    let d = dense_backward(&input, &self.params[param], &g)?;
                    pgrads[param] = d.weights;
                    pgrads[param + 1] = d.bias;
                    d.input
                }
                (Layer::Relu, Cached::Input(input)) => {
                    let g = grad.reshape(input.shape())?;
                    relu_backward(&input, &g)
                }
                (Layer::MaxPool, Cached::Pool { shape, argmax }) => {
                    let (n, h, w, c) = (shape[0], shape[1] / 2, shape[2] / 2, shape[3]);
                    let g = grad.reshape(&[n, h, w, c])?;
                    maxpool2_backward(&shape, &argmax, &g)
                }
                (Layer::Conv { param }, Cached::Input(input)) => {
                    let g = grad.reshape(&[
                        input.batch(),
                        input.shape()[1],
                        input.shape()[2],
                        self.params[param].shape()[3],
                    ])?;
                    let mut d = conv2d_backward(&input, &self.params[param], &g)?;
                    if self.fault == Some(BackwardFault::FlipConvSign) {
                        d.filters.iter_mut().for_each(|v| *v = -*v);
                        d.bias.iter_mut().for_each(|v| *v = -*v);
                    }
                    pgrads[param] = d.filters;
                    pgrads[param + 1] = d.bias;
                    d.input
                }
                _ => unreachable!("cache entry does not match layer"),
            };
        }
        let input = grad.reshape(x.shape())?;
        Ok(Gradients {
            losses,
            params: pgrads,
            input,
        })
    }
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-bound..bound)).collect()).expect("valid shape")
}
