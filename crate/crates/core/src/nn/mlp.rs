use ndarray::{Array1, Array2, ArrayView2, Zip};
use rand::Rng;

use super::{Activation, LayerSpec, ModelSpec, Real};
use crate::rng::{streams, substream};
use crate::{Error, Result};

/// One fully connected layer; `weights` is `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T: Real = f32> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub act: Activation,
}

impl<T: Real> Dense<T> {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            in_dim: self.in_dim(),
            out_dim: self.out_dim(),
            act: self.act,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T: Real = f32> {
    layers: Vec<Dense<T>>,
}

/// Activations recorded by [`Mlp::forward_cached`]; entry 0 is the input batch
/// and entry `l + 1` the output of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache<T: Real = f32> {
    activations: Vec<Array2<T>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn output(&self) -> &Array2<T> {
        self.activations.last().expect("cache holds at least the input")
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T: Real = f32> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

/// Parameter gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Real = f32> {
    pub layers: Vec<LayerGrad<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &Mlp<T>) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    /// Flattened view in the same order as [`Mlp::parameters`].
    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn activate<T: Real>(act: Activation, z: &mut Array2<T>) {
    match act {
        Activation::Linear => {}
        Activation::Relu => z.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() }),
        Activation::Sigmoid => z.mapv_inplace(|v| T::from_f64(sigmoid(v.to_f64()))),
        Activation::Softmax => {
            for mut row in z.rows_mut() {
                let max = row
                    .iter()
                    .map(|v| v.to_f64())
                    .fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|v| (v.to_f64() - max).exp()).collect();
                let total: f64 = exps.iter().sum();
                for (o, e) in row.iter_mut().zip(exps) {
                    *o = T::from_f64(e / total);
                }
            }
        }
    }
}

/// Turns `dL/d(output)` into `dL/d(pre-activation)` given the layer output.
fn activation_backward<T: Real>(act: Activation, grad: &mut Array2<T>, out: &Array2<T>) {
    match act {
        Activation::Linear => {}
        // ReLU'(0) := 0; the output is zero exactly when the pre-activation is <= 0
        Activation::Relu => Zip::from(grad).and(out).for_each(|g, &y| {
            if y <= T::zero() {
                *g = T::zero();
            }
        }),
        Activation::Sigmoid => Zip::from(grad).and(out).for_each(|g, &y| {
            *g = *g * y * (T::one() - y);
        }),
        Activation::Softmax => {
            for (mut g, y) in grad.rows_mut().into_iter().zip(out.rows()) {
                let dot: f64 = g.iter().zip(y).map(|(a, b)| a.to_f64() * b.to_f64()).sum();
                let dot = T::from_f64(dot);
                Zip::from(&mut g).and(&y).for_each(|g, &y| *g = y * (*g - dot));
            }
        }
    }
}

impl Mlp<f32> {
    /// Glorot-uniform weights and zero biases drawn from the seeded stream.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        Self::init_indexed(spec, seed, 0)
    }

    /// Like [`Mlp::init`] for member `index` of a group of models sharing a seed.
    pub fn init_indexed(spec: &ModelSpec, seed: u64, index: u64) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(l, s)| {
                let mut rng = substream(seed, streams::INIT, (index << 8) | l as u64);
                let bound = (6.0 / (s.in_dim + s.out_dim) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((s.out_dim, s.in_dim), || {
                    rng.random_range(-bound..bound) as f32
                });
                Dense {
                    weights,
                    bias: Array1::zeros(s.out_dim),
                    act: s.act,
                }
            })
            .collect();
        Ok(Self { layers })
    }
}

impl<T: Real> Mlp<T> {
    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        let model = Self { layers };
        model.spec().validate()?;
        for (i, l) in model.layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::validation(format!("layer {i} bias length mismatch")));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.to_f64().is_finite()) {
                return Err(Error::NonFinite(format!("layer {i} parameters")));
            }
        }
        Ok(model)
    }

    /// All-zero parameters with the given layout.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            layers: spec
                .layers
                .iter()
                .map(|s| Dense {
                    weights: Array2::zeros((s.out_dim, s.in_dim)),
                    bias: Array1::zeros(s.out_dim),
                    act: s.act,
                })
                .collect(),
        })
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            layers: self.layers.iter().map(Dense::spec).collect(),
        }
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::out_dim)
    }

    pub fn head(&self) -> Activation {
        self.layers.last().map_or(Activation::Linear, |l| l.act)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn parameters(&self) -> impl Iterator<Item = T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    /// Mutable access to flattened parameter `index` (same order as [`Mlp::parameters`]).
    pub fn parameter_mut(&mut self, mut index: usize) -> Option<&mut T> {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if index < nw {
                return l.weights.as_slice_mut().map(|s| &mut s[index]);
            }
            index -= nw;
            if index < l.bias.len() {
                return Some(&mut l.bias[index]);
            }
            index -= l.bias.len();
        }
        None
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.mapv(|v| U::from_f64(v.to_f64())),
                    bias: l.bias.mapv(|v| U::from_f64(v.to_f64())),
                    act: l.act,
                })
                .collect(),
        }
    }

    fn check_input(&self, batch: &ArrayView2<T>) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::validation(format!(
                "batch has {} columns but the model expects {} inputs",
                batch.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn layer_forward(layer: &Dense<T>, input: &ArrayView2<T>) -> Array2<T> {
        let mut z = input.dot(&layer.weights.t());
        for mut row in z.rows_mut() {
            Zip::from(&mut row).and(&layer.bias).for_each(|a, &b| *a = *a + b);
        }
        activate(layer.act, &mut z);
        z
    }

    /// Batch inference: `S x inputs` in, `S x outputs` out.
    pub fn forward(&self, batch: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&batch)?;
        let mut layers = self.layers.iter();
        let first = layers.next().expect("validated model has layers");
        let mut a = Self::layer_forward(first, &batch);
        for layer in layers {
            a = Self::layer_forward(layer, &a.view());
        }
        Ok(a)
    }

    /// Forward pass that keeps every activation for [`Mlp::backward`].
    pub fn forward_cached(&self, batch: ArrayView2<T>) -> Result<ForwardCache<T>> {
        self.check_input(&batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.to_owned());
        for layer in &self.layers {
            let next = Self::layer_forward(layer, &activations.last().unwrap().view());
            activations.push(next);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse-mode gradients of the parameters given `dL/d(output)`.
    pub fn backward(&self, cache: &ForwardCache<T>, loss_grad: ArrayView2<T>) -> Result<Gradients<T>> {
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::contract("forward cache was produced by a different model"));
        }
        if loss_grad.dim() != cache.output().dim() {
            return Err(Error::contract(format!(
                "loss gradient shape {:?} does not match the cached output {:?}",
                loss_grad.dim(),
                cache.output().dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = loss_grad.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            activation_backward(layer.act, &mut g, &cache.activations[l + 1]);
            let input = cache.activations[l].view();
            grads.push(LayerGrad {
                weights: T::weight_grad(g.view(), input),
                bias: T::bias_grad(g.view()),
            });
            if l > 0 {
                g = g.dot(&layer.weights);
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Gradient with respect to the input batch; used by tests and analysis.
    pub fn input_gradient(&self, cache: &ForwardCache<T>, loss_grad: ArrayView2<T>) -> Result<Array2<T>> {
        if loss_grad.dim() != cache.output().dim() {
            return Err(Error::contract("loss gradient shape mismatch"));
        }
        let mut g = loss_grad.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            activation_backward(layer.act, &mut g, &cache.activations[l + 1]);
            g = g.dot(&layer.weights);
        }
        Ok(g)
    }
}
