use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    AdamW,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Decoupled weight decay; ignored by Adam.
    #[serde(default)]
    pub weight_decay: f64,
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub fn adamw(lr: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimizerKind::AdamW,
            weight_decay,
            ..Self::adam(lr)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0;
        if !ok {
            return Err(Error::validation(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

struct Moments {
    weights: Array2<f64>,
    bias: Array1<f64>,
}

/// Adam / AdamW state for one model. Moments are kept in f64.
pub struct OptimizerState {
    config: OptimizerConfig,
    first: Vec<Moments>,
    second: Vec<Moments>,
    step: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, model: &Mlp<f32>) -> Result<Self> {
        config.validate()?;
        let zeros = || {
            model
                .layers()
                .iter()
                .map(|l| Moments {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect::<Vec<_>>()
        };
        Ok(Self {
            config,
            first: zeros(),
            second: zeros(),
            step: 0,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn lr(&self) -> f64 {
        self.config.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    fn check(&self, model: &Mlp<f32>, grads: &Gradients<f32>) -> Result<()> {
        if grads.layers.len() != model.layers().len() || self.first.len() != model.layers().len() {
            return Err(Error::validation("gradient layer count does not match the model"));
        }
        for (l, (g, layer)) in grads.layers.iter().zip(model.layers()).enumerate() {
            if g.weights.dim() != layer.weights.dim() || g.bias.dim() != layer.bias.dim() {
                return Err(Error::validation(format!("gradient shape mismatch in layer {l}")));
            }
            if let Some(((r, c), v)) = g.weights.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layers[{l}].weights[{r}][{c}] gradient = {v}")));
            }
            if let Some((i, v)) = g.bias.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layers[{l}].bias[{i}] gradient = {v}")));
            }
        }
        Ok(())
    }

    /// Applies one bias-corrected update. Nothing is modified on error.
    pub fn step(&mut self, model: &mut Mlp<f32>, grads: &Gradients<f32>) -> Result<()> {
        self.check(model, grads)?;
        self.step += 1;
        let OptimizerConfig {
            kind,
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2_sqrt = (1.0 - beta2.powi(t)).sqrt();
        let decay = match kind {
            OptimizerKind::Adam => 1.0,
            OptimizerKind::AdamW => 1.0 - lr * weight_decay,
        };
        let update = |p: &mut f32, g: &f32, m: &mut f64, v: &mut f64| {
            let g = *g as f64;
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let denom = v.sqrt() / bc2_sqrt + eps;
            let decayed = *p as f64 * decay;
            *p = (decayed - lr / bc1 * *m / denom) as f32;
        };
        for (((layer, g), m), v) in model
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(update);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, ModelSpec};
    use crate::rng::{stream, Rng};

    fn model() -> Mlp<f32> {
        Mlp::init(&ModelSpec::chain(&[3, 4, 2], Activation::Relu, Activation::Sigmoid), 5).unwrap()
    }

    fn random_grads(m: &Mlp<f32>, seed: u64) -> Gradients<f32> {
        let mut rng = stream(seed, 0);
        let mut g = Gradients::zeros_like(m);
        for l in &mut g.layers {
            l.weights.mapv_inplace(|_| {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * rng.random_range(0.1f32..2.0)
            });
            l.bias.mapv_inplace(|_| rng.random_range(0.1f32..2.0));
        }
        g
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let lr = 1e-3;
        let mut m = model();
        let before = m.clone();
        let g = random_grads(&m, 1);
        let mut opt = OptimizerState::new(OptimizerConfig::adam(lr), &m).unwrap();
        opt.step(&mut m, &g).unwrap();
        for ((a, b), gv) in m.parameters().zip(before.parameters()).zip(g.values()) {
            let delta = (a - b) as f64;
            let expected = -lr * gv.signum() as f64;
            // f32 storage of the parameter adds up to one ulp of rounding
            assert!((delta - expected).abs() <= lr * 1e-6 + 4.0 * f32::EPSILON as f64 * b.abs().max(1.0) as f64);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = model();
        let before = m.clone();
        let mut opt = OptimizerState::new(OptimizerConfig::adam(1e-2), &m).unwrap();
        for _ in 0..3 {
            opt.step(&mut m, &Gradients::zeros_like(&before)).unwrap();
        }
        assert_eq!(m, before);
    }

    #[test]
    fn adamw_without_decay_matches_adam() {
        let mut a = model();
        let mut b = model();
        let mut oa = OptimizerState::new(OptimizerConfig::adam(1e-3), &a).unwrap();
        let mut ob = OptimizerState::new(OptimizerConfig::adamw(1e-3, 0.0), &b).unwrap();
        for s in 0..20 {
            let g = random_grads(&a, s);
            oa.step(&mut a, &g).unwrap();
            ob.step(&mut b, &g).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn adamw_decay_shrinks_weights() {
        let mut a = model();
        let before = a.clone();
        let mut opt = OptimizerState::new(OptimizerConfig::adamw(1e-2, 0.5), &a).unwrap();
        opt.step(&mut a, &Gradients::zeros_like(&before)).unwrap();
        for (x, y) in a.parameters().zip(before.parameters()) {
            assert!((x - y * (1.0 - 5e-3)).abs() < 1e-7);
        }
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut m = model();
        let before = m.clone();
        let mut g = Gradients::zeros_like(&m);
        g.layers[1].weights[[1, 2]] = f32::NAN;
        let mut opt = OptimizerState::new(OptimizerConfig::adam(1e-3), &m).unwrap();
        match opt.step(&mut m, &g) {
            Err(Error::NonFinite(path)) => assert!(path.starts_with("layers[1].weights[1][2]")),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(m, before);
        assert_eq!(opt.step_count(), 0);
    }
}
