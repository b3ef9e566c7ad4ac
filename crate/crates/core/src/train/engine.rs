use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::loss::{e_miod, e_ood, repel, LossConfig, MultiDimBatch, OodLossConfig};
use crate::nn::{ForwardCache, Gradients, Mlp, OptimizerConfig, OptimizerState};
use crate::{Error, Result};

/// Models trained jointly against one loss, each with its own optimizer.
pub(crate) struct Trainer {
    pub models: Vec<Mlp<f32>>,
    opts: Vec<OptimizerState>,
    loss: LossConfig,
    steps: u64,
}

impl Trainer {
    pub fn new(models: Vec<Mlp<f32>>, optimizer: OptimizerConfig, loss: LossConfig) -> Result<Self> {
        let opts = models
            .iter()
            .map(|m| OptimizerState::new(optimizer, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models, opts, loss, steps: 0 })
    }

    pub fn set_lr(&mut self, lr: f64) {
        for o in &mut self.opts {
            o.set_lr(lr);
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One optimizer step on minibatch `x`; returns the loss before the step.
    pub fn step(&mut self, x: ArrayView2<f32>) -> Result<f64> {
        let caches = self
            .models
            .par_iter()
            .map(|m| m.forward_cached(x))
            .collect::<Result<Vec<_>>>()?;
        let outs: Vec<Array2<f64>> = caches.iter().map(|c| c.output().mapv(f64::from)).collect();
        let (loss, grads) = joint_loss(&self.loss, outs)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {}", self.steps)));
        }
        let param_grads = self
            .models
            .par_iter()
            .zip(caches.par_iter())
            .zip(grads.par_iter())
            .map(|((m, c), g): ((&Mlp<f32>, &ForwardCache<f32>), &Array2<f64>)| {
                m.backward(c, g.mapv(|v| v as f32).view())
            })
            .collect::<Result<Vec<Gradients<f32>>>>()?;
        self.models
            .par_iter_mut()
            .zip(self.opts.par_iter_mut())
            .zip(param_grads.par_iter())
            .try_for_each(|((m, o), g)| o.step(m, g))?;
        self.steps += 1;
        Ok(loss)
    }
}

/// Loss over the outputs of all jointly trained models, with the gradient
/// for each model's output block.
pub fn joint_loss(loss: &LossConfig, outs: Vec<Array2<f64>>) -> Result<(f64, Vec<Array2<f64>>)> {
    match *loss {
        LossConfig::Ood { k } => {
            let [out] = <[_; 1]>::try_from(outs)
                .map_err(|o| Error::validation(format!("the ood loss takes one model, got {}", o.len())))?;
            let r = e_ood(out.view(), &OodLossConfig { k })?;
            Ok((r.loss, vec![r.grad]))
        }
        LossConfig::Miod { k } => e_miod(&MultiDimBatch::new(outs)?, &OodLossConfig { k }),
        LossConfig::Repel { .. } => {
            let cfg = loss.repel_config().expect("repel variant");
            let widths: Vec<usize> = outs.iter().map(|o| o.ncols()).collect();
            let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
            let joint = ndarray::concatenate(Axis(1), &views).expect("outputs share the batch");
            let r = repel(joint.view(), &cfg)?;
            let mut start = 0;
            let grads = widths
                .iter()
                .map(|&w| {
                    let g = r.grad.slice(s![.., start..start + w]).to_owned();
                    start += w;
                    g
                })
                .collect();
            Ok((r.loss, grads))
        }
    }
}
