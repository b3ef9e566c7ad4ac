use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainReport;
use crate::analysis::{codes_from_outputs, joint_outputs, unpack_bits};
use crate::nn::{weights_hash, Activation, Mlp, ModelSpec, OptimizerConfig, OptimizerState};
use crate::rng::{streams, substream};
use crate::{Error, Result};

fn default_epochs() -> usize {
    100
}
fn default_batch() -> usize {
    128
}
fn default_optimizer() -> OptimizerConfig {
    OptimizerConfig::adam(1e-3)
}
fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seed: u64,
    /// Shrinks the number of epochs.
    #[serde(default = "unit")]
    pub scale_factor: f64,
    /// Overrides the mirrored architecture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch(),
            optimizer: default_optimizer(),
            seed: 0,
            scale_factor: 1.0,
            model: None,
        }
    }
}

impl DecoderConfig {
    pub fn scaled_epochs(&self) -> usize {
        ((self.epochs as f64 * self.scale_factor).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.batch_size == 0 {
            return Err(Error::validation("decoder batch_size must be positive"));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor <= 1.0) {
            return Err(Error::validation("scale_factor must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Distinct codes with the mean of all patches that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeTable {
    pub bits: usize,
    pub codes: Vec<u128>,
    pub counts: Vec<u64>,
    /// One mean patch per code, in `codes` order.
    pub targets: Array2<f32>,
}

impl CodeTable {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Code bits as 0/1 decoder inputs.
    pub fn features(&self) -> Array2<f32> {
        code_features(&self.codes, self.bits)
    }
}

pub fn code_features(codes: &[u128], bits: usize) -> Array2<f32> {
    let mut out = Array2::zeros((codes.len(), bits));
    for (mut row, &c) in out.rows_mut().into_iter().zip(codes) {
        for (v, b) in row.iter_mut().zip(unpack_bits(c, bits)) {
            *v = b as u8 as f32;
        }
    }
    out
}

/// Averages the patches sharing a code; codes come out in ascending order.
pub fn build_code_table(codes: &[u128], bits: usize, patches: ArrayView2<f32>) -> Result<CodeTable> {
    if codes.len() != patches.nrows() {
        return Err(Error::validation(format!("{} codes for {} patches", codes.len(), patches.nrows())));
    }
    if codes.is_empty() {
        return Err(Error::validation("cannot build a decoder from an empty code table"));
    }
    let dim = patches.ncols();
    let mut sums: BTreeMap<u128, (Vec<f64>, u64)> = BTreeMap::new();
    for (&c, row) in codes.iter().zip(patches.rows()) {
        let (sum, n) = sums.entry(c).or_insert_with(|| (vec![0.0; dim], 0));
        for (s, &v) in sum.iter_mut().zip(row) {
            *s += v as f64;
        }
        *n += 1;
    }
    let mut targets = Array2::zeros((sums.len(), dim));
    let mut table_codes = Vec::with_capacity(sums.len());
    let mut counts = Vec::with_capacity(sums.len());
    for (mut row, (code, (sum, n))) in targets.rows_mut().into_iter().zip(sums) {
        for (t, s) in row.iter_mut().zip(sum) {
            *t = (s / n as f64) as f32;
        }
        table_codes.push(code);
        counts.push(n);
    }
    Ok(CodeTable { bits, codes: table_codes, counts, targets })
}

/// Decoder architecture mirroring the encoder: code bits in, hidden widths
/// reversed, patch values out through a sigmoid.
pub fn mirror_spec(encoders: &[Mlp<f32>]) -> Result<ModelSpec> {
    let first = encoders.first().ok_or_else(|| Error::validation("no encoder models"))?;
    let bits: usize = encoders.iter().map(|m| m.output_dim()).sum();
    let spec = first.spec();
    let mut dims = vec![bits];
    dims.extend(spec.layers.iter().rev().skip(1).map(|l| l.out_dim));
    dims.push(first.input_dim());
    Ok(ModelSpec::chain(&dims, Activation::Relu, Activation::Sigmoid))
}

/// Mean squared error over all entries and its gradient.
pub fn mse(pred: ArrayView2<f32>, target: ArrayView2<f32>) -> (f64, Array2<f32>) {
    let n = pred.len() as f64;
    let diff = &pred.mapv(f64::from) - &target.mapv(f64::from);
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff.mapv(|d| (2.0 * d / n) as f32))
}

pub struct DecoderOutcome {
    pub model: Mlp<f32>,
    pub table: CodeTable,
    pub report: TrainReport,
}

/// Encodes `patches`, averages patches per code and fits the decoder to
/// the resulting table.
pub fn train_decoder(encoders: &[Mlp<f32>], patches: ArrayView2<f32>, cfg: &DecoderConfig) -> Result<DecoderOutcome> {
    cfg.validate()?;
    let outputs = joint_outputs(encoders, patches)?;
    let codes = codes_from_outputs(outputs.view())?;
    let table = build_code_table(&codes, outputs.ncols(), patches)?;
    let spec = match &cfg.model {
        Some(s) => s.clone(),
        None => mirror_spec(encoders)?,
    };
    let (model, report) = train_decoder_on_table(&table, &spec, cfg)?;
    Ok(DecoderOutcome { model, table, report })
}

pub fn train_decoder_on_table(table: &CodeTable, spec: &ModelSpec, cfg: &DecoderConfig) -> Result<(Mlp<f32>, TrainReport)> {
    cfg.validate()?;
    spec.validate()?;
    if table.is_empty() {
        return Err(Error::validation("empty code table"));
    }
    if spec.input_dim() != table.bits || spec.output_dim() != table.targets.ncols() {
        return Err(Error::validation(format!(
            "decoder spec maps {} -> {}, table needs {} -> {}",
            spec.input_dim(),
            spec.output_dim(),
            table.bits,
            table.targets.ncols()
        )));
    }
    let t0 = Instant::now();
    let mut model = Mlp::init(spec, cfg.seed)?;
    let init_hash = weights_hash([&model]);
    let mut opt = OptimizerState::new(cfg.optimizer, &model)?;
    let features = table.features();
    let mut order: Vec<usize> = (0..table.len()).collect();
    let mut losses = Vec::new();
    let mut steps = 0;
    for epoch in 0..cfg.scaled_epochs() {
        order.shuffle(&mut substream(cfg.seed, streams::SHUFFLE, epoch as u64));
        let mut sum = 0.0;
        let mut n = 0;
        for idx in order.chunks(cfg.batch_size) {
            let x = features.select(Axis(0), idx);
            let t = table.targets.select(Axis(0), idx);
            let cache = model.forward_cached(x.view())?;
            let (loss, grad) = mse(cache.output().view(), t.view());
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("decoder loss at epoch {epoch}")));
            }
            let grads = model.backward(&cache, grad.view())?;
            opt.step(&mut model, &grads)?;
            sum += loss;
            n += 1;
            steps += 1;
        }
        losses.push(sum / n as f64);
    }
    let report = TrainReport {
        recipe: "Decoder".into(),
        epoch_lrs: vec![cfg.optimizer.lr; losses.len()],
        epoch_losses: losses,
        steps,
        wall_time_secs: t0.elapsed().as_secs_f64(),
        init_hash,
        weights_hash: weights_hash([&model]),
        weights_paths: Vec::new(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    };
    Ok((model, report))
}
