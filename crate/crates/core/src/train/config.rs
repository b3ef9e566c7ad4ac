use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{SamplerConfig, SyntheticCorpus};
use crate::loss::{LossConfig, RepelMode};
use crate::nn::{Activation, ModelSpec, OptimizerConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    TwoPixelOod,
    TwoPixelMiod,
    PatchGray,
    PatchColor,
}

impl Recipe {
    pub fn is_patch(self) -> bool {
        matches!(self, Recipe::PatchGray | Recipe::PatchColor)
    }

    pub fn channels(self) -> usize {
        match self {
            Recipe::PatchColor => 3,
            _ => 1,
        }
    }
}

/// Learning rate in effect from `epoch` (0-based) onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrStep {
    pub epoch: usize,
    pub lr: f64,
}

fn default_pairs() -> usize {
    1_000_000
}
fn default_batch_size() -> usize {
    10_000
}
fn default_patch_size() -> usize {
    4
}
fn default_batches() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Image directory or manifest. Without it, two-pixel recipes use the
    /// correlated Gaussian and patch recipes the generated corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: SyntheticCorpus,
    /// Two-pixel training pairs per epoch.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Two-pixel minibatch size.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_patch_size")]
    pub patch_size: usize,
    /// Outer patch batches per epoch.
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            synthetic: SyntheticCorpus::default(),
            pairs: default_pairs(),
            batch_size: default_batch_size(),
            patch_size: default_patch_size(),
            batches: default_batches(),
            sampler: None,
        }
    }
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}

/// One training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeConfig {
    pub recipe: Recipe,
    /// Architecture shared by every model of the run.
    pub model: ModelSpec,
    /// Number of jointly trained models.
    #[serde(default = "one")]
    pub models: usize,
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lr_schedule: Vec<LrStep>,
    pub epochs: usize,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub seed: u64,
    /// Shrinks two-pixel pairs and outer patch batches per epoch.
    #[serde(default = "unit")]
    pub scale_factor: f64,
}

impl RecipeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Two-pixel even coding with one softmax MLP (2 -> 200 -> 100 -> n).
    pub fn two_pixel_ood(n_states: usize) -> Self {
        Self {
            recipe: Recipe::TwoPixelOod,
            model: ModelSpec::chain(&[2, 200, 100, n_states], Activation::Relu, Activation::Softmax),
            models: 1,
            loss: LossConfig::Ood { k: 2.0 / 3.0 },
            optimizer: OptimizerConfig::adam(1e-3),
            lr_schedule: Vec::new(),
            epochs: 20,
            data: DataConfig { pairs: 10_000_000, ..DataConfig::default() },
            seed: 0,
            scale_factor: 1.0,
        }
    }

    /// `dims` independent softmax MLPs trained against the joint loss.
    pub fn two_pixel_miod(dims: usize, n_states: usize) -> Self {
        Self {
            recipe: Recipe::TwoPixelMiod,
            models: dims,
            loss: LossConfig::Miod { k: 2.0 / 3.0 },
            ..Self::two_pixel_ood(n_states)
        }
    }

    /// 4x4 grayscale patches, one 16 -> 100 -> 64 sigmoid MLP, sample-wise repulsion.
    pub fn patch_gray() -> Self {
        Self {
            recipe: Recipe::PatchGray,
            model: ModelSpec::chain(&[16, 100, 64], Activation::Relu, Activation::Sigmoid),
            models: 1,
            loss: LossConfig::Repel { mode: RepelMode::SampleWise, alpha: 0.05, epsilon: 1e-38 },
            optimizer: OptimizerConfig::adam(1e-3),
            lr_schedule: Vec::new(),
            epochs: 1,
            data: DataConfig {
                patch_size: 4,
                batches: 100,
                sampler: Some(SamplerConfig {
                    seed: 0,
                    batch_images: 1000,
                    patches_per_image: 1000,
                    minibatch_size: 500,
                    flip_probability: 0.0,
                    sequential_minibatches: false,
                }),
                ..DataConfig::default()
            },
            seed: 0,
            scale_factor: 1.0,
        }
    }

    /// 5x5 color patches, 96 single-output 75 -> 48 -> 1 sigmoid MLPs,
    /// node-wise repulsion, AdamW with a step at epoch 5.
    pub fn patch_color() -> Self {
        Self {
            recipe: Recipe::PatchColor,
            model: ModelSpec::chain(&[75, 48, 1], Activation::Relu, Activation::Sigmoid),
            models: 96,
            loss: LossConfig::Repel { mode: RepelMode::NodeWise, alpha: 0.0625, epsilon: 1e-38 },
            optimizer: OptimizerConfig::adamw(2e-4, 0.01),
            lr_schedule: vec![LrStep { epoch: 5, lr: 1e-4 }],
            epochs: 10,
            data: DataConfig {
                patch_size: 5,
                batches: 2400,
                sampler: Some(SamplerConfig {
                    seed: 0,
                    batch_images: 500,
                    patches_per_image: 100,
                    minibatch_size: 500,
                    flip_probability: 0.5,
                    sequential_minibatches: true,
                }),
                ..DataConfig::default()
            },
            seed: 0,
            scale_factor: 1.0,
        }
    }

    /// Sampler with the run seed mixed in when none is configured explicitly.
    pub fn sampler(&self) -> SamplerConfig {
        let mut s = self.data.sampler.unwrap_or(SamplerConfig {
            seed: 0,
            batch_images: 100,
            patches_per_image: 100,
            minibatch_size: 500,
            flip_probability: if self.recipe == Recipe::PatchColor { 0.5 } else { 0.0 },
            sequential_minibatches: self.recipe == Recipe::PatchColor,
        });
        if self.data.sampler.is_none() {
            s.seed = self.seed;
        }
        s
    }

    /// `max(1, round(n * scale_factor))`.
    pub fn scaled(&self, n: usize) -> usize {
        ((n as f64 * self.scale_factor).round() as usize).max(1)
    }

    /// Learning rate of `epoch` after applying the schedule.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule
            .iter()
            .filter(|s| s.epoch <= epoch)
            .max_by_key(|s| s.epoch)
            .map_or(self.optimizer.lr, |s| s.lr)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.loss.validate()?;
        self.optimizer.validate()?;
        if !(self.scale_factor > 0.0 && self.scale_factor <= 1.0) {
            return Err(Error::validation(format!("scale_factor must lie in (0, 1], got {}", self.scale_factor)));
        }
        if self.models == 0 {
            return Err(Error::validation("models must be at least 1"));
        }
        for s in &self.lr_schedule {
            if !(s.lr > 0.0 && s.lr.is_finite()) {
                return Err(Error::validation(format!("schedule learning rate must be positive, got {}", s.lr)));
            }
        }
        let head = self.model.head();
        let (inputs, outputs) = (self.model.input_dim(), self.model.output_dim());
        match self.recipe {
            Recipe::TwoPixelOod | Recipe::TwoPixelMiod => {
                if inputs != 2 {
                    return Err(Error::validation(format!("two-pixel models take 2 inputs, spec has {inputs}")));
                }
                if head != Some(Activation::Softmax) || outputs < 2 {
                    return Err(Error::validation("two-pixel models need a softmax head with at least 2 states"));
                }
                if self.data.batch_size < 2 || self.data.batch_size > self.scaled(self.data.pairs) {
                    return Err(Error::validation(format!(
                        "batch_size {} must lie in 2..={} (scaled pairs)",
                        self.data.batch_size,
                        self.scaled(self.data.pairs)
                    )));
                }
            }
            Recipe::PatchGray | Recipe::PatchColor => {
                if head != Some(Activation::Sigmoid) {
                    return Err(Error::validation("patch models need a sigmoid head"));
                }
                let p = self.data.patch_size;
                let expect = p * p * self.recipe.channels();
                if inputs != expect {
                    return Err(Error::validation(format!(
                        "{p}x{p} patches with {} channels give {expect} inputs, spec has {inputs}",
                        self.recipe.channels()
                    )));
                }
                self.sampler().validate()?;
            }
        }
        match (self.recipe, &self.loss) {
            (Recipe::TwoPixelOod, LossConfig::Ood { .. }) if self.models == 1 => Ok(()),
            (Recipe::TwoPixelOod, LossConfig::Ood { .. }) => {
                Err(Error::validation("two_pixel_ood trains exactly one model; use two_pixel_miod"))
            }
            (Recipe::TwoPixelMiod, LossConfig::Miod { .. }) if self.models >= 2 => Ok(()),
            (Recipe::TwoPixelMiod, LossConfig::Miod { .. }) => {
                Err(Error::validation("two_pixel_miod needs at least 2 models"))
            }
            (Recipe::PatchGray | Recipe::PatchColor, LossConfig::Repel { .. }) => {
                if self.models * outputs < 2 {
                    return Err(Error::validation("patch recipes need at least 2 output nodes in total"));
                }
                Ok(())
            }
            (r, l) => Err(Error::validation(format!("loss {l:?} does not fit recipe {r:?}"))),
        }
    }
}
