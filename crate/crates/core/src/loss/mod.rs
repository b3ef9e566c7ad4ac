//! Even-coding objectives and their analytic gradients with respect to the
//! model outputs.
//!
//! Every loss returns `(loss, dloss/doutput)` in `f64`. Averages over pairs
//! are arithmetic means over all unique pairs, so loss magnitudes do not grow
//! with the batch size.

mod miod;
mod ood;
mod repel;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use miod::{e_miod, miod_objective, MultiDimBatch};
pub use ood::{e_ood, ood_objective};
pub use repel::{repel, repel_node_wise, repel_sample_wise};

use crate::{Error, Result};

/// Tolerance on softmax rows summing to one.
pub const ROW_SUM_TOL: f64 = 1e-5;

/// Default distance floor of the repulsion losses.
pub const DEFAULT_EPSILON: f64 = 1e-38;

/// Loss value and gradient with respect to the loss input.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OodLossConfig {
    /// Weight of the per-sample entropy term.
    #[serde(default = "default_k")]
    pub k: f64,
}

impl Default for OodLossConfig {
    fn default() -> Self {
        Self { k: default_k() }
    }
}

fn default_k() -> f64 {
    2.0 / 3.0
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepelMode {
    /// Samples repel each other in output space.
    SampleWise,
    /// Activation patterns of output nodes over the batch repel each other.
    NodeWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepelLossConfig {
    pub mode: RepelMode,
    /// Sparsity weight on the mean l1 norm of the outputs.
    #[serde(default)]
    pub alpha: f64,
    /// Added to every l1 distance before the logarithm.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl RepelLossConfig {
    pub fn new(mode: RepelMode, alpha: f64, epsilon: f64) -> Self {
        Self { mode, alpha, epsilon }
    }
}

/// Loss section of a training config, tagged by `"loss"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "lowercase", deny_unknown_fields)]
pub enum LossConfig {
    Ood {
        #[serde(default = "default_k")]
        k: f64,
    },
    Miod {
        #[serde(default = "default_k")]
        k: f64,
    },
    Repel {
        mode: RepelMode,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossConfig::Ood { k } | LossConfig::Miod { k } if !(k >= 0.0 && k.is_finite()) => {
                Err(Error::validation(format!("k must be non-negative, got {k}")))
            }
            LossConfig::Repel { alpha, epsilon, .. } if !(alpha >= 0.0 && epsilon >= 0.0) => Err(
                Error::validation("alpha and epsilon must be non-negative"),
            ),
            _ => Ok(()),
        }
    }

    pub fn repel_config(&self) -> Option<RepelLossConfig> {
        match *self {
            LossConfig::Repel { mode, alpha, epsilon } => Some(RepelLossConfig { mode, alpha, epsilon }),
            _ => None,
        }
    }

    pub fn ood_config(&self) -> Option<OodLossConfig> {
        match *self {
            LossConfig::Ood { k } | LossConfig::Miod { k } => Some(OodLossConfig { k }),
            _ => None,
        }
    }
}

fn check_finite(y: &ArrayView2<f64>, what: &str) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} input")));
    }
    Ok(())
}

/// Softmax-normalized rows, as produced by a softmax head.
fn check_rows_normalized(y: &ArrayView2<f64>, what: &str) -> Result<()> {
    check_finite(y, what)?;
    for (s, row) in y.rows().into_iter().enumerate() {
        let total: f64 = row.sum();
        if (total - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&v| v < 0.0) {
            return Err(Error::validation(format!(
                "{what}: row {s} sums to {total}, expected a probability vector"
            )));
        }
    }
    Ok(())
}

/// `ln` clamped away from zero; only ever multiplied by a vanishing factor.
#[inline]
fn safe_ln(v: f64) -> f64 {
    v.max(1e-300).ln()
}

#[inline]
fn plogp(v: f64) -> f64 {
    if v <= 1e-300 {
        0.0
    } else {
        v * v.ln()
    }
}
