use ndarray::ArrayView2;
use serde::Serialize;

use super::{binarize, joint_outputs};
use crate::nn::Mlp;
use crate::Result;

/// Number of equal-width bins over `[0, 1]`.
pub const HISTOGRAM_BINS: usize = 64;

/// Distance from 0 or 1 below which an output counts as binary.
pub const BINARY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputStats {
    pub samples: usize,
    /// Output values in equal bins; the last bin includes 1.
    pub histogram: Vec<HistogramBin>,
    /// Fraction of samples whose rounded output is 1, per node.
    pub activation_prob: Vec<f64>,
    /// `active_counts[n]` = samples with exactly `n` active nodes.
    pub active_counts: Vec<u64>,
    pub mean_active: f64,
    /// Fraction of all output values within [`BINARY_TOLERANCE`] of 0 or 1.
    pub near_binary_fraction: f64,
}

impl OutputStats {
    /// Largest over smallest activation probability (infinite if a node never fires).
    pub fn activation_spread(&self) -> f64 {
        let max = self.activation_prob.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.activation_prob.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Most common active-node count.
    pub fn active_count_mode(&self) -> usize {
        let mut best = 0;
        for (n, &c) in self.active_counts.iter().enumerate() {
            if c > self.active_counts[best] {
                best = n;
            }
        }
        best
    }
}

/// Statistics of an `S x D` matrix of sigmoid outputs.
pub fn output_stats_from_values(values: ArrayView2<f32>) -> OutputStats {
    let (s, d) = values.dim();
    let mut hist = vec![0u64; HISTOGRAM_BINS];
    let mut active = vec![0u64; d];
    let mut active_counts = vec![0u64; d + 1];
    let mut near = 0u64;
    for row in values.rows() {
        let mut n_active = 0;
        for (j, &v) in row.iter().enumerate() {
            let v = v as f64;
            let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            hist[bin] += 1;
            if binarize(v) {
                active[j] += 1;
                n_active += 1;
            }
            if v <= BINARY_TOLERANCE || v >= 1.0 - BINARY_TOLERANCE {
                near += 1;
            }
        }
        active_counts[n_active] += 1;
    }
    let histogram = hist
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 / HISTOGRAM_BINS as f64,
            hi: (k + 1) as f64 / HISTOGRAM_BINS as f64,
            count,
        })
        .collect();
    let sf = s.max(1) as f64;
    let mean_active = active_counts.iter().enumerate().map(|(n, &c)| n as f64 * c as f64).sum::<f64>() / sf;
    OutputStats {
        samples: s,
        histogram,
        activation_prob: active.iter().map(|&a| a as f64 / sf).collect(),
        active_counts,
        mean_active,
        near_binary_fraction: near as f64 / (s * d).max(1) as f64,
    }
}

/// Runs the model(s) over `samples` and summarizes the joint output.
pub fn empirical_output_stats(models: &[Mlp<f32>], samples: ArrayView2<f32>) -> Result<OutputStats> {
    let out = joint_outputs(models, samples)?;
    Ok(output_stats_from_values(out.view()))
}
