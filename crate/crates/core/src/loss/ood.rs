use ndarray::{Array2, ArrayView2, Axis};

use super::{check_finite, check_rows_normalized, plogp, safe_ln, LossOutput, OodLossConfig};
use crate::{Error, Result};

/// One-output-dimension even coding loss over a softmax batch (`S x N`):
/// `sum_j m_j log m_j + k * mean_s(-sum_j y_sj log y_sj)` with `m_j` the batch
/// mean of node `j`.
pub fn e_ood(batch: ArrayView2<f64>, cfg: &OodLossConfig) -> Result<LossOutput> {
    check_rows_normalized(&batch, "e_ood")?;
    ood_objective(batch, cfg.k)
}

/// The same formula without requiring normalized rows; its gradient is exact
/// over all non-negative inputs.
pub fn ood_objective(y: ArrayView2<f64>, k: f64) -> Result<LossOutput> {
    check_finite(&y, "e_ood")?;
    let s = y.nrows();
    if s < 2 {
        return Err(Error::validation(format!("e_ood needs at least 2 samples, got {s}")));
    }
    let sf = s as f64;
    let means: Vec<f64> = y
        .axis_iter(Axis(1))
        .map(|c| c.iter().sum::<f64>() / sf)
        .collect();
    let balance: f64 = means.iter().map(|&m| plogp(m)).sum();
    let per_sample: f64 = -y.iter().map(|&v| plogp(v)).sum::<f64>() / sf;

    let mean_term: Vec<f64> = means.iter().map(|&m| (safe_ln(m) + 1.0) / sf).collect();
    let grad = Array2::from_shape_fn(y.raw_dim(), |(i, j)| {
        mean_term[j] - k * (safe_ln(y[[i, j]]) + 1.0) / sf
    });
    Ok(LossOutput {
        loss: balance + k * per_sample,
        grad,
    })
}
