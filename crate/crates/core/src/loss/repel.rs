use ndarray::{Array2, ArrayView2};

use super::{check_finite, LossOutput, RepelLossConfig, RepelMode};
use crate::{Error, Result};

/// Dispatches on `cfg.mode`.
pub fn repel(batch: ArrayView2<f64>, cfg: &RepelLossConfig) -> Result<LossOutput> {
    match cfg.mode {
        RepelMode::SampleWise => repel_sample_wise(batch, cfg),
        RepelMode::NodeWise => repel_node_wise(batch, cfg),
    }
}

/// Output vectors of distinct samples (`S x D` rows) repel each other.
pub fn repel_sample_wise(batch: ArrayView2<f64>, cfg: &RepelLossConfig) -> Result<LossOutput> {
    check(&batch, cfg)?;
    if batch.nrows() < 2 {
        return Err(Error::validation(format!(
            "sample-wise repel needs at least 2 samples, got {}",
            batch.nrows()
        )));
    }
    let (pair_loss, mut grad) = pairwise(batch, cfg.epsilon)?;
    let sparsity = add_sparsity(batch, cfg.alpha, &mut grad);
    Ok(LossOutput {
        loss: pair_loss + sparsity,
        grad,
    })
}

/// Activation patterns of distinct nodes (columns of the batch) repel each
/// other; the sparsity term is the same as in the sample-wise form.
pub fn repel_node_wise(batch: ArrayView2<f64>, cfg: &RepelLossConfig) -> Result<LossOutput> {
    check(&batch, cfg)?;
    if batch.ncols() < 2 {
        return Err(Error::validation(format!(
            "node-wise repel needs at least 2 nodes, got {}",
            batch.ncols()
        )));
    }
    let (pair_loss, grad_t) = pairwise(batch.t(), cfg.epsilon)?;
    let mut grad = grad_t.reversed_axes();
    let sparsity = add_sparsity(batch, cfg.alpha, &mut grad);
    Ok(LossOutput {
        loss: pair_loss + sparsity,
        grad: grad.as_standard_layout().into_owned(),
    })
}

fn check(batch: &ArrayView2<f64>, cfg: &RepelLossConfig) -> Result<()> {
    if !(cfg.alpha >= 0.0 && cfg.epsilon >= 0.0) {
        return Err(Error::validation("alpha and epsilon must be non-negative"));
    }
    check_finite(batch, "repel")
}

/// Mean over unique row pairs of `-ln(l1 + eps)` and its gradient.
fn pairwise(rows: ArrayView2<f64>, eps: f64) -> Result<(f64, Array2<f64>)> {
    let (n, d) = rows.dim();
    let pairs = (n * (n - 1) / 2) as f64;
    let owned = rows.as_standard_layout();
    let y = owned.as_slice().expect("standard layout");
    let mut grad = vec![0.0f64; n * d];
    let mut gi = vec![0.0f64; d];
    let mut total = 0.0;
    for i in 0..n {
        let a = &y[i * d..(i + 1) * d];
        gi.iter_mut().for_each(|g| *g = 0.0);
        let (_, later) = grad.split_at_mut((i + 1) * d);
        let mut acc = 0.0;
        for (j, gj) in (i + 1..n).zip(later.chunks_exact_mut(d)) {
            let b = &y[j * d..(j + 1) * d];
            let dist = l1(a, b) + eps;
            if dist <= 0.0 {
                return Err(Error::NonFinite(format!(
                    "repel: rows {i} and {j} coincide with a zero distance floor"
                )));
            }
            acc -= dist.ln();
            let w = 1.0 / (pairs * dist);
            for (((x, y), gi), gj) in a.iter().zip(b).zip(gi.iter_mut()).zip(gj.iter_mut()) {
                let diff = x - y;
                // subgradient 0 at ties
                let g = if diff == 0.0 { 0.0 } else { -w.copysign(diff) };
                *gi += g;
                *gj -= g;
            }
        }
        for (g, v) in grad[i * d..(i + 1) * d].iter_mut().zip(&gi) {
            *g += v;
        }
        total += acc;
    }
    let grad = Array2::from_shape_vec((n, d), grad).expect("n x d buffer");
    Ok((total / pairs, grad))
}

/// l1 distance with four independent partial sums.
#[inline]
fn l1(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| (x - y).abs()).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += (x[k] - y[k]).abs();
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `alpha * mean_s |y_s|_1`, with `sgn(0) = 0` in the gradient.
fn add_sparsity(batch: ArrayView2<f64>, alpha: f64, grad: &mut Array2<f64>) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let s = batch.nrows() as f64;
    ndarray::Zip::from(grad).and(&batch).for_each(|g, &v| {
        if v != 0.0 {
            *g += alpha / s * v.signum();
        }
    });
    alpha * batch.iter().map(|v| v.abs()).sum::<f64>() / s
}
