use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use super::grid::argmax;
use crate::nn::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Independence {
    /// `1/2 sum |Q(a,b) - Q(a) Q(b)|`.
    pub tv_distance: f64,
    /// Largest `|Q_d(j) N_d - 1|` over both dimensions.
    pub marginal_dev: f64,
    pub joint: Array2<f64>,
}

/// Independence of two label sequences with `na` and `nb` states.
pub fn joint_independence_from_labels(a: &[usize], b: &[usize], na: usize, nb: usize) -> Result<Independence> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::validation("label sequences must be nonempty and of equal length"));
    }
    let mut joint = Array2::<f64>::zeros((na, nb));
    for (&i, &j) in a.iter().zip(b) {
        if i >= na || j >= nb {
            return Err(Error::validation(format!("label ({i}, {j}) outside {na} x {nb}")));
        }
        joint[[i, j]] += 1.0;
    }
    joint /= a.len() as f64;
    let qa = joint.sum_axis(ndarray::Axis(1));
    let qb = joint.sum_axis(ndarray::Axis(0));
    let mut tv = 0.0;
    for ((i, j), &q) in joint.indexed_iter() {
        tv += (q - qa[i] * qb[j]).abs();
    }
    let dev = |q: &ndarray::Array1<f64>, n: usize| q.iter().map(|&p| (p * n as f64 - 1.0).abs()).fold(0.0, f64::max);
    Ok(Independence { tv_distance: 0.5 * tv, marginal_dev: dev(&qa, na).max(dev(&qb, nb)), joint })
}

/// Argmax-state independence of two softmax models on `samples`.
pub fn empirical_joint_independence(models: &[Mlp<f32>], samples: ArrayView2<f32>) -> Result<Independence> {
    let [ma, mb] = models else {
        return Err(Error::validation(format!("independence needs exactly 2 models, got {}", models.len())));
    };
    let la: Vec<usize> = ma.forward(samples)?.rows().into_iter().map(argmax).collect();
    let lb: Vec<usize> = mb.forward(samples)?.rows().into_iter().map(argmax).collect();
    joint_independence_from_labels(&la, &lb, ma.output_dim(), mb.output_dim())
}
