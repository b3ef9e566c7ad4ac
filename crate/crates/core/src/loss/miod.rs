use ndarray::{Array2, ArrayView2};

use super::{check_finite, check_rows_normalized, plogp, safe_ln, OodLossConfig};
use crate::{Error, Result};

/// Softmax outputs of `D` output dimensions over the same `S` samples; each
/// entry is `S x N_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDimBatch {
    dims: Vec<Array2<f64>>,
}

impl MultiDimBatch {
    pub fn new(dims: Vec<Array2<f64>>) -> Result<Self> {
        if let Some(first) = dims.first() {
            if dims.iter().any(|d| d.nrows() != first.nrows()) {
                return Err(Error::validation("all output dimensions must share the batch"));
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[Array2<f64>] {
        &self.dims
    }

    pub fn n_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn samples(&self) -> usize {
        self.dims.first().map_or(0, |d| d.nrows())
    }

    pub fn state_counts(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d.ncols()).collect()
    }
}

/// Multiple-independent-output-dimension loss; gradients come back per
/// dimension in the batch's layout.
pub fn e_miod(batch: &MultiDimBatch, cfg: &OodLossConfig) -> Result<(f64, Vec<Array2<f64>>)> {
    for (d, y) in batch.dims().iter().enumerate() {
        check_rows_normalized(&y.view(), &format!("e_miod dimension {d}"))?;
    }
    let views: Vec<ArrayView2<f64>> = batch.dims().iter().map(|d| d.view()).collect();
    miod_objective(&views, cfg.k)
}

/// `e_miod` without the normalization check.
pub fn miod_objective(dims: &[ArrayView2<f64>], k: f64) -> Result<(f64, Vec<Array2<f64>>)> {
    let d = dims.len();
    if d < 2 {
        return Err(Error::validation(format!(
            "e_miod needs at least two output dimensions, got {d}; use e_ood for one"
        )));
    }
    let s = dims[0].nrows();
    if s == 0 || dims.iter().any(|y| y.nrows() != s) {
        return Err(Error::validation("e_miod dimensions must share a nonempty batch"));
    }
    for (i, y) in dims.iter().enumerate() {
        check_finite(y, &format!("e_miod dimension {i}"))?;
    }
    let sf = s as f64;
    let pairs = (d * (d - 1) / 2) as f64;
    let mut grads: Vec<Array2<f64>> = dims.iter().map(|y| Array2::zeros(y.raw_dim())).collect();

    let mut joint_term = 0.0;
    for a in 0..d {
        for b in a + 1..d {
            // joint[j][j'] = mean_s y_a[s][j] * y_b[s][j']
            let joint = dims[a].t().dot(&dims[b]) / sf;
            joint_term += joint.iter().map(|&p| plogp(p)).sum::<f64>();
            let g = joint.mapv(|p| (safe_ln(p) + 1.0) / (pairs * sf));
            grads[a] += &dims[b].dot(&g.t());
            grads[b] += &dims[a].dot(&g);
        }
    }
    joint_term /= pairs;

    let mut entropy_term = 0.0;
    let scale = k / (d as f64 * sf);
    for (y, g) in dims.iter().zip(&mut grads) {
        entropy_term -= y.iter().map(|&v| plogp(v)).sum::<f64>();
        ndarray::Zip::from(g).and(y).for_each(|g, &v| *g -= scale * (safe_ln(v) + 1.0));
    }
    let loss = joint_term + k / d as f64 * entropy_term / sf;
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::numerical_gradient;
    use crate::rng::{stream, Rng};
    use ndarray::{array, Axis};

    fn random_softmax(s: usize, n: usize, rng: &mut impl Rng) -> Array2<f64> {
        let mut y = Array2::from_shape_simple_fn((s, n), || rng.random_range(-2.0f64..2.0).exp());
        for mut r in y.rows_mut() {
            let t = r.sum();
            r /= t;
        }
        y
    }

    #[test]
    fn full_coverage_attains_minus_log_four() {
        let a = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        let b = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let batch = MultiDimBatch::new(vec![a, b]).unwrap();
        let (loss, _) = e_miod(&batch, &OodLossConfig::default()).unwrap();
        assert!((loss + 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn copied_dimension_concentrates_on_two_cells() {
        let a = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        let batch = MultiDimBatch::new(vec![a.clone(), a]).unwrap();
        let (loss, _) = e_miod(&batch, &OodLossConfig::default()).unwrap();
        // joint table diag(1/2, 1/2): sum P log P = -log 2; one-hot rows add nothing
        assert!((loss + 2f64.ln()).abs() < 1e-15);
        assert!(loss > -4f64.ln());
    }

    #[test]
    fn single_dimension_is_an_error() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let batch = MultiDimBatch::new(vec![a]).unwrap();
        assert!(matches!(e_miod(&batch, &OodLossConfig::default()), Err(Error::Validation(_))));
    }

    #[test]
    fn reduces_to_e_ood_structure_for_three_dims() {
        // three dims with different state counts; gradient by finite differences
        let mut rng = stream(4, 0);
        let dims = vec![
            random_softmax(5, 2, &mut rng),
            random_softmax(5, 3, &mut rng),
            random_softmax(5, 4, &mut rng),
        ];
        let views: Vec<_> = dims.iter().map(|d| d.view()).collect();
        let (_, grads) = miod_objective(&views, 0.5).unwrap();
        for (i, g) in grads.iter().enumerate() {
            let fd = numerical_gradient(dims[i].view(), 1e-6, |v| {
                let mut vs = views.clone();
                vs[i] = v;
                Ok(miod_objective(&vs, 0.5)?.0)
            })
            .unwrap();
            for (a, n) in g.iter().zip(fd.iter()) {
                assert!((a - n).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {n}");
            }
        }
    }

    #[test]
    fn sample_permutation_invariant() {
        let mut rng = stream(8, 0);
        let dims = vec![random_softmax(6, 3, &mut rng), random_softmax(6, 3, &mut rng)];
        let order = [3, 0, 5, 1, 4, 2];
        let permuted: Vec<_> = dims.iter().map(|d| d.select(Axis(0), &order)).collect();
        let a = e_miod(&MultiDimBatch::new(dims).unwrap(), &OodLossConfig::default()).unwrap().0;
        let b = e_miod(&MultiDimBatch::new(permuted).unwrap(), &OodLossConfig::default()).unwrap().0;
        assert!((a - b).abs() < 1e-12);
    }
}
