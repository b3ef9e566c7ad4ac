use ndarray::Array2;
use serde::Serialize;

use crate::nn::Mlp;
use crate::{Error, Result};

/// Argmax state of each output dimension at the cell centres of an
/// `R x R` grid over the unit square. `labels[d][[row, col]]` belongs to the
/// input `(x_a, x_b) = ((col + 0.5) / R, (row + 0.5) / R)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelGrid {
    pub resolution: usize,
    pub states: Vec<usize>,
    pub labels: Vec<Array2<u16>>,
}

impl LabelGrid {
    pub fn distinct_labels(&self, dim: usize) -> usize {
        let mut seen = vec![false; self.states[dim]];
        for &l in &self.labels[dim] {
            seen[l as usize] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }
}

/// First index of the largest value.
pub fn argmax<'a>(row: impl IntoIterator<Item = &'a f32>) -> usize {
    let mut best = 0;
    let mut best_v = f32::NEG_INFINITY;
    for (i, &v) in row.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

pub fn label_grid(models: &[Mlp<f32>], resolution: usize) -> Result<LabelGrid> {
    if resolution == 0 {
        return Err(Error::validation("grid resolution must be positive"));
    }
    if models.is_empty() || models.iter().any(|m| m.input_dim() != 2) {
        return Err(Error::validation("label grids need two-input models"));
    }
    let r = resolution;
    let points = Array2::from_shape_fn((r * r, 2), |(i, k)| {
        let (row, col) = (i / r, i % r);
        let v = if k == 0 { col } else { row };
        (v as f32 + 0.5) / r as f32
    });
    let mut labels = Vec::with_capacity(models.len());
    for m in models {
        let out = m.forward(points.view())?;
        let flat: Vec<u16> = out.rows().into_iter().map(|row| argmax(row) as u16).collect();
        labels.push(Array2::from_shape_vec((r, r), flat).expect("r*r labels"));
    }
    Ok(LabelGrid { resolution, states: models.iter().map(|m| m.output_dim()).collect(), labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, ModelSpec};

    #[test]
    fn shape_and_constant_zero_model() {
        let m = Mlp::<f32>::zeros(&ModelSpec::chain(&[2, 5, 3], Activation::Relu, Activation::Softmax)).unwrap();
        let g = label_grid(&[m], 2).unwrap();
        assert_eq!(g.labels[0].dim(), (2, 2));
        assert!(g.labels[0].iter().all(|&l| l == 0));
        assert_eq!(g.distinct_labels(0), 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[0.2f32, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5f32, 0.5]), 0);
    }
}
