use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
    Sigmoid,
    Linear,
}

impl Activation {
    /// Code used by the weights file.
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Softmax => 1,
            Activation::Sigmoid => 2,
            Activation::Linear => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Relu,
            1 => Activation::Softmax,
            2 => Activation::Sigmoid,
            3 => Activation::Linear,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    #[serde(rename = "in")]
    pub in_dim: usize,
    #[serde(rename = "out")]
    pub out_dim: usize,
    pub act: Activation,
}

/// Layer layout of an MLP, e.g. `{"layers":[{"in":2,"out":200,"act":"relu"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Chains `dims[0] -> dims[1] -> ...` with `hidden` between layers and `head`
    /// on the last one.
    pub fn chain(dims: &[usize], hidden: Activation, head: Activation) -> Self {
        let n = dims.len().saturating_sub(1);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                act: if i + 1 == n { head } else { hidden },
            })
            .collect();
        Self { layers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::validation("model needs at least one layer"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::validation(format!("layer {i} has a zero dimension")));
            }
            if l.act == Activation::Softmax && i + 1 != self.layers.len() {
                return Err(Error::validation(format!(
                    "softmax is only allowed on the final layer, found on layer {i}"
                )));
            }
        }
        for (i, w) in self.layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::validation(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    w[0].out_dim,
                    i + 1,
                    w[1].in_dim
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn head(&self) -> Option<Activation> {
        self.layers.last().map(|l| l.act)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.out_dim * (l.in_dim + 1)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"layers":[{"in":2,"out":200,"act":"relu"},{"in":200,"out":16,"act":"softmax"}]}"#,
        )
        .unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.parameter_count(), 3 * 200 + 201 * 16);
        assert_eq!(spec, ModelSpec::chain(&[2, 200, 16], Activation::Relu, Activation::Softmax));
    }

    #[test]
    fn invalid_specs() {
        let unchained = ModelSpec::chain(&[2, 3], Activation::Relu, Activation::Relu);
        let mut layers = unchained.layers.clone();
        layers.push(LayerSpec { in_dim: 4, out_dim: 1, act: Activation::Sigmoid });
        assert!(ModelSpec { layers }.validate().is_err());

        let early_softmax = ModelSpec::chain(&[2, 3, 4], Activation::Softmax, Activation::Linear);
        assert!(early_softmax.validate().is_err());

        assert!(serde_json::from_str::<ModelSpec>(r#"{"layers":[],"extra":1}"#).is_err());
    }
}
