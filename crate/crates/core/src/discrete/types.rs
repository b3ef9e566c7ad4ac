use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::NORMALIZATION_TOL;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Converts a value measured in nats into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

fn check_probability_vector(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::validation(format!("{what} must have at least one state")));
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(Error::validation(format!(
            "{what} entry {i} is {v}, probabilities must be finite and non-negative"
        )));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::validation(format!(
            "{what} sums to {total}, expected 1 within {NORMALIZATION_TOL:e}"
        )));
    }
    Ok(())
}

/// Probability mass over `M` discrete input states.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probs, "distribution")?;
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::validation(
                "weights must be non-negative with a positive finite sum",
            ));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::validation("distribution must have at least one state"));
        }
        Ok(Self {
            probs: vec![1.0 / m as f64; m],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Probability mass over the `N` output states of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    q_probs: Vec<f64>,
}

impl OutputDistribution {
    pub fn new(q_probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&q_probs, "output distribution")?;
        Ok(Self { q_probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.q_probs
    }

    pub fn len(&self) -> usize {
        self.q_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_probs.is_empty()
    }
}

/// A many-to-one map from `M` input states onto `N` nonempty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    group_sizes: Vec<usize>,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, n_groups: usize) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::validation("partition must cover at least one state"));
        }
        let mut group_sizes = vec![0usize; n_groups];
        for (i, &g) in assignment.iter().enumerate() {
            if g >= n_groups {
                return Err(Error::validation(format!(
                    "state {i} assigned to group {g}, but only {n_groups} groups exist"
                )));
            }
            group_sizes[g] += 1;
        }
        if let Some(j) = group_sizes.iter().position(|&n| n == 0) {
            return Err(Error::validation(format!("group {j} is empty")));
        }
        Ok(Self {
            assignment,
            group_sizes,
        })
    }

    /// Contiguous groups with the given sizes, laid out left to right.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let assignment = sizes
            .iter()
            .enumerate()
            .flat_map(|(j, &n)| std::iter::repeat_n(j, n))
            .collect();
        Self::new(assignment, sizes.len())
    }

    /// Contiguous partition of `m` states split before each boundary index.
    /// Boundaries must be strictly increasing and inside `1..m`.
    pub fn from_boundaries(m: usize, boundaries: &[usize]) -> Result<Self> {
        let mut prev = 0;
        let mut sizes = Vec::with_capacity(boundaries.len() + 1);
        for &b in boundaries {
            if b <= prev || b >= m {
                return Err(Error::validation(format!(
                    "boundary {b} out of order or outside 1..{m}"
                )));
            }
            sizes.push(b - prev);
            prev = b;
        }
        sizes.push(m - prev);
        Self::contiguous(&sizes)
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::new((0..m).collect(), m)
    }

    pub fn single(m: usize) -> Result<Self> {
        Self::new(vec![0; m], 1)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn n_states(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    /// Index ranges of the groups if every group occupies a contiguous run of
    /// states and groups appear in increasing order.
    pub fn contiguous_ranges(&self) -> Option<Vec<Range<usize>>> {
        let mut ranges: Vec<Range<usize>> = Vec::with_capacity(self.n_groups());
        let mut start = 0;
        for i in 1..=self.assignment.len() {
            if i == self.assignment.len() || self.assignment[i] != self.assignment[i - 1] {
                if self.assignment[start] != ranges.len() {
                    return None;
                }
                ranges.push(start..i);
                start = i;
            }
        }
        (ranges.len() == self.n_groups()).then_some(ranges)
    }

    /// Boundary indices of a contiguous partition (start index of every group
    /// after the first).
    pub fn boundaries(&self) -> Option<Vec<usize>> {
        self.contiguous_ranges()
            .map(|r| r.iter().skip(1).map(|g| g.start).collect())
    }
}
