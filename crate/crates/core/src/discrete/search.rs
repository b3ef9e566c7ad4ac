use serde::{Deserialize, Serialize};

use super::{DiscreteDistribution, Partition, ZERO_FLOOR};
use crate::{Error, Result};

/// Which goal a contiguous partition is optimized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Maximize the output entropy `H_Q` (information transmission).
    #[serde(rename = "max_HQ")]
    MaxOutputEntropy,
    /// Minimize the modeled entropy `H_q` (distribution modeling).
    #[serde(rename = "min_Hq")]
    MinModeledEntropy,
}

impl Objective {
    /// Per-group contribution to the quantity being minimized.
    fn group_cost(self, mass: f64, size: usize) -> f64 {
        if mass <= ZERO_FLOOR {
            return 0.0;
        }
        match self {
            Objective::MaxOutputEntropy => mass * mass.ln(),
            Objective::MinModeledEntropy => -mass * (mass / size as f64).ln(),
        }
    }
}

/// `a` beats `b` only when smaller by more than rounding noise, so that among
/// equal-cost candidates the first one visited (smallest boundary) wins.
fn improves(a: f64, b: f64) -> bool {
    a < b - 1e-13 * b.abs().max(1e-300)
}

fn check_request(p: &DiscreteDistribution, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("number of groups must be at least 1"));
    }
    if n > p.len() {
        return Err(Error::validation(format!(
            "cannot split {} states into {n} nonempty groups",
            p.len()
        )));
    }
    Ok(())
}

fn prefix_sums(p: &DiscreteDistribution) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(p.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in p.probs() {
        acc += v;
        prefix.push(acc);
    }
    prefix
}

/// Globally optimal contiguous partition of `p` into `n` groups.
///
/// Dynamic programming over suffixes with prefix sums. The suffix tables are
/// filled for every start position except at the outermost level, which only
/// needs position 0, so two groups cost `O(M)` and `n` groups `O(n M^2)`.
/// Boundaries are reconstructed left to right taking the smallest index among
/// ties, which yields the lexicographically smallest optimal boundary vector.
pub fn best_contiguous_partition(
    p: &DiscreteDistribution,
    n: usize,
    objective: Objective,
) -> Result<Partition> {
    check_request(p, n)?;
    let m = p.len();
    let prefix = prefix_sums(p);
    let cost = |a: usize, b: usize| objective.group_cost(prefix[b] - prefix[a], b - a);

    // best[j][s]: optimal cost of covering states s..m with j + 1 groups
    // choice[j][s]: end of the first of those groups
    let mut best: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut choice: Vec<Vec<usize>> = Vec::with_capacity(n);
    best.push((0..m).map(|s| cost(s, m)).collect());
    choice.push(vec![m; m]);
    for j in 1..n {
        let starts: Vec<usize> = if j == n - 1 { vec![0] } else { (0..m - j).collect() };
        let mut row = vec![f64::INFINITY; m];
        let mut row_choice = vec![usize::MAX; m];
        for s in starts {
            let mut best_cost = f64::INFINITY;
            let mut best_end = usize::MAX;
            // the remaining j groups need at least j states
            for end in s + 1..=m - j {
                let c = cost(s, end) + best[j - 1][end];
                if best_end == usize::MAX || improves(c, best_cost) {
                    best_cost = c;
                    best_end = end;
                }
            }
            row[s] = best_cost;
            row_choice[s] = best_end;
        }
        best.push(row);
        choice.push(row_choice);
    }

    let mut boundaries = Vec::with_capacity(n - 1);
    let mut s = 0;
    for j in (1..n).rev() {
        let end = choice[j][s];
        boundaries.push(end);
        s = end;
    }
    Partition::from_boundaries(m, &boundaries)
}

/// Brute-force enumeration of every contiguous partition; the test oracle for
/// [`best_contiguous_partition`]. Limited to `M <= 64`.
pub fn exhaustive_contiguous_partition(
    p: &DiscreteDistribution,
    n: usize,
    objective: Objective,
) -> Result<Partition> {
    check_request(p, n)?;
    let m = p.len();
    if m > 64 {
        return Err(Error::validation(format!(
            "exhaustive search supports at most 64 states, got {m}"
        )));
    }
    let prefix = prefix_sums(p);
    let evaluate = |bounds: &[usize]| -> f64 {
        let mut prev = 0;
        let mut total = 0.0;
        for &b in bounds.iter().chain(std::iter::once(&m)) {
            total += objective.group_cost(prefix[b] - prefix[prev], b - prev);
            prev = b;
        }
        total
    };

    // lexicographic enumeration of (n - 1)-subsets of 1..m
    let k = n - 1;
    let mut bounds: Vec<usize> = (1..=k).collect();
    let mut best_bounds = bounds.clone();
    let mut best_cost = evaluate(&bounds);
    loop {
        let mut i = k;
        loop {
            if i == 0 {
                return Partition::from_boundaries(m, &best_bounds);
            }
            i -= 1;
            if bounds[i] < m - (k - i) {
                break;
            }
        }
        bounds[i] += 1;
        for t in i + 1..k {
            bounds[t] = bounds[t - 1] + 1;
        }
        let c = evaluate(&bounds);
        if improves(c, best_cost) {
            best_cost = c;
            best_bounds.clone_from(&bounds);
        }
    }
}
