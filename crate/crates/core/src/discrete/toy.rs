//! Two-group split of a linearly decaying distribution, where the
//! transmission optimum and the modeling optimum can be written in closed form.

use super::{best_contiguous_partition, DiscreteDistribution, Objective};
use crate::{Error, Result};

/// Number of points on the emitted `H_q - log M` curve.
const CURVE_POINTS: usize = 999;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyExampleResult {
    pub m: usize,
    /// Size of the first group that balances both outputs.
    pub a_transmission: usize,
    /// Size of the first group that minimizes `H_q`.
    pub a_modeling: usize,
    /// `(r, H_q - log M)` with `r = a / M`.
    pub hq_curve: Vec<(f64, f64)>,
}

/// `p(x_i) = (2/M)(1 - i/M)` for `i = 0..M`, renormalized to sum to one.
pub fn linear_decay(m: usize) -> Result<DiscreteDistribution> {
    if m < 2 {
        return Err(Error::validation("linear decay needs at least two states"));
    }
    let mf = m as f64;
    let weights: Vec<f64> = (0..m).map(|i| (2.0 / mf) * (1.0 - i as f64 / mf)).collect();
    DiscreteDistribution::from_weights(&weights)
}

/// `H_q - log M = -r(2-r) log(2-r) - (1-r)^2 log(1-r)` for the continuous
/// linear-decay model.
pub fn toy_hq_minus_log_m(r: f64) -> f64 {
    let a = 2.0 - r;
    let b = 1.0 - r;
    let second = if b > 0.0 { b * b * b.ln() } else { 0.0 };
    -r * a * a.ln() - second
}

pub fn toy_example(m: usize) -> Result<ToyExampleResult> {
    if m < 1000 {
        return Err(Error::validation(format!(
            "toy example expects M >= 1000 so the continuum formulas hold, got {m}"
        )));
    }
    let mf = m as f64;
    let a_transmission = ((1.0 - std::f64::consts::FRAC_1_SQRT_2) * mf).round() as usize;

    let mut a_modeling = 1;
    let mut best = f64::INFINITY;
    for a in 1..m {
        let v = toy_hq_minus_log_m(a as f64 / mf);
        if v < best {
            best = v;
            a_modeling = a;
        }
    }

    let hq_curve = (1..=CURVE_POINTS)
        .map(|i| {
            let r = i as f64 / (CURVE_POINTS + 1) as f64;
            (r, toy_hq_minus_log_m(r))
        })
        .collect();

    Ok(ToyExampleResult {
        m,
        a_transmission,
        a_modeling,
        hq_curve,
    })
}

/// First-group size chosen by the exact search on the discretized distribution.
pub fn searched_split(m: usize, objective: Objective) -> Result<usize> {
    let p = linear_decay(m)?;
    let f = best_contiguous_partition(&p, 2, objective)?;
    Ok(f.group_sizes()[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_optima_at_m_1e5() {
        let toy = toy_example(100_000).unwrap();
        assert!((toy.a_transmission as i64 - 29_289).abs() <= 1);
        let r = toy.a_modeling as f64 / 1e5;
        assert!((r - 0.602).abs() <= 0.002, "r = {r}");
        assert_eq!(toy.hq_curve.len(), CURVE_POINTS);
    }

    #[test]
    fn search_agrees_with_closed_form() {
        let m = 20_000;
        let toy = toy_example(m).unwrap();
        let searched = searched_split(m, Objective::MinModeledEntropy).unwrap();
        assert!((searched as i64 - toy.a_modeling as i64).abs() <= 2);
        let searched = searched_split(m, Objective::MaxOutputEntropy).unwrap();
        assert!((searched as i64 - toy.a_transmission as i64).abs() <= 2);
    }

    #[test]
    fn linear_decay_peak() {
        let p = linear_decay(1000).unwrap();
        assert!((p.probs()[0] - 2.0 / 1000.0).abs() < 1e-5);
        assert!(p.probs().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn small_m_rejected() {
        assert!(toy_example(999).is_err());
    }
}
