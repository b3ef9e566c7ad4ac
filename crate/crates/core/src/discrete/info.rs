use super::{neg_plogp, DiscreteDistribution, LogBase, OutputDistribution, Partition, ZERO_FLOOR};
use crate::{Error, Result};

/// Shannon entropy of raw probabilities in nats.
pub fn entropy_nats(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| neg_plogp(p)).sum()
}

pub fn entropy(dist: &DiscreteDistribution, base: LogBase) -> f64 {
    base.from_nats(entropy_nats(dist.probs()))
}

fn check_sizes(p_len: usize, f: &Partition) -> Result<()> {
    if p_len != f.n_states() {
        return Err(Error::validation(format!(
            "distribution has {p_len} states but partition covers {}",
            f.n_states()
        )));
    }
    Ok(())
}

/// Output-state distribution `Q(y_j) = sum over G_j of p(x)`.
pub fn push_forward(p: &DiscreteDistribution, f: &Partition) -> Result<OutputDistribution> {
    check_sizes(p.len(), f)?;
    let mut q = vec![0.0; f.n_groups()];
    for (&px, &g) in p.probs().iter().zip(f.assignment()) {
        q[g] += px;
    }
    OutputDistribution::new(q)
}

/// The piecewise-constant input model `q(x) = Q(y_j) / n_j` for `x` in `G_j`.
pub fn modeled_distribution(q: &OutputDistribution, f: &Partition) -> Result<DiscreteDistribution> {
    if q.len() != f.n_groups() {
        return Err(Error::validation(format!(
            "output distribution has {} states but partition has {} groups",
            q.len(),
            f.n_groups()
        )));
    }
    let level: Vec<f64> = q
        .probs()
        .iter()
        .zip(f.group_sizes())
        .map(|(&qj, &n)| qj / n as f64)
        .collect();
    DiscreteDistribution::new(f.assignment().iter().map(|&g| level[g]).collect())
}

fn grouped_term(mass: f64, size: usize) -> f64 {
    if mass <= ZERO_FLOOR {
        0.0
    } else {
        -mass * (mass / size as f64).ln()
    }
}

/// `H_q` evaluated group by group: `-sum_j Q_j log(Q_j / n_j)`.
pub fn hq_grouped(q: &OutputDistribution, f: &Partition) -> Result<f64> {
    if q.len() != f.n_groups() {
        return Err(Error::validation(format!(
            "output distribution has {} states but partition has {} groups",
            q.len(),
            f.n_groups()
        )));
    }
    Ok(q
        .probs()
        .iter()
        .zip(f.group_sizes())
        .map(|(&qj, &n)| grouped_term(qj, n))
        .sum())
}

/// Cross entropy `H_pq = -sum p log q`. Infinite when `q` misses mass of `p`.
pub fn cross_entropy(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::validation("cross entropy of distributions with different sizes"));
    }
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| {
            if pi <= ZERO_FLOOR {
                0.0
            } else if qi <= ZERO_FLOOR {
                f64::INFINITY
            } else {
                -pi * qi.ln()
            }
        })
        .sum())
}

/// Textbook `D_KL(p || q) = sum p log(p / q)`.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::validation("KL divergence of distributions with different sizes"));
    }
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| {
            if pi <= ZERO_FLOOR {
                0.0
            } else if qi <= ZERO_FLOOR {
                f64::INFINITY
            } else {
                pi * (pi / qi).ln()
            }
        })
        .sum())
}

/// `D_KL(p || q)` for the model induced by `f`, computed as `H_q - H_p`.
pub fn kl_p_q(p: &DiscreteDistribution, f: &Partition) -> Result<f64> {
    let q = push_forward(p, f)?;
    Ok(hq_grouped(&q, f)? - entropy_nats(p.probs()))
}

/// Mutual information between input and output of a deterministic partition,
/// evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionRate {
    /// Summed over the full `M x N` joint table.
    pub direct: f64,
    /// Output entropy `H_Q`.
    pub via_output_entropy: f64,
}

pub fn transmission_rate(p: &DiscreteDistribution, f: &Partition) -> Result<TransmissionRate> {
    let q = push_forward(p, f)?;
    let qy = q.probs();
    let mut direct = 0.0;
    for (i, &px) in p.probs().iter().enumerate() {
        for (j, &qj) in qy.iter().enumerate() {
            let joint = if f.assignment()[i] == j { px } else { 0.0 };
            if joint > ZERO_FLOOR {
                direct += joint * (joint / (px * qj)).ln();
            }
        }
    }
    Ok(TransmissionRate {
        direct,
        via_output_entropy: entropy_nats(qy),
    })
}

/// Change of `H_q` when a single boundary state moves between adjacent groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryShift {
    pub exact: f64,
    pub first_order: f64,
    /// Index of the state that changes group.
    pub moved_state: usize,
    /// Probability of the moved state.
    pub delta: f64,
}

/// Moves the donor's state adjacent to the receiver into the receiver and
/// reports the exact change of `H_q` next to `q2 - q1 + delta log(q1/q2)`.
pub fn boundary_shift_delta_hq(
    p: &DiscreteDistribution,
    f: &Partition,
    donor: usize,
    receiver: usize,
) -> Result<BoundaryShift> {
    check_sizes(p.len(), f)?;
    let ranges = f
        .contiguous_ranges()
        .ok_or_else(|| Error::contract("boundary shift requires a contiguous 1D partition"))?;
    if donor >= ranges.len() || receiver >= ranges.len() {
        return Err(Error::contract("group index out of range"));
    }
    let moved_state = if receiver == donor + 1 {
        ranges[donor].end - 1
    } else if donor == receiver + 1 {
        ranges[donor].start
    } else {
        return Err(Error::contract(format!(
            "groups {donor} and {receiver} are not adjacent"
        )));
    };
    let n1 = ranges[donor].len();
    let n2 = ranges[receiver].len();
    if n1 < 2 {
        return Err(Error::contract(format!("donor group {donor} has a single state")));
    }
    let q = push_forward(p, f)?;
    let (mass1, mass2) = (q.probs()[donor], q.probs()[receiver]);
    let delta = p.probs()[moved_state];

    // only the two zones involved change
    let before = grouped_term(mass1, n1) + grouped_term(mass2, n2);
    let after = grouped_term(mass1 - delta, n1 - 1) + grouped_term(mass2 + delta, n2 + 1);
    let exact = after - before;

    let q1 = mass1 / n1 as f64;
    let q2 = mass2 / n2 as f64;
    let first_order = q2 - q1 + delta * (q1 / q2).ln();
    Ok(BoundaryShift {
        exact,
        first_order,
        moved_state,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay6() -> DiscreteDistribution {
        DiscreteDistribution::from_weights(&[6.0, 5.0, 4.0, 3.0, 2.0, 1.0]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let u = DiscreteDistribution::uniform(4).unwrap();
        assert!((entropy(&u, LogBase::Nats) - 4f64.ln()).abs() < 1e-12);
        let point = DiscreteDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(entropy(&point, LogBase::Nats), 0.0);
        let d = DiscreteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((entropy(&d, LogBase::Bits) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
    }

    #[test]
    fn push_forward_examples() {
        let u = DiscreteDistribution::uniform(6).unwrap();
        let f = Partition::contiguous(&[2, 4]).unwrap();
        let q = push_forward(&u, &f).unwrap();
        assert!((q.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((q.probs()[1] - 2.0 / 3.0).abs() < 1e-15);

        let p = decay6();
        let q = push_forward(&p, &Partition::identity(6).unwrap()).unwrap();
        assert_eq!(q.probs(), p.probs());

        let q = push_forward(&p, &Partition::from_boundaries(6, &[2]).unwrap()).unwrap();
        assert!((q.probs()[0] - 11.0 / 21.0).abs() < 1e-15);
        assert!((q.probs()[1] - 10.0 / 21.0).abs() < 1e-15);

        let bad = Partition::identity(5).unwrap();
        assert!(matches!(push_forward(&p, &bad), Err(Error::Validation(_))));
    }

    #[test]
    fn modeled_distribution_examples() {
        let f = Partition::contiguous(&[2, 4]).unwrap();
        let q = OutputDistribution::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let m = modeled_distribution(&q, &f).unwrap();
        for v in m.probs() {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }

        let q = OutputDistribution::new(vec![11.0 / 21.0, 10.0 / 21.0]).unwrap();
        let m = modeled_distribution(&q, &f).unwrap();
        let expected = [11.0 / 42.0, 11.0 / 42.0, 10.0 / 84.0, 10.0 / 84.0, 10.0 / 84.0, 10.0 / 84.0];
        for (a, b) in m.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }

        let q = OutputDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let m = modeled_distribution(&q, &Partition::identity(3).unwrap()).unwrap();
        assert_eq!(m.probs(), q.probs());
    }

    #[test]
    fn hq_grouped_examples() {
        let p = decay6();
        let f = Partition::from_boundaries(6, &[2]).unwrap();
        let q = push_forward(&p, &f).unwrap();
        // hand oracle: -(11/21) ln(11/42) - (10/21) ln(10/84)
        let oracle = -(11.0f64 / 21.0) * (11.0f64 / 42.0).ln() - (10.0f64 / 21.0) * (10.0f64 / 84.0).ln();
        let hq = hq_grouped(&q, &f).unwrap();
        assert!((hq - oracle).abs() < 1e-14);
        assert!((hq - 1.715_230_231_372_745).abs() < 1e-12);

        let id = Partition::identity(6).unwrap();
        let q = push_forward(&p, &id).unwrap();
        assert!((hq_grouped(&q, &id).unwrap() - entropy_nats(q.probs())).abs() < 1e-15);

        let one = Partition::single(6).unwrap();
        let q = push_forward(&p, &one).unwrap();
        assert!((hq_grouped(&q, &one).unwrap() - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let u = DiscreteDistribution::uniform(6).unwrap();
        let f = Partition::contiguous(&[1, 3, 2]).unwrap();
        assert!(kl_p_q(&u, &f).unwrap().abs() < 1e-12);

        let p = decay6();
        assert!(kl_p_q(&p, &Partition::identity(6).unwrap()).unwrap().abs() < 1e-12);

        let f = Partition::from_boundaries(6, &[2]).unwrap();
        let q = modeled_distribution(&push_forward(&p, &f).unwrap(), &f).unwrap();
        let direct = kl_divergence(&p, &q).unwrap();
        let via = kl_p_q(&p, &f).unwrap();
        assert!(direct > 0.0);
        assert!((direct - via).abs() < 1e-12);
    }

    #[test]
    fn transmission_examples() {
        let p = decay6();
        let t = transmission_rate(&p, &Partition::identity(6).unwrap()).unwrap();
        assert!((t.direct - entropy_nats(p.probs())).abs() < 1e-12);
        assert!((t.via_output_entropy - entropy_nats(p.probs())).abs() < 1e-12);
        let t = transmission_rate(&p, &Partition::single(6).unwrap()).unwrap();
        assert!(t.direct.abs() < 1e-15);
        assert!(t.via_output_entropy.abs() < 1e-15);
    }

    #[test]
    fn boundary_shift_examples() {
        let p = decay6();
        let f = Partition::from_boundaries(6, &[3]).unwrap();
        // group 1 donates its first state (index 3) to group 0: boundary 3 -> 4
        let shift = boundary_shift_delta_hq(&p, &f, 1, 0).unwrap();
        assert_eq!(shift.moved_state, 3);
        let hq_at = |b: usize| {
            let f = Partition::from_boundaries(6, &[b]).unwrap();
            hq_grouped(&push_forward(&p, &f).unwrap(), &f).unwrap()
        };
        assert!((shift.exact - (hq_at(4) - hq_at(3))).abs() < 1e-14);

        // moving boundary 2 -> 3: group 1 donates state 2 to group 0
        let f = Partition::from_boundaries(6, &[2]).unwrap();
        let shift = boundary_shift_delta_hq(&p, &f, 1, 0).unwrap();
        assert!((shift.exact - (hq_at(3) - hq_at(2))).abs() < 1e-14);

        // symmetric p, symmetric split: moving left and moving right give equal changes
        let sym = DiscreteDistribution::from_weights(&[1.0, 2.0, 3.0, 3.0, 2.0, 1.0]).unwrap();
        let f = Partition::from_boundaries(6, &[3]).unwrap();
        let right = boundary_shift_delta_hq(&sym, &f, 0, 1).unwrap();
        let left = boundary_shift_delta_hq(&sym, &f, 1, 0).unwrap();
        assert!((right.exact - left.exact).abs() < 1e-15);
    }

    #[test]
    fn boundary_shift_contract_violations() {
        let p = decay6();
        let f = Partition::contiguous(&[1, 2, 3]).unwrap();
        assert!(matches!(boundary_shift_delta_hq(&p, &f, 0, 1), Err(Error::Contract(_))));
        assert!(matches!(boundary_shift_delta_hq(&p, &f, 2, 0), Err(Error::Contract(_))));
        let scattered = Partition::new(vec![0, 1, 0, 1, 0, 1], 2).unwrap();
        assert!(matches!(boundary_shift_delta_hq(&p, &scattered, 0, 1), Err(Error::Contract(_))));
    }
}
