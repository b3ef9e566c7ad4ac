//! Exact information calculus over discrete distributions and many-to-one
//! partitions.
//!
//! All logarithms are natural; [`LogBase::Bits`] is a presentation option.
//! Probabilities below [`ZERO_FLOOR`] are treated as exact zeros and
//! `0 log 0 = 0` throughout.

mod csv;
mod info;
mod search;
mod toy;
mod types;

pub use csv::{
    read_index_value_csv, write_distribution_csv, write_index_value_csv, write_partition_csv,
    write_toy_curve_csv,
};
pub use info::{
    boundary_shift_delta_hq, cross_entropy, entropy, entropy_nats, hq_grouped, kl_divergence,
    kl_p_q, modeled_distribution, push_forward, transmission_rate, BoundaryShift,
    TransmissionRate,
};
pub use search::{best_contiguous_partition, exhaustive_contiguous_partition, Objective};
pub use toy::{linear_decay, searched_split, toy_example, toy_hq_minus_log_m, ToyExampleResult};
pub use types::{DiscreteDistribution, LogBase, OutputDistribution, Partition};

/// Probabilities at or below this value contribute nothing to entropies.
pub const ZERO_FLOOR: f64 = 1e-300;

/// Absolute tolerance on `sum(p) == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// `-p log p` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn neg_plogp(p: f64) -> f64 {
    if p <= ZERO_FLOOR {
        0.0
    } else {
        -p * p.ln()
    }
}
