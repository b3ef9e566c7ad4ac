use rand::seq::index;
use serde::Serialize;

use super::knn::hamming;
use super::BinaryCodeSet;
use crate::rng::{streams, substream};
use crate::{Error, Result};

/// Sample counts around one anchor code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyCurve {
    pub anchor: u128,
    /// `cumulative[d]` = samples within distance `d`, for `d = 0..=D`.
    pub cumulative: Vec<u64>,
    /// Samples at exactly distance `d` divided by `C(D, d)`.
    pub rate: Vec<f64>,
}

/// `C(n, k)` as a float; exact up to 2^53.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Curves for one anchor.
pub fn occupancy_curve(codes: &BinaryCodeSet, anchor: u128) -> OccupancyCurve {
    let d = codes.bits();
    let mut exact = vec![0u64; d + 1];
    for (c, n) in codes.iter() {
        exact[hamming(c, anchor) as usize] += n;
    }
    let rate = exact.iter().enumerate().map(|(k, &n)| n as f64 / binomial(d, k)).collect();
    let mut run = 0;
    let cumulative = exact
        .iter()
        .map(|&n| {
            run += n;
            run
        })
        .collect();
    OccupancyCurve { anchor, cumulative, rate }
}

/// Curves around `anchors` distinct occupied codes drawn at random.
pub fn occupancy_stats(codes: &BinaryCodeSet, anchors: usize, seed: u64) -> Result<Vec<OccupancyCurve>> {
    if anchors > codes.distinct() {
        return Err(Error::validation(format!(
            "{anchors} anchors requested but only {} distinct codes",
            codes.distinct()
        )));
    }
    let distinct: Vec<u128> = codes.iter().map(|(c, _)| c).collect();
    let mut rng = substream(seed, streams::ANCHORS, 0);
    let picks = index::sample(&mut rng, distinct.len(), anchors);
    Ok(picks.iter().map(|i| occupancy_curve(codes, distinct[i])).collect())
}
