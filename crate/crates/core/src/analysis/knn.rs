use serde::{Deserialize, Serialize};

use super::MAX_CODE_BITS;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: u32,
}

#[inline]
pub fn hamming(a: u128, b: u128) -> u32 {
    (a ^ b).count_ones()
}

/// The `k` codes closest to `query` in Hamming distance; ties keep
/// insertion order. Buckets by distance, so cost is linear in the corpus.
pub fn knn_hamming(codes: &[u128], query: u128, k: usize) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if k > codes.len() {
        return Err(Error::validation(format!("k = {k} exceeds the {} stored codes", codes.len())));
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); MAX_CODE_BITS + 1];
    for (i, &c) in codes.iter().enumerate() {
        buckets[hamming(c, query) as usize].push(i);
    }
    Ok(buckets
        .iter()
        .enumerate()
        .flat_map(|(d, idx)| idx.iter().map(move |&index| Neighbor { index, distance: d as u32 }))
        .take(k)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Rng};

    #[test]
    fn popcount_distance() {
        assert_eq!(hamming(0b1010, 0b0011), 2);
    }

    #[test]
    fn self_match_first() {
        let codes = [5u128, 9, 5, 0];
        let r = knn_hamming(&codes, 5, 3).unwrap();
        assert_eq!(r[0], Neighbor { index: 0, distance: 0 });
        assert_eq!(r[1], Neighbor { index: 2, distance: 0 });
        assert!(knn_hamming(&codes, 5, 5).is_err());
        assert!(knn_hamming(&codes, 5, 0).is_err());
    }

    #[test]
    fn agrees_with_sorted_scan() {
        let mut rng = stream(1, 0);
        let codes: Vec<u128> = (0..2000).map(|_| rng.random::<u128>() & 0xFFFF).collect();
        for _ in 0..10 {
            let q = rng.random::<u128>() & 0xFFFF;
            let mut scan: Vec<Neighbor> =
                codes.iter().enumerate().map(|(index, &c)| Neighbor { index, distance: hamming(c, q) }).collect();
            scan.sort_by_key(|n| (n.distance, n.index));
            for k in [1, 5, 10] {
                assert_eq!(knn_hamming(&codes, q, k).unwrap(), scan[..k].to_vec());
            }
        }
    }
}
