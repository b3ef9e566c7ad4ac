use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::nn::{Mlp, Real};
use crate::{Error, Result};

/// Widest supported code.
pub const MAX_CODE_BITS: usize = 128;

/// Rounding threshold of a sigmoid output; exactly 0.5 rounds up.
#[inline]
pub fn binarize(v: f64) -> bool {
    v >= 0.5
}

/// Packs bits little-endian: bit `i` of the result is `bits[i]`.
pub fn pack_bits(bits: &[bool]) -> u128 {
    debug_assert!(bits.len() <= MAX_CODE_BITS);
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u128) << i))
}

pub fn unpack_bits(code: u128, bits: usize) -> Vec<bool> {
    (0..bits).map(|i| code >> i & 1 == 1).collect()
}

/// Binary code of every row of an `S x D` output matrix.
pub fn codes_from_outputs<T: Real>(outputs: ArrayView2<T>) -> Result<Vec<u128>> {
    if outputs.ncols() > MAX_CODE_BITS {
        return Err(Error::validation(format!(
            "codes are limited to {MAX_CODE_BITS} bits, got {}",
            outputs.ncols()
        )));
    }
    Ok(outputs
        .rows()
        .into_iter()
        .map(|r| r.iter().enumerate().fold(0u128, |acc, (i, v)| acc | ((binarize(v.to_f64()) as u128) << i)))
        .collect())
}

/// Outputs of several models side by side: model `m`'s nodes follow those
/// of models `0..m`.
pub fn joint_outputs<T: Real>(models: &[Mlp<T>], batch: ArrayView2<T>) -> Result<Array2<T>> {
    if models.is_empty() {
        return Err(Error::validation("no models given"));
    }
    let outs = models.iter().map(|m| m.forward(batch)).collect::<Result<Vec<_>>>()?;
    let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
    Ok(ndarray::concatenate(ndarray::Axis(1), &views).expect("outputs share the batch dimension"))
}

/// Codes and their counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeSet {
    bits: usize,
    counts: BTreeMap<u128, u64>,
    total: u64,
}

impl BinaryCodeSet {
    pub fn new(bits: usize) -> Result<Self> {
        if bits == 0 || bits > MAX_CODE_BITS {
            return Err(Error::validation(format!("code width must be 1..={MAX_CODE_BITS}, got {bits}")));
        }
        Ok(Self { bits, counts: BTreeMap::new(), total: 0 })
    }

    pub fn from_codes(bits: usize, codes: impl IntoIterator<Item = u128>) -> Result<Self> {
        let mut set = Self::new(bits)?;
        for c in codes {
            set.insert(c, 1)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, code: u128, count: u64) -> Result<()> {
        if self.bits < MAX_CODE_BITS && code >> self.bits != 0 {
            return Err(Error::validation(format!("code {code:#x} exceeds {} bits", self.bits)));
        }
        if count == 0 {
            return Err(Error::validation("code counts must be at least 1"));
        }
        *self.counts.entry(code).or_default() += count;
        self.total += count;
        Ok(())
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, code: u128) -> u64 {
        self.counts.get(&code).copied().unwrap_or(0)
    }

    /// Entries in ascending code order.
    pub fn iter(&self) -> impl Iterator<Item = (u128, u64)> + '_ {
        self.counts.iter().map(|(&c, &n)| (c, n))
    }
}

/// Per-sample codes plus their aggregated set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    pub codes: Vec<u128>,
    pub set: BinaryCodeSet,
}

/// Runs the model(s) over `patches` and binarizes the joint output.
pub fn encode_corpus(models: &[Mlp<f32>], patches: ArrayView2<f32>) -> Result<EncodedCorpus> {
    let out = joint_outputs(models, patches)?;
    let codes = codes_from_outputs(out.view())?;
    let set = BinaryCodeSet::from_codes(out.ncols(), codes.iter().copied())?;
    Ok(EncodedCorpus { codes, set })
}
