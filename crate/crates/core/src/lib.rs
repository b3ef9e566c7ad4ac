//! Discrete information processing units (IPUs).
//!
//! An IPU is a deterministic many-to-one map from `M` discrete input states to
//! `N` output states. This crate provides:
//!
//! - [`discrete`]: exact information calculus over distributions and partitions
//!   (output entropy, the modeled distribution, KL divergence, transmission rate,
//!   optimal contiguous partitions and the linear-decay toy problem).
//! - [`nn`]: a small dense MLP engine with reverse-mode gradients, Adam/AdamW,
//!   seeded initialization, gradient checking and a binary weights format.
//! - [`loss`]: the even-coding objectives for one or several output
//!   dimensions plus the repulsion losses, with analytic gradients.
//! - [`data`]: PPM/PGM images, pixel-pair and patch sampling, synthetic
//!   distributions and probe images.
//! - [`train`]: end-to-end training recipes driven by a JSON config.
//! - [`analysis`]: output statistics, partition label grids, binary codes,
//!   Hamming search, feature maps, probe responses, occupancy and decoding.

pub mod analysis;
pub mod data;
pub mod discrete;
pub mod error;
pub mod loss;
pub mod nn;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
