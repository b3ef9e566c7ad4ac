//! Images, pixel-pair and patch sampling, synthetic data and probe images.
//!
//! All sampling is a pure function of the inputs and the seed.

mod corpus;
mod image;
mod pairs;
mod patches;
mod probe;
mod synth;

pub use corpus::{dead_leaves, load_corpus, read_manifest, SyntheticCorpus};
pub use image::{decode_pnm, encode_pnm, load_image, save_image, to_gray, Image};
pub use pairs::sample_pixel_pairs;
pub use patches::{extract_patch, PatchBatch, PatchDescriptor, PatchSampler, SamplerConfig};
pub use probe::{gen_probe, hue_to_rgb, ProbeKind};
pub use synth::{synth_gaussian_2d, synth_pixel_pairs};
