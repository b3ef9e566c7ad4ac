//! Measurements on trained models: output statistics, label grids, code
//! sets and Hamming search, occupancy, feature maps, probes and decoding.

mod codes;
mod decode;
mod featmap;
mod grid;
mod independence;
pub mod io;
mod knn;
mod occupancy;
mod probe;
mod stats;

pub use codes::{
    binarize, codes_from_outputs, encode_corpus, joint_outputs, pack_bits, unpack_bits, BinaryCodeSet,
    EncodedCorpus, MAX_CODE_BITS,
};
pub use decode::{decode_image, image_mse, mean_patch_image};
pub use featmap::{adapt_channels, feature_maps, FeatureMapSet};
pub use grid::{argmax, label_grid, LabelGrid};
pub use independence::{empirical_joint_independence, joint_independence_from_labels, Independence};
pub use knn::{hamming, knn_hamming, Neighbor};
pub use occupancy::{binomial, occupancy_curve, occupancy_stats, OccupancyCurve};
pub use probe::{
    classify, close_gaps, probe_response, runs, NodeResponse, ProbeResponse, ACTIVATION_MIN_FRACTION,
    SEGMENT_MIN_FRACTION,
};
pub use stats::{
    empirical_output_stats, output_stats_from_values, HistogramBin, OutputStats, BINARY_TOLERANCE, HISTOGRAM_BINS,
};
