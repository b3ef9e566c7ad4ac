use serde::Serialize;

use super::{binarize, feature_maps};
use crate::data::{gen_probe, ProbeKind};
use crate::nn::Mlp;
use crate::{Error, Result};

/// A node counts as activated when it fires on at least this fraction of columns.
pub const ACTIVATION_MIN_FRACTION: f64 = 0.01;
/// Shortest interval, as a fraction of the probe width, that counts as a segment.
pub const SEGMENT_MIN_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeResponse {
    /// Inclusive `(start, end)` column ranges where the rounded output is 1.
    pub intervals: Vec<(usize, usize)>,
    pub activated: bool,
    /// Segments of the activated set after closing 1-column gaps.
    pub segments: usize,
    /// The inactive columns form a single segment.
    pub single_segment_inhibited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResponse {
    pub kind: ProbeKind,
    /// Number of probe positions (columns of the feature map).
    pub columns: usize,
    pub nodes: Vec<NodeResponse>,
    pub activated_fraction: f64,
    pub single_segment_fraction: f64,
    pub multi_segment_fraction: f64,
}

/// Maximal runs of `true`, as inclusive ranges.
pub fn runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Fills isolated single-column holes between set columns.
pub fn close_gaps(mask: &[bool]) -> Vec<bool> {
    let mut out = mask.to_vec();
    for i in 1..mask.len().saturating_sub(1) {
        if !mask[i] && mask[i - 1] && mask[i + 1] {
            out[i] = true;
        }
    }
    out
}

fn segments(mask: &[bool], min_len: usize) -> usize {
    runs(&close_gaps(mask)).iter().filter(|(s, e)| e - s + 1 >= min_len).count()
}

/// Classifies a node's per-column binary response.
pub fn classify(mask: &[bool]) -> NodeResponse {
    let n = mask.len();
    let active = mask.iter().filter(|&&m| m).count();
    let min_len = ((SEGMENT_MIN_FRACTION * n as f64).ceil() as usize).max(1);
    let inactive: Vec<bool> = mask.iter().map(|m| !m).collect();
    NodeResponse {
        intervals: runs(mask),
        activated: active as f64 >= ACTIVATION_MIN_FRACTION * n as f64 && active > 0,
        segments: segments(mask, min_len),
        single_segment_inhibited: active > 0 && segments(&inactive, min_len) == 1,
    }
}

/// Slides the model(s) along a `width x patch_size` probe image and reports
/// where each node fires.
pub fn probe_response(models: &[Mlp<f32>], kind: ProbeKind, width: usize, patch_size: usize) -> Result<ProbeResponse> {
    if width < patch_size + 1 {
        return Err(Error::validation(format!("probe width {width} leaves no sweep for {patch_size}x{patch_size} patches")));
    }
    let img = gen_probe(kind, width, patch_size)?;
    let maps = feature_maps(models, &img, patch_size)?;
    let nodes: Vec<NodeResponse> = maps
        .maps
        .iter()
        .map(|m| {
            let mask: Vec<bool> = m.row(0).iter().map(|&v| binarize(v as f64)).collect();
            classify(&mask)
        })
        .collect();
    let n = nodes.len() as f64;
    let frac = |f: &dyn Fn(&NodeResponse) -> bool| nodes.iter().filter(|r| f(r)).count() as f64 / n;
    Ok(ProbeResponse {
        kind,
        columns: maps.dims().1,
        activated_fraction: frac(&|r| r.activated),
        single_segment_fraction: frac(&|r| r.activated && r.segments == 1),
        multi_segment_fraction: frac(&|r| r.activated && r.segments >= 2),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, ModelSpec};

    #[test]
    fn zero_model_fires_everywhere() {
        let m = Mlp::<f32>::zeros(&ModelSpec::chain(&[75, 4, 3], Activation::Relu, Activation::Sigmoid)).unwrap();
        let r = probe_response(&[m], ProbeKind::HueSpectrum, 100, 5).unwrap();
        assert_eq!(r.columns, 96);
        for node in &r.nodes {
            assert_eq!(node.intervals, vec![(0, 95)]);
            assert_eq!(node.segments, 1);
        }
        assert_eq!(r.activated_fraction, 1.0);
        assert_eq!(r.single_segment_fraction, 1.0);
    }

    #[test]
    fn gap_closing_and_segments() {
        let mut mask = vec![false; 100];
        for i in 10..20 {
            mask[i] = true;
        }
        mask[15] = false;
        for i in 50..53 {
            mask[i] = true;
        }
        mask[80] = true;
        let r = classify(&mask);
        assert_eq!(r.intervals, vec![(10, 14), (16, 19), (50, 52), (80, 80)]);
        // the 1-column gap closes, the lone column is too short
        assert_eq!(r.segments, 2);
        assert!(r.activated);
        assert!(!r.single_segment_inhibited);

        let mut edge = vec![true; 100];
        for v in edge.iter_mut().skip(40).take(30) {
            *v = false;
        }
        let r = classify(&edge);
        assert_eq!(r.segments, 2);
        assert!(r.single_segment_inhibited);
        assert!(!classify(&[false; 100]).activated);
    }
}
