use serde::{Deserialize, Serialize};

use super::Image;
use crate::{Error, Result};

/// Synthetic probe images whose columns sweep a single stimulus parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Linear gray ramp, black on the left.
    GrayRamp,
    /// Fully saturated hue sweep from 0 to 270 degrees.
    HueSpectrum,
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray_ramp" => Ok(ProbeKind::GrayRamp),
            "hue_spectrum" => Ok(ProbeKind::HueSpectrum),
            other => Err(Error::validation(format!("unknown probe kind {other:?}"))),
        }
    }
}

/// HSV with full saturation and value.
pub fn hue_to_rgb(hue_deg: f64) -> [u8; 3] {
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |v: f64| (255.0 * v).round() as u8;
    [q(r), q(g), q(b)]
}

/// Gray ramps are single channel, spectra are RGB.
pub fn gen_probe(kind: ProbeKind, width: usize, height: usize) -> Result<Image> {
    if width < 2 || height == 0 {
        return Err(Error::validation(format!("probe needs width >= 2 and height >= 1, got {width}x{height}")));
    }
    let span = (width - 1) as f64;
    match kind {
        ProbeKind::GrayRamp => {
            let row: Vec<u8> = (0..width).map(|x| (255.0 * x as f64 / span).round() as u8).collect();
            Image::new(width, height, 1, row.repeat(height))
        }
        ProbeKind::HueSpectrum => {
            let row: Vec<u8> = (0..width).flat_map(|x| hue_to_rgb(270.0 * x as f64 / span)).collect();
            Image::new(width, height, 3, row.repeat(height))
        }
    }
}
