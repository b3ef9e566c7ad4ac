use std::borrow::Cow;

use ndarray::Array2;

use super::{to_gray, Image};
use crate::rng::{streams, substream, Rng};
use crate::{Error, Result};

/// Horizontally adjacent gray-level pairs `(I[x,y], I[x+1,y]) / 255` at
/// uniformly drawn `(image, x, y)`. Color images are converted to gray.
pub fn sample_pixel_pairs(images: &[Image], count: usize, seed: u64) -> Result<Array2<f64>> {
    if images.is_empty() {
        return Err(Error::validation("cannot sample pixel pairs from an empty corpus"));
    }
    if let Some(i) = images.iter().position(|im| im.width() < 2) {
        return Err(Error::validation(format!("image {i} is narrower than 2 pixels")));
    }
    let gray: Vec<Cow<Image>> = images
        .iter()
        .map(|im| if im.channels() == 1 { Cow::Borrowed(im) } else { Cow::Owned(to_gray(im)) })
        .collect();
    let mut rng = substream(seed, streams::PIXEL_PAIRS, 0);
    let mut out = Array2::zeros((count, 2));
    for mut row in out.rows_mut() {
        let im = &gray[rng.random_range(0..gray.len())];
        let x = rng.random_range(0..im.width() - 1);
        let y = rng.random_range(0..im.height());
        row[0] = im.at(x, y, 0) as f64 / 255.0;
        row[1] = im.at(x + 1, y, 0) as f64 / 255.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{dead_leaves, SyntheticCorpus};

    #[test]
    fn constant_image() {
        let img = Image::filled(5, 4, 1, 128).unwrap();
        let p = sample_pixel_pairs(&[img], 100, 1).unwrap();
        assert!(p.iter().all(|&v| v == 128.0 / 255.0));
        assert!((p[[0, 0]] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn deterministic_and_validated() {
        let img = Image::new(3, 2, 1, vec![0, 50, 100, 150, 200, 250]).unwrap();
        let a = sample_pixel_pairs(std::slice::from_ref(&img), 50, 9).unwrap();
        assert_eq!(a, sample_pixel_pairs(std::slice::from_ref(&img), 50, 9).unwrap());
        assert!(sample_pixel_pairs(&[], 5, 0).is_err());
        assert!(sample_pixel_pairs(&[Image::filled(1, 4, 1, 0).unwrap()], 5, 0).is_err());
    }

    #[test]
    fn natural_like_pairs_correlate() {
        let spec = SyntheticCorpus { count: 1, width: 128, height: 128, channels: 1, seed: 2 };
        let img = dead_leaves(&spec, 0);
        let p = sample_pixel_pairs(&[img], 100_000, 4).unwrap();
        let n = p.nrows() as f64;
        let (ma, mb) = (p.column(0).sum() / n, p.column(1).sum() / n);
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for r in p.rows() {
            let (a, b) = (r[0] - ma, r[1] - mb);
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        assert!(sab / (saa * sbb).sqrt() > 0.5);
    }
}
