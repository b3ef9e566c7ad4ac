use ndarray::{Array2, ArrayView1};

use super::featmap::adapt_channels;
use super::{codes_from_outputs, joint_outputs};
use crate::data::{extract_patch, Image};
use crate::nn::Mlp;
use crate::train::code_features;
use crate::{Error, Result};

fn tiles(img: &Image, p: usize) -> Result<(usize, usize, Array2<f32>)> {
    if p == 0 || img.width() % p != 0 || img.height() % p != 0 {
        return Err(Error::validation(format!(
            "image {}x{} does not tile into {p}x{p} patches",
            img.width(),
            img.height()
        )));
    }
    let (tw, th) = (img.width() / p, img.height() / p);
    let mut out = Array2::zeros((tw * th, p * p * img.channels()));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        extract_patch(img, (i % tw) * p, (i / tw) * p, p, row.as_slice_mut().expect("contiguous"));
    }
    Ok((tw, th, out))
}

fn assemble<'a>(
    like: &Image,
    p: usize,
    tw: usize,
    patches: impl IntoIterator<Item = ArrayView1<'a, f32>>,
) -> Image {
    let ch = like.channels();
    let mut data = vec![0u8; like.data().len()];
    for (i, patch) in patches.into_iter().enumerate() {
        let (x0, y0) = ((i % tw) * p, (i / tw) * p);
        for (k, &v) in patch.iter().enumerate() {
            let (dy, rest) = (k / (p * ch), k % (p * ch));
            let at = ((y0 + dy) * like.width() + x0) * ch + rest;
            data[at] = (255.0 * v).round().clamp(0.0, 255.0) as u8;
        }
    }
    Image::new(like.width(), like.height(), ch, data).expect("same shape as input")
}

/// Encodes each non-overlapping tile, binarizes, decodes and tiles the
/// reconstructions back together.
pub fn decode_image(encoders: &[Mlp<f32>], decoder: &Mlp<f32>, image: &Image, patch_size: usize) -> Result<Image> {
    let first = encoders.first().ok_or_else(|| Error::validation("no encoder models"))?;
    let img = adapt_channels(image, first.input_dim(), patch_size)?;
    let (tw, _, patches) = tiles(&img, patch_size)?;
    let out = joint_outputs(encoders, patches.view())?;
    let codes = codes_from_outputs(out.view())?;
    let recon = decoder.forward(code_features(&codes, out.ncols()).view())?;
    if recon.ncols() != patches.ncols() {
        return Err(Error::validation(format!(
            "decoder emits {} values, patches hold {}",
            recon.ncols(),
            patches.ncols()
        )));
    }
    Ok(assemble(&img, patch_size, tw, recon.rows()))
}

/// Baseline reconstruction: every tile replaced by the same mean patch.
pub fn mean_patch_image(mean_patch: ArrayView1<f32>, like: &Image, patch_size: usize) -> Result<Image> {
    let (tw, th, patches) = tiles(like, patch_size)?;
    if mean_patch.len() != patches.ncols() {
        return Err(Error::validation("mean patch does not match the tile size"));
    }
    Ok(assemble(like, patch_size, tw, std::iter::repeat_n(mean_patch, tw * th)))
}

/// Mean squared difference of the samples, on the `[0, 1]` scale.
pub fn image_mse(a: &Image, b: &Image) -> Result<f64> {
    if (a.width(), a.height(), a.channels()) != (b.width(), b.height(), b.channels()) {
        return Err(Error::validation("images differ in shape"));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = (x as f64 - y as f64) / 255.0;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}
