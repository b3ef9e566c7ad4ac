use std::borrow::Cow;

use ndarray::Array2;

use super::joint_outputs;
use crate::data::{extract_patch, to_gray, Image};
use crate::nn::Mlp;
use crate::{Error, Result};

/// Converts `img` to the channel count a model with `input_dim` inputs
/// expects for `p x p` patches. Gray images are replicated to RGB.
pub fn adapt_channels(img: &Image, input_dim: usize, p: usize) -> Result<Cow<'_, Image>> {
    let want = if input_dim == p * p {
        1
    } else if input_dim == 3 * p * p {
        3
    } else {
        return Err(Error::validation(format!("model input {input_dim} does not fit {p}x{p} patches")));
    };
    Ok(match (want, img.channels()) {
        (a, b) if a == b => Cow::Borrowed(img),
        (1, _) => Cow::Owned(to_gray(img)),
        _ => {
            let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
            Cow::Owned(Image::new(img.width(), img.height(), 3, data)?)
        }
    })
}

/// One activation map per output node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapSet {
    /// `maps[n][[y, x]]` = output `n` on the patch with top-left `(x, y)`.
    pub maps: Vec<Array2<f32>>,
}

impl FeatureMapSet {
    pub fn dims(&self) -> (usize, usize) {
        self.maps.first().map_or((0, 0), |m| m.dim())
    }

    /// 8-bit gray rendering, `round(255 * value)`.
    pub fn to_image(&self, node: usize) -> Image {
        let m = &self.maps[node];
        let (h, w) = m.dim();
        let data = m.iter().map(|&v| (255.0 * v).round().clamp(0.0, 255.0) as u8).collect();
        Image::new(w, h, 1, data).expect("map shape")
    }
}

/// Slides the model(s) over `image` at stride 1.
pub fn feature_maps(models: &[Mlp<f32>], image: &Image, patch_size: usize) -> Result<FeatureMapSet> {
    let p = patch_size;
    if p == 0 || image.width() < p || image.height() < p {
        return Err(Error::validation(format!(
            "image {}x{} is smaller than the {p}x{p} patch",
            image.width(),
            image.height()
        )));
    }
    let first = models.first().ok_or_else(|| Error::validation("no models"))?;
    let img = adapt_channels(image, first.input_dim(), p)?;
    let (mw, mh) = (img.width() - p + 1, img.height() - p + 1);
    let dim = p * p * img.channels();
    let mut patches = Array2::<f32>::zeros((mw * mh, dim));
    for (i, mut row) in patches.rows_mut().into_iter().enumerate() {
        extract_patch(&img, i % mw, i / mw, p, row.as_slice_mut().expect("contiguous"));
    }
    let out = joint_outputs(models, patches.view())?;
    let maps = out
        .columns()
        .into_iter()
        .map(|c| Array2::from_shape_vec((mh, mw), c.to_vec()).expect("map shape"))
        .collect();
    Ok(FeatureMapSet { maps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense, ModelSpec};
    use ndarray::Array1;

    fn edge_model() -> Mlp<f32> {
        // one node fires on a left/right contrast inside a 2x2 patch, one on brightness
        let w = Array2::from_shape_vec((2, 4), vec![-20.0f32, 20.0, -20.0, 20.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let b = Array1::from(vec![-2.0f32, -2.0]);
        Mlp::from_layers(vec![Dense { weights: w, bias: b, act: Activation::Sigmoid }]).unwrap()
    }

    #[test]
    fn constant_image_constant_maps() {
        let m = Mlp::init(&ModelSpec::chain(&[9, 5, 4], Activation::Relu, Activation::Sigmoid), 3).unwrap();
        let img = Image::filled(10, 7, 1, 90).unwrap();
        let f = feature_maps(&[m], &img, 3).unwrap();
        assert_eq!(f.maps.len(), 4);
        assert_eq!(f.dims(), (5, 8));
        for map in &f.maps {
            assert!(map.iter().all(|&v| v == map[[0, 0]]));
        }
    }

    #[test]
    fn patch_sized_image_gives_single_pixel() {
        let m = Mlp::init(&ModelSpec::chain(&[75, 3, 2], Activation::Relu, Activation::Sigmoid), 0).unwrap();
        let f = feature_maps(&[m], &Image::filled(5, 5, 1, 10).unwrap(), 5).unwrap();
        assert_eq!(f.dims(), (1, 1));
        let m = Mlp::init(&ModelSpec::chain(&[16, 3, 2], Activation::Relu, Activation::Sigmoid), 0).unwrap();
        assert!(feature_maps(&[m], &Image::filled(3, 8, 1, 0).unwrap(), 4).is_err());
    }

    #[test]
    fn step_edge_localized() {
        let (w, h) = (20, 6);
        let data = (0..w * h).map(|i| if i % w >= 10 { 255 } else { 0 }).collect();
        let img = Image::new(w, h, 1, data).unwrap();
        let f = feature_maps(&[edge_model()], &img, 2).unwrap();
        let jaccard = |map: &Array2<f32>| {
            let (mut inter, mut union) = (0, 0);
            for ((_, x), &v) in map.indexed_iter() {
                let on = v >= 0.5;
                let band = x == 9;
                inter += (on && band) as usize;
                union += (on || band) as usize;
            }
            inter as f64 / union as f64
        };
        assert!(f.maps.iter().any(|m| jaccard(m) > 0.5));
        assert_eq!(f.to_image(0).at(9, 0, 0), 255);
    }
}
