use std::borrow::Cow;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{to_gray, Image};
use crate::rng::{stream, streams, substream, Rng};
use crate::{Error, Result};

/// Two-level batching: each outer batch draws `batch_images` images and
/// `patches_per_image` patches from each, then splits them into minibatches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default)]
    pub seed: u64,
    pub batch_images: usize,
    pub patches_per_image: usize,
    pub minibatch_size: usize,
    #[serde(default = "half")]
    pub flip_probability: f64,
    /// Keep extraction order instead of shuffling the outer batch.
    #[serde(default)]
    pub sequential_minibatches: bool,
}

fn half() -> f64 {
    0.5
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_images == 0 || self.patches_per_image == 0 || self.minibatch_size == 0 {
            return Err(Error::validation("sampler sizes must be positive"));
        }
        if self.minibatch_size > self.batch_images * self.patches_per_image {
            return Err(Error::validation(format!(
                "minibatch_size {} exceeds the {} patches of an outer batch",
                self.minibatch_size,
                self.batch_images * self.patches_per_image
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::validation("flip_probability must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn minibatches_per_batch(&self) -> usize {
        self.batch_images * self.patches_per_image / self.minibatch_size
    }
}

/// Where a patch came from. `x`, `y` are the top-left corner in the frame of
/// the image after the optional flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchDescriptor {
    pub image: usize,
    pub x: usize,
    pub y: usize,
    pub flipped: bool,
}

/// Patches as rows of `P*P*C` values in `[0, 1]`, laid out row, column, channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBatch {
    pub values: Array2<f32>,
    pub patch_size: usize,
    pub channels: usize,
    pub descriptors: Vec<PatchDescriptor>,
}

impl PatchBatch {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// Writes the `p x p` patch at `(x, y)` scaled to `[0, 1]` into `out`.
pub fn extract_patch(img: &Image, x: usize, y: usize, p: usize, out: &mut [f32]) {
    let ch = img.channels();
    let row_len = p * ch;
    for dy in 0..p {
        let start = ((y + dy) * img.width() + x) * ch;
        let src = &img.data()[start..start + row_len];
        for (o, &v) in out[dy * row_len..][..row_len].iter_mut().zip(src) {
            *o = v as f32 / 255.0;
        }
    }
}

pub struct PatchSampler<'a> {
    images: Vec<Cow<'a, Image>>,
    cfg: SamplerConfig,
    patch_size: usize,
    channels: usize,
}

impl<'a> PatchSampler<'a> {
    /// Color images are converted to gray when `channels == 1`.
    pub fn new(images: &'a [Image], cfg: SamplerConfig, patch_size: usize, channels: usize) -> Result<Self> {
        cfg.validate()?;
        if images.is_empty() {
            return Err(Error::validation("cannot sample patches from an empty corpus"));
        }
        if patch_size == 0 {
            return Err(Error::validation("patch_size must be positive"));
        }
        let mut converted = Vec::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if img.width() < patch_size || img.height() < patch_size {
                return Err(Error::validation(format!(
                    "image {i} ({}x{}) is smaller than the {patch_size}x{patch_size} patch",
                    img.width(),
                    img.height()
                )));
            }
            converted.push(match (channels, img.channels()) {
                (1, 3) => Cow::Owned(to_gray(img)),
                (c, ic) if c == ic => Cow::Borrowed(img),
                _ => {
                    return Err(Error::validation(format!(
                        "image {i} has {} channels, cannot produce {channels}-channel patches",
                        img.channels()
                    )))
                }
            });
        }
        Ok(Self { images: converted, cfg, patch_size, channels })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    /// Minibatches of outer batch `batch`; a pure function of the corpus,
    /// config and index.
    pub fn outer_batch(&self, batch: u64) -> Vec<PatchBatch> {
        let cfg = &self.cfg;
        let p = self.patch_size;
        let mut rng = substream(cfg.seed, streams::PATCH_BATCH, batch);
        let n = self.images.len();
        let chosen: Vec<usize> = if cfg.batch_images <= n {
            index::sample(&mut rng, n, cfg.batch_images).into_vec()
        } else {
            (0..cfg.batch_images).map(|_| rng.random_range(0..n)).collect()
        };
        let image_seeds: Vec<u64> = chosen.iter().map(|_| rng.random()).collect();

        let total = cfg.batch_images * cfg.patches_per_image;
        let dim = self.patch_dim();
        let mut values = Array2::<f32>::zeros((total, dim));
        let mut descriptors = Vec::with_capacity(total);
        let mut row = 0;
        for (&img_idx, &img_seed) in chosen.iter().zip(&image_seeds) {
            let mut irng = stream(img_seed, streams::PATCH_IMAGE);
            let flipped = irng.random::<f64>() < cfg.flip_probability;
            let src = &self.images[img_idx];
            let flipped_img;
            let img: &Image = if flipped {
                flipped_img = src.flip_horizontal();
                &flipped_img
            } else {
                src
            };
            for _ in 0..cfg.patches_per_image {
                let x = irng.random_range(0..=img.width() - p);
                let y = irng.random_range(0..=img.height() - p);
                extract_patch(img, x, y, p, values.row_mut(row).as_slice_mut().expect("contiguous row"));
                descriptors.push(PatchDescriptor { image: img_idx, x, y, flipped });
                row += 1;
            }
        }

        let mut order: Vec<usize> = (0..total).collect();
        if !cfg.sequential_minibatches {
            order.shuffle(&mut rng);
        }
        order
            .chunks_exact(cfg.minibatch_size)
            .map(|idx| PatchBatch {
                values: values.select(ndarray::Axis(0), idx),
                patch_size: p,
                channels: self.channels,
                descriptors: idx.iter().map(|&i| descriptors[i]).collect(),
            })
            .collect()
    }

    /// Minibatches of outer batches `0..batches`, in order.
    pub fn minibatches(&self, batches: u64) -> impl Iterator<Item = PatchBatch> + '_ {
        (0..batches).flat_map(move |b| self.outer_batch(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SyntheticCorpus;

    fn cfg(batch_images: usize, ppi: usize, mb: usize, sequential: bool) -> SamplerConfig {
        SamplerConfig {
            seed: 7,
            batch_images,
            patches_per_image: ppi,
            minibatch_size: mb,
            flip_probability: 0.5,
            sequential_minibatches: sequential,
        }
    }

    fn corpus() -> Vec<Image> {
        SyntheticCorpus { count: 4, width: 20, height: 16, channels: 3, seed: 1 }.generate().unwrap()
    }

    #[test]
    fn sequential_enumeration() {
        let imgs = corpus();
        let s = PatchSampler::new(&imgs, cfg(2, 3, 3, true), 4, 3).unwrap();
        let mbs = s.outer_batch(0);
        assert_eq!(mbs.len(), 2);
        // one image per minibatch, in extraction order
        for mb in &mbs {
            assert!(mb.descriptors.iter().all(|d| d.image == mb.descriptors[0].image));
        }
        assert_ne!(mbs[0].descriptors[0].image, mbs[1].descriptors[0].image);
    }

    #[test]
    fn values_and_descriptors_agree() {
        let imgs = corpus();
        let s = PatchSampler::new(&imgs, cfg(3, 10, 7, false), 5, 1).unwrap();
        for mb in s.minibatches(3) {
            assert_eq!(mb.len(), 7);
            for (row, d) in mb.values.rows().into_iter().zip(&mb.descriptors) {
                let gray = to_gray(&imgs[d.image]);
                let img = if d.flipped { gray.flip_horizontal() } else { gray };
                assert!(d.x + 5 <= img.width() && d.y + 5 <= img.height());
                let mut expect = vec![0f32; 25];
                extract_patch(&img, d.x, d.y, 5, &mut expect);
                assert_eq!(row.to_vec(), expect);
                assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn partial_minibatch_dropped_and_deterministic() {
        let imgs = corpus();
        let s = PatchSampler::new(&imgs, cfg(3, 5, 4, false), 4, 3).unwrap();
        let a: Vec<_> = s.minibatches(2).collect();
        assert_eq!(a.len(), 6);
        let b: Vec<_> = s.minibatches(2).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn no_flip_at_zero_probability() {
        let imgs = corpus();
        let mut c = cfg(4, 8, 8, false);
        c.flip_probability = 0.0;
        let s = PatchSampler::new(&imgs, c, 3, 3).unwrap();
        assert!(s.minibatches(4).all(|mb| mb.descriptors.iter().all(|d| !d.flipped)));
    }

    #[test]
    fn invalid_setups() {
        let imgs = corpus();
        assert!(PatchSampler::new(&imgs, cfg(2, 3, 3, true), 17, 3).is_err());
        assert!(PatchSampler::new(&imgs, cfg(2, 3, 7, true), 4, 3).is_err());
        let gray = vec![to_gray(&imgs[0])];
        assert!(PatchSampler::new(&gray, cfg(1, 3, 3, true), 4, 3).is_err());
        assert!(PatchSampler::new(&[], cfg(1, 3, 3, true), 4, 3).is_err());
    }
}
