use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use super::engine::Trainer;
use super::{Recipe, RecipeConfig, TrainOutcome, TrainReport};
use crate::data::{load_corpus, sample_pixel_pairs, synth_pixel_pairs, Image, PatchSampler};
use crate::nn::{weights_hash, Mlp};
use crate::rng::{streams, substream};
use crate::{Error, Result};

/// Training pairs of a two-pixel recipe: natural pairs from the corpus if
/// one is configured, the clamped correlated Gaussian otherwise. `holdout`
/// draws an independent sample of `count` pairs.
pub fn two_pixel_data(cfg: &RecipeConfig, count: usize, holdout: bool) -> Result<Array2<f64>> {
    let seed = if holdout { cfg.seed ^ (streams::HOLDOUT << 32) } else { cfg.seed };
    match &cfg.data.corpus {
        Some(path) => sample_pixel_pairs(&load_corpus(path)?, count, seed),
        None => Ok(synth_pixel_pairs(count, seed)),
    }
}

/// Corpus of a patch recipe.
pub fn patch_images(cfg: &RecipeConfig) -> Result<Vec<Image>> {
    match &cfg.data.corpus {
        Some(path) => load_corpus(path),
        None => cfg.data.synthetic.generate(),
    }
}

pub(crate) fn init_models(cfg: &RecipeConfig) -> Result<Vec<Mlp<f32>>> {
    (0..cfg.models as u64).map(|i| Mlp::init_indexed(&cfg.model, cfg.seed, i)).collect()
}

fn finish(cfg: &RecipeConfig, trainer: Trainer, init_hash: String, losses: Vec<f64>, lrs: Vec<f64>, t0: Instant) -> TrainOutcome {
    let report = TrainReport {
        recipe: format!("{:?}", cfg.recipe),
        epoch_losses: losses,
        epoch_lrs: lrs,
        steps: trainer.steps(),
        wall_time_secs: t0.elapsed().as_secs_f64(),
        init_hash,
        weights_hash: weights_hash(&trainer.models),
        weights_paths: Vec::new(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    };
    TrainOutcome { models: trainer.models, report }
}

fn two_pixel(cfg: &RecipeConfig) -> Result<TrainOutcome> {
    let t0 = Instant::now();
    let models = init_models(cfg)?;
    let init_hash = weights_hash(&models);
    let pairs = cfg.scaled(cfg.data.pairs);
    let data = if cfg.epochs > 0 {
        two_pixel_data(cfg, pairs, false)?.mapv(|v| v as f32)
    } else {
        Array2::zeros((0, 2))
    };
    let mut trainer = Trainer::new(models, cfg.optimizer, cfg.loss)?;
    let (mut losses, mut lrs) = (Vec::new(), Vec::new());
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        trainer.set_lr(lr);
        order.shuffle(&mut substream(cfg.seed, streams::SHUFFLE, epoch as u64));
        let mut sum = 0.0;
        let mut n = 0usize;
        for idx in order.chunks_exact(cfg.data.batch_size) {
            sum += trainer.step(data.select(Axis(0), idx).view())?;
            n += 1;
        }
        losses.push(sum / n as f64);
        lrs.push(lr);
    }
    Ok(finish(cfg, trainer, init_hash, losses, lrs, t0))
}

/// One softmax MLP trained against the one-dimension even-coding loss.
pub fn train_two_pixel_ood(cfg: &RecipeConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.recipe != Recipe::TwoPixelOod {
        return Err(Error::validation(format!("expected recipe two_pixel_ood, got {:?}", cfg.recipe)));
    }
    two_pixel(cfg)
}

/// Several softmax MLPs on a shared input batch, trained jointly.
pub fn train_two_pixel_miod(cfg: &RecipeConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.recipe != Recipe::TwoPixelMiod {
        return Err(Error::validation(format!("expected recipe two_pixel_miod, got {:?}", cfg.recipe)));
    }
    two_pixel(cfg)
}

/// Sigmoid patch model(s) with the repulsion loss over their joint output.
pub fn train_patch_model(cfg: &RecipeConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !cfg.recipe.is_patch() {
        return Err(Error::validation(format!("expected a patch recipe, got {:?}", cfg.recipe)));
    }
    let images = if cfg.epochs > 0 { patch_images(cfg)? } else { Vec::new() };
    train_patch_model_on(cfg, &images)
}

/// [`train_patch_model`] on an already loaded corpus.
pub fn train_patch_model_on(cfg: &RecipeConfig, images: &[Image]) -> Result<TrainOutcome> {
    cfg.validate()?;
    let t0 = Instant::now();
    let models = init_models(cfg)?;
    let init_hash = weights_hash(&models);
    let mut trainer = Trainer::new(models, cfg.optimizer, cfg.loss)?;
    let (mut losses, mut lrs) = (Vec::new(), Vec::new());
    if cfg.epochs > 0 {
        let sampler = PatchSampler::new(images, cfg.sampler(), cfg.data.patch_size, cfg.recipe.channels())?;
        let batches = cfg.scaled(cfg.data.batches) as u64;
        for epoch in 0..cfg.epochs {
            let lr = cfg.lr_at(epoch);
            trainer.set_lr(lr);
            let mut sum = 0.0;
            let mut n = 0usize;
            for b in 0..batches {
                for mb in sampler.outer_batch(epoch as u64 * batches + b) {
                    sum += trainer.step(mb.values.view())?;
                    n += 1;
                }
            }
            losses.push(sum / n as f64);
            lrs.push(lr);
        }
    }
    Ok(finish(cfg, trainer, init_hash, losses, lrs, t0))
}

/// Dispatches on the recipe.
pub fn train(cfg: &RecipeConfig) -> Result<TrainOutcome> {
    match cfg.recipe {
        Recipe::TwoPixelOod => train_two_pixel_ood(cfg),
        Recipe::TwoPixelMiod => train_two_pixel_miod(cfg),
        Recipe::PatchGray | Recipe::PatchColor => train_patch_model(cfg),
    }
}
