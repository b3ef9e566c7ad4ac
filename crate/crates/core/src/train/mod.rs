//! Training recipes for two-pixel even coding and binary patch codes, plus
//! the patch decoder.

mod config;
mod decoder;
mod engine;
mod recipes;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{DataConfig, LrStep, Recipe, RecipeConfig};
pub use decoder::{
    build_code_table, code_features, mirror_spec, mse, train_decoder, train_decoder_on_table, CodeTable,
    DecoderConfig, DecoderOutcome,
};
pub use engine::joint_loss;
pub use recipes::{
    patch_images, train, train_patch_model, train_patch_model_on, train_two_pixel_miod, train_two_pixel_ood,
    two_pixel_data,
};

use crate::nn::{read_weights, write_weights, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub recipe: String,
    /// Mean minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Learning rate in effect during each epoch.
    pub epoch_lrs: Vec<f64>,
    pub steps: u64,
    pub wall_time_secs: f64,
    pub init_hash: String,
    pub weights_hash: String,
    pub weights_paths: Vec<PathBuf>,
    pub config: serde_json::Value,
}

impl TrainReport {
    pub fn write_loss_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut body = String::from("epoch,mean_loss,lr\n");
        for (e, (l, lr)) in self.epoch_losses.iter().zip(&self.epoch_lrs).enumerate() {
            body.push_str(&format!("{e},{l},{lr}\n"));
        }
        w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

/// Trained models plus their report.
pub struct TrainOutcome {
    pub models: Vec<Mlp<f32>>,
    pub report: TrainReport,
}

impl TrainOutcome {
    /// Writes the weights, `report.json` and `loss.csv` into `dir`.
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.report.weights_paths = save_models(dir, &self.models)?;
        self.report.write_loss_csv(&dir.join("loss.csv"))?;
        let path = dir.join("report.json");
        let json = serde_json::to_string_pretty(&self.report)?;
        std::fs::write(&path, json).map_err(|e| Error::io(path, e))
    }
}

/// `weights.ipuw` for one model, `weights_000.ipuw`, ... for several.
pub fn save_models(dir: &Path, models: &[Mlp<f32>]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let name = if models.len() == 1 { "weights.ipuw".to_string() } else { format!("weights_{i:03}.ipuw") };
            let path = dir.join(name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            write_weights(&mut w, m)?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Reads one weights file, or every `weights*.ipuw` of a directory in name order.
pub fn load_models(path: &Path) -> Result<Vec<Mlp<f32>>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("weights") && n.ends_with(".ipuw"))
            })
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::validation(format!("no weights files in {}", path.display())));
    }
    files
        .iter()
        .map(|p| read_weights(std::io::BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?)))
        .collect()
}
