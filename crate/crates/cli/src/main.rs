//! `ipu`: scripted access to the whole pipeline.
//!
//! Every subcommand writes only inside `--out` and records its resolved
//! invocation in `run.json`. Exit codes: 1 validation, 2 I/O, 3 non-finite
//! numerics.

mod commands;
mod overrides;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ipu_core::data::ProbeKind;
use ipu_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ipu", version, about = "Even-coding information processing units")]
struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "IPU_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// JSON config plus dotted overrides.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key.path=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct PatchSource {
    /// Image directory or manifest; the generated corpus is used otherwise.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 4)]
    patch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact results of the linear-decay toy problem.
    Oracle {
        #[arg(long = "toy-M", default_value_t = 100_000)]
        toy_m: usize,
    },
    /// Train a recipe from a JSON config or a preset.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// two_pixel_ood | two_pixel_miod | patch_gray | patch_color
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
    },
    /// Output statistics of trained model(s).
    Stats {
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        source: PatchSource,
    },
    /// Argmax label grid of two-pixel model(s).
    Grid {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
    },
    /// Binary codes of sampled patches, written as `codes.bin`.
    Encode {
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        source: PatchSource,
    },
    /// Hamming nearest neighbours of one stored code.
    Search {
        #[arg(long)]
        codes: PathBuf,
        #[arg(long)]
        query_index: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Stride-1 feature maps of an image, one PGM per node.
    Featmap {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 4)]
        patch_size: usize,
    },
    /// Per-node activation intervals on a probe image.
    Probe {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, value_parser = parse_probe)]
        probe: ProbeKind,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 5)]
        patch_size: usize,
    },
    /// Occupancy curves around random occupied codes.
    Occupancy {
        #[arg(long)]
        codes: PathBuf,
        #[arg(long, default_value_t = 30)]
        anchors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reconstruct an image through the binary code; trains the decoder
    /// first unless `--decoder` is given.
    Decode {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        decoder: Option<PathBuf>,
        #[command(flatten)]
        source: PatchSource,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Finite-difference check of a recipe's model and loss gradients.
    Gradcheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 8)]
        batch: usize,
    },
}

fn parse_probe(s: &str) -> Result<ProbeKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::RawIo(_) | Error::Format(_) | Error::Pnm(_) => 2,
        Error::NonFinite(_) => 3,
        Error::Validation(_) | Error::Contract(_) | Error::Json(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
