use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::Serialize;
use serde_json::{json, Value};

use ipu_core::analysis::{
    self, empirical_output_stats, encode_corpus, feature_maps, image_mse, knn_hamming, label_grid, mean_patch_image,
    occupancy_stats, probe_response,
};
use ipu_core::data::{
    load_corpus, load_image, sample_pixel_pairs, save_image, synth_pixel_pairs, Image, PatchSampler, SamplerConfig,
    SyntheticCorpus,
};
use ipu_core::discrete::{searched_split, toy_example, write_toy_curve_csv, Objective};
use ipu_core::nn::{gradient_check, Activation, numerical_gradient, read_weights, write_weights, Mlp};
use ipu_core::rng::{streams, substream, Rng};
use ipu_core::train::{self, joint_loss, load_models, train_decoder, DecoderConfig, RecipeConfig};
use ipu_core::{Error, Result};

use crate::{overrides, Cli, Command, ConfigArgs, PatchSource};

/// Tolerance behind the `status` line of `gradcheck`.
const GRADCHECK_TOLERANCE: f64 = 1e-3;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out).map_err(io_err(&cli.out))?;
    let out = cli.out.as_path();
    let (name, resolved) = match &cli.command {
        Command::Oracle { toy_m } => ("oracle", oracle(out, *toy_m)?),
        Command::Train { cfg, preset } => ("train", train_cmd(out, cfg, preset.as_deref())?),
        Command::Stats { weights, source } => ("stats", stats(out, weights, source)?),
        Command::Grid { weights, resolution } => ("grid", grid(out, weights, *resolution)?),
        Command::Encode { weights, source } => ("encode", encode(out, weights, source)?),
        Command::Search { codes, query_index, k } => ("search", search(out, codes, *query_index, *k)?),
        Command::Featmap { weights, image, patch_size } => ("featmap", featmap(out, weights, image, *patch_size)?),
        Command::Probe { weights, probe, width, patch_size } => {
            let models = load_models(weights)?;
            let resp = probe_response(&models, *probe, *width, *patch_size)?;
            analysis::io::write_probe_csv(&out.join("probe.csv"), &resp)?;
            write_json(&out.join("probe.json"), &resp)?;
            println!("activated_fraction={}", resp.activated_fraction);
            println!("single_segment_fraction={}", resp.single_segment_fraction);
            println!("multi_segment_fraction={}", resp.multi_segment_fraction);
            ("probe", Value::Null)
        }
        Command::Occupancy { codes, anchors, seed } => {
            let set = read_code_set(codes)?;
            let curves = occupancy_stats(&set, *anchors, *seed)?;
            analysis::io::write_occupancy_csv(&out.join("occupancy.csv"), &curves)?;
            println!("anchors={} bits={} samples={}", curves.len(), set.bits(), set.total());
            ("occupancy", Value::Null)
        }
        Command::Decode { weights, image, decoder, source, cfg } => {
            ("decode", decode(out, weights, image, decoder.as_deref(), source, cfg)?)
        }
        Command::Gradcheck { cfg, preset, h, batch } => ("gradcheck", gradcheck(out, cfg, preset.as_deref(), *h, *batch)?),
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let run = json!({
        "command": name,
        "argv": std::env::args().collect::<Vec<_>>(),
        "threads": rayon::current_num_threads(),
        "config": resolved,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": started,
    });
    write_json(&out.join("run.json"), &run)
}

fn preset(name: &str) -> Result<RecipeConfig> {
    Ok(match name {
        "two_pixel_ood" => RecipeConfig::two_pixel_ood(16),
        "two_pixel_miod" => RecipeConfig::two_pixel_miod(2, 10),
        "patch_gray" => RecipeConfig::patch_gray(),
        "patch_color" => RecipeConfig::patch_color(),
        other => return Err(Error::Validation(format!("unknown preset {other:?}"))),
    })
}

/// Preset or config file, then `--set` overrides, then strict parsing.
fn resolve_config(args: &ConfigArgs, preset_name: Option<&str>) -> Result<RecipeConfig> {
    let mut doc = match (&args.config, preset_name) {
        (Some(path), _) => serde_json::from_str(&std::fs::read_to_string(path).map_err(io_err(path))?)?,
        (None, Some(name)) => serde_json::to_value(preset(name)?)?,
        (None, None) => return Err(Error::Validation("either --config or --preset is required".into())),
    };
    for s in &args.set {
        overrides::apply(&mut doc, s)?;
    }
    let cfg: RecipeConfig = serde_json::from_value(doc)?;
    cfg.validate()?;
    Ok(cfg)
}

fn oracle(out: &Path, m: usize) -> Result<Value> {
    let toy = toy_example(m)?;
    let path = out.join("toy_curve.csv");
    let file = File::create(&path).map_err(io_err(&path))?;
    write_toy_curve_csv(BufWriter::new(file), &toy)?;
    let searched_t = searched_split(m, Objective::MaxOutputEntropy)?;
    let searched_q = searched_split(m, Objective::MinModeledEntropy)?;
    println!("a_transmission={}", toy.a_transmission);
    println!("a_modeling={}", toy.a_modeling);
    println!("a_modeling/M={:.6}", toy.a_modeling as f64 / m as f64);
    println!("searched_transmission={searched_t}");
    println!("searched_modeling={searched_q}");
    Ok(json!({ "toy_m": m }))
}

fn train_cmd(out: &Path, args: &ConfigArgs, preset_name: Option<&str>) -> Result<Value> {
    let cfg = resolve_config(args, preset_name)?;
    let mut outcome = train::train(&cfg)?;
    outcome.save(out)?;
    if let Some(last) = outcome.report.epoch_losses.last() {
        println!("final_loss={last}");
    }
    println!("init_hash={}", outcome.report.init_hash);
    println!("weights_hash={}", outcome.report.weights_hash);
    Ok(serde_json::to_value(&cfg)?)
}

fn source_images(src: &PatchSource, channels: usize) -> Result<Vec<Image>> {
    match &src.corpus {
        Some(path) => load_corpus(path),
        None => SyntheticCorpus { channels, ..SyntheticCorpus::default() }.generate(),
    }
}

/// `count` patches spread evenly over the corpus, in extraction order.
fn sample_patches(images: &[Image], count: usize, p: usize, channels: usize, seed: u64) -> Result<Array2<f32>> {
    if count == 0 {
        return Err(Error::Validation("--samples must be positive".into()));
    }
    let cfg = SamplerConfig {
        seed,
        batch_images: images.len(),
        patches_per_image: count.div_ceil(images.len()),
        minibatch_size: count,
        flip_probability: 0.5,
        sequential_minibatches: true,
    };
    let sampler = PatchSampler::new(images, cfg, p, channels)?;
    let batch = sampler.outer_batch(0).into_iter().next().expect("one full minibatch");
    Ok(batch.values)
}

/// Inputs matching the models: pixel pairs for two-input models, patches otherwise.
fn model_inputs(models: &[Mlp<f32>], src: &PatchSource) -> Result<Array2<f32>> {
    let dim = models.first().ok_or_else(|| Error::Validation("no models".into()))?.input_dim();
    if dim == 2 {
        let pairs = match &src.corpus {
            Some(path) => sample_pixel_pairs(&load_corpus(path)?, src.samples, src.seed)?,
            None => synth_pixel_pairs(src.samples, src.seed),
        };
        return Ok(pairs.mapv(|v| v as f32));
    }
    let p = src.patch_size;
    let channels = match dim {
        d if d == p * p => 1,
        d if d == 3 * p * p => 3,
        d => return Err(Error::Validation(format!("model input {d} does not fit {p}x{p} patches"))),
    };
    sample_patches(&source_images(src, channels)?, src.samples, p, channels, src.seed)
}

fn stats(out: &Path, weights: &Path, src: &PatchSource) -> Result<Value> {
    let models = load_models(weights)?;
    let x = model_inputs(&models, src)?;
    let st = empirical_output_stats(&models, x.view())?;
    analysis::io::write_histogram_csv(&out.join("histogram.csv"), &st)?;
    analysis::io::write_activation_csv(&out.join("activation.csv"), &st)?;
    write_json(&out.join("stats.json"), &st)?;
    println!("samples={}", st.samples);
    println!("near_binary_fraction={}", st.near_binary_fraction);
    println!("activation_spread={}", st.activation_spread());
    println!("active_count_mode={}", st.active_count_mode());
    Ok(json!({ "samples": src.samples, "patch_size": src.patch_size, "seed": src.seed }))
}

fn grid(out: &Path, weights: &Path, resolution: usize) -> Result<Value> {
    let models = load_models(weights)?;
    let g = label_grid(&models, resolution)?;
    analysis::io::write_label_grid_csv(&out.join("label_grid.csv"), &g)?;
    for d in 0..g.labels.len() {
        println!("dim{d}_distinct_labels={}", g.distinct_labels(d));
    }
    Ok(json!({ "resolution": resolution }))
}

fn encode(out: &Path, weights: &Path, src: &PatchSource) -> Result<Value> {
    let models = load_models(weights)?;
    let x = model_inputs(&models, src)?;
    let enc = encode_corpus(&models, x.view())?;
    let path = out.join("codes.bin");
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    analysis::io::write_codes(&mut w, &enc.set)?;
    w.flush().map_err(io_err(&path))?;
    println!("samples={} distinct={} bits={}", enc.set.total(), enc.set.distinct(), enc.set.bits());
    Ok(json!({ "samples": src.samples, "patch_size": src.patch_size, "seed": src.seed }))
}

fn read_code_set(path: &Path) -> Result<analysis::BinaryCodeSet> {
    let file = File::open(path).map_err(io_err(path))?;
    analysis::io::read_codes(BufReader::new(file))
}

fn search(out: &Path, codes: &Path, query_index: usize, k: usize) -> Result<Value> {
    let set = read_code_set(codes)?;
    let list: Vec<u128> = set.iter().map(|(c, _)| c).collect();
    let query = *list
        .get(query_index)
        .ok_or_else(|| Error::Validation(format!("query index {query_index} out of range ({} codes)", list.len())))?;
    let hits = knn_hamming(&list, query, k)?;
    let text = analysis::io::neighbors_json(&hits);
    write_text(&out.join("neighbors.json"), &text)?;
    println!("{text}");
    Ok(json!({ "query_index": query_index, "k": k }))
}

fn featmap(out: &Path, weights: &Path, image: &Path, p: usize) -> Result<Value> {
    let models = load_models(weights)?;
    let img = load_image(image)?;
    let maps = feature_maps(&models, &img, p)?;
    for n in 0..maps.maps.len() {
        save_image(&maps.to_image(n), out.join(format!("featmap_{n:03}.pgm")))?;
    }
    let (w, h) = maps.dims();
    println!("nodes={} width={w} height={h}", maps.maps.len());
    Ok(json!({ "patch_size": p }))
}

fn decoder_config(args: &ConfigArgs) -> Result<DecoderConfig> {
    let mut doc = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path).map_err(io_err(path))?)?,
        None => serde_json::to_value(DecoderConfig::default())?,
    };
    for s in &args.set {
        overrides::apply(&mut doc, s)?;
    }
    let cfg: DecoderConfig = serde_json::from_value(doc)?;
    cfg.validate()?;
    Ok(cfg)
}

fn decode(
    out: &Path,
    weights: &Path,
    image: &Path,
    decoder: Option<&Path>,
    src: &PatchSource,
    args: &ConfigArgs,
) -> Result<Value> {
    let encoders = load_models(weights)?;
    let img = load_image(image)?;
    let patches = model_inputs(&encoders, src)?;
    let cfg = decoder_config(args)?;
    let model = match decoder {
        Some(path) => read_weights(BufReader::new(File::open(path).map_err(io_err(path))?))?,
        None => {
            let outcome = train_decoder(&encoders, patches.view(), &cfg)?;
            let path = out.join("decoder.ipuw");
            let file = File::create(&path).map_err(io_err(&path))?;
            let mut w = BufWriter::new(file);
            write_weights(&mut w, &outcome.model)?;
            w.flush().map_err(io_err(&path))?;
            outcome.report.write_loss_csv(&out.join("decoder_loss.csv"))?;
            println!("decoder_codes={}", outcome.table.len());
            outcome.model
        }
    };
    let recon = analysis::decode_image(&encoders, &model, &img, src.patch_size)?;
    let ext = if recon.channels() == 1 { "pgm" } else { "ppm" };
    save_image(&recon, out.join(format!("decoded.{ext}")))?;
    let mean = patches.mean_axis(Axis(0)).expect("non-empty patches");
    let target = analysis::adapt_channels(&img, encoders[0].input_dim(), src.patch_size)?;
    let baseline = mean_patch_image(mean.view(), &target, src.patch_size)?;
    let mse = image_mse(&recon, &target)?;
    let base = image_mse(&baseline, &target)?;
    println!("decoded_mse={mse}");
    println!("mean_patch_mse={base}");
    write_json(&out.join("decode.json"), &json!({ "decoded_mse": mse, "mean_patch_mse": base }))?;
    Ok(json!({ "decoder": serde_json::to_value(&cfg)?, "samples": src.samples, "seed": src.seed }))
}

fn gradcheck_batch(cfg: &RecipeConfig, n: usize) -> Array2<f32> {
    if cfg.model.input_dim() == 2 {
        return synth_pixel_pairs(n, cfg.seed).mapv(|v| v as f32);
    }
    let mut rng = substream(cfg.seed, streams::GRADCHECK, 1);
    Array2::from_shape_simple_fn((n, cfg.model.input_dim()), || rng.random::<f32>())
}

#[derive(Serialize)]
struct GradcheckSummary {
    loss_rel_error: Option<f64>,
    model_rel_errors: Vec<f64>,
    tolerance: f64,
}

fn max_rel(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Checks the loss gradient with respect to the outputs, then each model's
/// parameter gradients with the other models' outputs held fixed. Repulsion
/// losses are piecewise smooth, so a step that crosses an l1 tie can report a
/// large error on an otherwise correct gradient.
fn gradcheck(out: &Path, args: &ConfigArgs, preset_name: Option<&str>, h: f64, n: usize) -> Result<Value> {
    let cfg = resolve_config(args, preset_name)?;
    let models: Vec<Mlp<f32>> =
        (0..cfg.models as u64).map(|i| Mlp::init_indexed(&cfg.model, cfg.seed, i)).collect::<Result<_>>()?;
    let x = gradcheck_batch(&cfg, n);
    let outs: Vec<Array2<f64>> = models
        .iter()
        .map(|m| m.cast::<f64>().forward(x.mapv(f64::from).view()))
        .collect::<Result<_>>()?;
    // Softmax outputs must stay normalized, so only unconstrained heads get
    // the direct output-space check.
    let loss_rel_error = if cfg.model.head() == Some(Activation::Softmax) {
        None
    } else {
        let width = outs[0].ncols();
        let views: Vec<ArrayView2<f64>> = outs.iter().map(|o| o.view()).collect();
        let joint = concatenate(Axis(1), &views).map_err(|e| Error::Validation(e.to_string()))?;
        let split = |y: ArrayView2<f64>| -> Vec<Array2<f64>> {
            (0..cfg.models).map(|i| y.slice(ndarray::s![.., i * width..(i + 1) * width]).to_owned()).collect()
        };
        let (_, grads) = joint_loss(&cfg.loss, split(joint.view()))?;
        let gviews: Vec<ArrayView2<f64>> = grads.iter().map(|g| g.view()).collect();
        let analytic = concatenate(Axis(1), &gviews).map_err(|e| Error::Validation(e.to_string()))?;
        let numeric = numerical_gradient(joint.view(), h, |y| Ok(joint_loss(&cfg.loss, split(y))?.0))?;
        Some(max_rel(analytic.view(), numeric.view()))
    };

    let mut model_rel_errors = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let loss = |y: ArrayView2<f64>| -> Result<(f64, Array2<f64>)> {
            let mut all = outs.clone();
            all[i] = y.to_owned();
            let (l, mut g) = joint_loss(&cfg.loss, all)?;
            Ok((l, g.swap_remove(i)))
        };
        let report = gradient_check(m, loss, x.view(), h, cfg.seed)?;
        model_rel_errors.push(report.max_rel_error);
    }
    let summary = GradcheckSummary { loss_rel_error, model_rel_errors, tolerance: GRADCHECK_TOLERANCE };
    write_json(&out.join("gradcheck.json"), &summary)?;
    if let Some(e) = summary.loss_rel_error {
        println!("loss_rel_error={e:.3e}");
    }
    for (i, e) in summary.model_rel_errors.iter().enumerate() {
        println!("model{i}_rel_error={e:.3e}");
    }
    let worst = summary.model_rel_errors.iter().copied().fold(summary.loss_rel_error.unwrap_or(0.0), f64::max);
    if !worst.is_finite() {
        return Err(Error::NonFinite("gradient check".into()));
    }
    println!("status={}", if worst <= GRADCHECK_TOLERANCE { "ok" } else { "mismatch" });
    Ok(serde_json::to_value(&cfg)?)
}
