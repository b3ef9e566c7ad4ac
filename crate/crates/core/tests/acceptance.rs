//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in
//! order and share trained models (11 reuses 9, 12 re-runs 7 to 9).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2, Axis};

use ipu_core::analysis::{
    decode_image, empirical_joint_independence, empirical_output_stats, hamming, image_mse, knn_hamming,
    mean_patch_image, occupancy_curve, BinaryCodeSet,
};
use ipu_core::data::{PatchSampler, SamplerConfig, SyntheticCorpus};
use ipu_core::discrete::{
    boundary_shift_delta_hq, cross_entropy, entropy, entropy_nats,
    exhaustive_contiguous_partition, hq_grouped, linear_decay, modeled_distribution, push_forward, searched_split,
    toy_example, transmission_rate, DiscreteDistribution, LogBase, Objective, Partition,
};
use ipu_core::loss::{miod_objective, ood_objective, repel, RepelLossConfig, RepelMode, DEFAULT_EPSILON};
use ipu_core::nn::{numerical_gradient, weights_to_bytes, Mlp};
use ipu_core::rng::{stream, Rng};
use ipu_core::train::{train, train_decoder, two_pixel_data, DecoderConfig, RecipeConfig};

/// Outer batches of 100 images x 1000 patches for the grayscale recipe.
const GRAY_BATCHES: usize = 300;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn run(id: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let t0 = Instant::now();
    let mut v = f();
    let took = t0.elapsed();
    if let Some(b) = budget {
        if took > b {
            v.pass = false;
            v.detail.push_str(&format!("; over the {}s budget", b.as_secs()));
        }
    }
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id:>2} {name}: {} ({:.1}s)", v.detail, took.as_secs_f64());
    v.pass
}

fn random_distribution(m: usize, rng: &mut impl Rng) -> DiscreteDistribution {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(1e-3..1.0)).collect();
    DiscreteDistribution::from_weights(&w).unwrap()
}

/// Arbitrary (not necessarily contiguous) partition with every group used.
fn random_partition(m: usize, n: usize, rng: &mut impl Rng) -> Partition {
    let mut assignment: Vec<usize> = (0..m).map(|i| if i < n { i } else { rng.random_range(0..n) }).collect();
    for i in (1..m).rev() {
        assignment.swap(i, rng.random_range(0..=i));
    }
    Partition::new(assignment, n).unwrap()
}

fn transmission_identity() -> Verdict {
    let mut rng = stream(1, 1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_distribution(1000, &mut rng);
        let f = random_partition(1000, 10, &mut rng);
        let t = transmission_rate(&p, &f).unwrap();
        worst = worst.max((t.direct - t.via_output_entropy).abs());
    }
    verdict(worst < 1e-12, format!("max |I - H_Q| = {worst:.2e} over 100 instances"))
}

fn cross_entropy_identity() -> Verdict {
    let mut rng = stream(2, 1);
    let (mut worst_pq, mut worst_grouped) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let m = rng.random_range(20..400);
        let n = rng.random_range(2..12);
        let p = random_distribution(m, &mut rng);
        let f = random_partition(m, n, &mut rng);
        let big_q = push_forward(&p, &f).unwrap();
        let q = modeled_distribution(&big_q, &f).unwrap();
        let hq = entropy(&q, LogBase::Nats);
        worst_pq = worst_pq.max((cross_entropy(&p, &q).unwrap() - hq).abs());
        worst_grouped = worst_grouped.max((hq_grouped(&big_q, &f).unwrap() - hq).abs());
    }
    verdict(
        worst_pq < 1e-12 && worst_grouped < 1e-12,
        format!("max |H_pq - H_q| = {worst_pq:.2e}, max |grouped - H_q| = {worst_grouped:.2e}"),
    )
}

fn toy_problem() -> Verdict {
    let m = 100_000;
    let toy = toy_example(m).unwrap();
    let r = toy.a_modeling as f64 / m as f64;
    let dp_t = searched_split(m, Objective::MaxOutputEntropy).unwrap();
    let dp_q = searched_split(m, Objective::MinModeledEntropy).unwrap();
    let ok = (toy.a_transmission as i64 - 29_289).abs() <= 1
        && (r - 0.602).abs() <= 0.002
        && (dp_t as i64 - toy.a_transmission as i64).abs() <= 2
        && (dp_q as i64 - toy.a_modeling as i64).abs() <= 2;
    verdict(
        ok,
        format!(
            "a_transmission = {} (search {dp_t}), a_modeling/M = {r:.5} (search {dp_q})",
            toy.a_transmission
        ),
    )
}

fn non_equivalence() -> Verdict {
    let p = DiscreteDistribution::from_weights(&[6.0, 5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
    let ht = exhaustive_contiguous_partition(&p, 2, Objective::MaxOutputEntropy).unwrap().boundaries().unwrap();
    let hm = exhaustive_contiguous_partition(&p, 2, Objective::MinModeledEntropy).unwrap().boundaries().unwrap();
    // independent enumeration of the five single boundaries
    let mut best_t = (f64::NEG_INFINITY, 0);
    let mut best_m = (f64::INFINITY, 0);
    for b in 1..6 {
        let f = Partition::from_boundaries(6, &[b]).unwrap();
        let q = push_forward(&p, &f).unwrap();
        let h_big = entropy_nats(q.probs());
        let h_small = entropy(&modeled_distribution(&q, &f).unwrap(), LogBase::Nats);
        if h_big > best_t.0 + 1e-12 {
            best_t = (h_big, b);
        }
        if h_small < best_m.0 - 1e-12 {
            best_m = (h_small, b);
        }
    }
    let ok = ht != hm && ht == vec![best_t.1] && hm == vec![best_m.1];
    verdict(ok, format!("max H_Q boundary {ht:?}, min H_q boundary {hm:?}"))
}

fn max_rel_error(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-6 * scale).max(1e-12);
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor)).fold(0.0, f64::max)
}

fn softmax_rows(s: usize, n: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut y = Array2::from_shape_simple_fn((s, n), || rng.random_range(-1.0..1.0f64).exp());
    for mut row in y.rows_mut() {
        let z = row.sum();
        row.mapv_inplace(|v| v / z);
    }
    y
}

/// Values on a grid so every coordinate gap between two rows is at least
/// `1/(4s)`; the l1 terms stay differentiable under the probe step.
fn spread_rows(s: usize, d: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut out = Array2::zeros((s, d));
    for mut col in out.columns_mut() {
        let mut levels: Vec<f64> = (0..s).map(|k| (k as f64 + 0.5) / s as f64).collect();
        for k in (1..s).rev() {
            levels.swap(k, rng.random_range(0..=k));
        }
        for (v, l) in col.iter_mut().zip(levels) {
            *v = l + rng.random_range(-0.1..0.1) / s as f64;
        }
    }
    out
}

fn gradient_fidelity() -> Verdict {
    let mut rng = stream(5, 1);
    let h = 1e-6;
    let k = 2.0 / 3.0;
    let mut worst = [0.0f64; 4];
    for _ in 0..20 {
        let y = softmax_rows(8, 5, &mut rng);
        let analytic = ood_objective(y.view(), k).unwrap().grad;
        let fd = numerical_gradient(y.view(), h, |v| Ok(ood_objective(v, k)?.loss)).unwrap();
        worst[0] = worst[0].max(max_rel_error(analytic.view(), fd.view()));

        let dims = [softmax_rows(8, 4, &mut rng), softmax_rows(8, 3, &mut rng)];
        let views = [dims[0].view(), dims[1].view()];
        let (_, grads) = miod_objective(&views, k).unwrap();
        for d in 0..2 {
            let fd = numerical_gradient(dims[d].view(), h, |v| {
                let mut vs = views;
                vs[d] = v;
                Ok(miod_objective(&vs, k)?.0)
            })
            .unwrap();
            worst[1] = worst[1].max(max_rel_error(grads[d].view(), fd.view()));
        }

        let y = spread_rows(7, 6, &mut rng);
        let cfg = RepelLossConfig::new(RepelMode::SampleWise, 0.05, DEFAULT_EPSILON);
        let analytic = repel(y.view(), &cfg).unwrap().grad;
        let fd = numerical_gradient(y.view(), h, |v| Ok(repel(v, &cfg)?.loss)).unwrap();
        worst[2] = worst[2].max(max_rel_error(analytic.view(), fd.view()));

        let y = spread_rows(9, 6, &mut rng).reversed_axes().as_standard_layout().into_owned();
        let cfg = RepelLossConfig::new(RepelMode::NodeWise, 0.0625, DEFAULT_EPSILON);
        let analytic = repel(y.view(), &cfg).unwrap().grad;
        let fd = numerical_gradient(y.view(), h, |v| Ok(repel(v, &cfg)?.loss)).unwrap();
        worst[3] = worst[3].max(max_rel_error(analytic.view(), fd.view()));
    }
    verdict(
        worst.iter().all(|&e| e < 1e-3),
        format!(
            "max rel error ood {:.1e}, miod {:.1e}, sample-wise {:.1e}, node-wise {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn boundary_shift() -> Verdict {
    let m = 10_000;
    let p = linear_decay(m).unwrap();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let a = 500 + 180 * k;
        let f = Partition::from_boundaries(m, &[a]).unwrap();
        let q = push_forward(&p, &f).unwrap();
        let (donor, receiver) = if q.probs()[0] >= q.probs()[1] { (0, 1) } else { (1, 0) };
        let s = boundary_shift_delta_hq(&p, &f, donor, receiver).unwrap();
        worst = worst.max(((s.exact - s.first_order) / s.exact).abs());
    }
    verdict(worst < 0.05, format!("max relative error {:.2}% over 50 boundaries", 100.0 * worst))
}

fn argmax_labels(model: &Mlp<f32>, x: ArrayView2<f32>) -> Vec<usize> {
    let y = model.forward(x).unwrap();
    y.rows().into_iter().map(|r| ipu_core::analysis::argmax(r.iter())).collect()
}

fn two_pixel_ood() -> (Verdict, Vec<u8>) {
    let mut cfg = RecipeConfig::two_pixel_ood(16);
    cfg.data.pairs = 1_000_000;
    cfg.epochs = 5;
    cfg.seed = 1;
    let out = train(&cfg).unwrap();
    let held = two_pixel_data(&cfg, 1_000_000, true).unwrap().mapv(|v| v as f32);
    let labels = argmax_labels(&out.models[0], held.view());
    let mut counts = [0usize; 16];
    for l in labels {
        counts[l] += 1;
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / held.nrows() as f64).collect();
    let h = entropy_nats(&probs);
    let (lo, hi) = probs.iter().fold((1.0f64, 0.0f64), |(a, b), &p| (a.min(p), b.max(p)));
    let ok = h >= 0.95 * 16f64.ln() && lo >= 0.5 / 16.0 && hi <= 2.0 / 16.0;
    let v = verdict(
        ok,
        format!("H = {h:.4} (bound {:.4}), state probabilities in [{:.4}, {:.4}] x 1/16", 0.95 * 16f64.ln(), 16.0 * lo, 16.0 * hi),
    );
    (v, weights_to_bytes(&out.models[0]))
}

fn two_pixel_miod() -> (Verdict, Vec<u8>) {
    let mut cfg = RecipeConfig::two_pixel_miod(2, 10);
    cfg.data.pairs = 1_000_000;
    cfg.epochs = 5;
    cfg.seed = 1;
    let out = train(&cfg).unwrap();
    let held = two_pixel_data(&cfg, 1_000_000, true).unwrap().mapv(|v| v as f32);
    let ind = empirical_joint_independence(&out.models, held.view()).unwrap();
    let ok = ind.tv_distance < 0.05 && ind.marginal_dev <= 0.2;
    let v = verdict(
        ok,
        format!("TV = {:.4}, max marginal deviation {:.1}%", ind.tv_distance, 100.0 * ind.marginal_dev),
    );
    (v, out.models.iter().flat_map(weights_to_bytes).collect())
}

fn gray_config() -> RecipeConfig {
    let mut cfg = RecipeConfig::patch_gray();
    cfg.epochs = 1;
    cfg.seed = 1;
    cfg.data.batches = GRAY_BATCHES;
    cfg.data.synthetic = SyntheticCorpus { count: 100, width: 96, height: 96, channels: 1, seed: 1 };
    let sampler = cfg.data.sampler.as_mut().expect("preset sampler");
    sampler.seed = 1;
    sampler.batch_images = 100;
    cfg
}

fn held_out_patches(count: usize, per_image: usize) -> Array2<f32> {
    let images = SyntheticCorpus { count, width: 96, height: 96, channels: 1, seed: 99 }.generate().unwrap();
    let cfg = SamplerConfig {
        seed: 5,
        batch_images: count,
        patches_per_image: per_image,
        minibatch_size: count * per_image,
        flip_probability: 0.0,
        sequential_minibatches: true,
    };
    PatchSampler::new(&images, cfg, 4, 1).unwrap().outer_batch(0).remove(0).values
}

fn patch_binarization() -> (Verdict, Vec<Mlp<f32>>) {
    let cfg = gray_config();
    let out = train(&cfg).unwrap();
    let held = held_out_patches(20, 1000);
    let st = empirical_output_stats(&out.models, held.view()).unwrap();
    let spread = st.activation_spread();
    let ok = st.near_binary_fraction >= 0.95 && spread <= 5.0;
    let v = verdict(
        ok,
        format!(
            "{} training patches, {:.1}% of held-out outputs within 0.05 of 0/1 (need 95%), activation spread {spread:.2}x",
            cfg.data.batches * 100_000,
            100.0 * st.near_binary_fraction
        ),
    );
    (v, out.models)
}

fn similarity_search() -> Verdict {
    let mut rng = stream(10, 1);
    let codes: Vec<u128> = (0..10_000).map(|_| rng.random::<u64>() as u128).collect();
    let mut mismatches = 0;
    for q in 0..50 {
        let query = if q % 2 == 0 { codes[rng.random_range(0..codes.len())] } else { rng.random::<u64>() as u128 };
        let mut oracle: Vec<(u32, usize)> = codes.iter().enumerate().map(|(i, &c)| (hamming(c, query), i)).collect();
        oracle.sort();
        for k in [1, 5, 10] {
            let got: Vec<(u32, usize)> =
                knn_hamming(&codes, query, k).unwrap().into_iter().map(|n| (n.distance, n.index)).collect();
            if got != oracle[..k] {
                mismatches += 1;
            }
        }
    }
    let sample: Vec<u128> = (0..100).map(|_| rng.random_range(0..256u128)).collect();
    let set = BinaryCodeSet::from_codes(8, sample.iter().copied()).unwrap();
    let mut occupancy_ok = true;
    for (anchor, _) in set.iter() {
        let curve = occupancy_curve(&set, anchor);
        let mut at = [0u64; 9];
        let mut sites = [0u64; 9];
        for site in 0..256u128 {
            let d = hamming(site, anchor) as usize;
            sites[d] += 1;
            at[d] += set.count(site);
        }
        let mut cum = 0;
        for d in 0..=8 {
            cum += at[d];
            let rate = at[d] as f64 / sites[d] as f64;
            occupancy_ok &= curve.cumulative[d] == cum && (curve.rate[d] - rate).abs() < 1e-12;
        }
    }
    verdict(
        mismatches == 0 && occupancy_ok,
        format!(
            "{mismatches} kNN mismatches over 150 queries on 10^4 codes; occupancy {} enumeration for {} anchors",
            if occupancy_ok { "matches" } else { "differs from" },
            set.distinct()
        ),
    )
}

fn decoder_sanity(encoders: &[Mlp<f32>]) -> Verdict {
    let train_patches = {
        let images = gray_config().data.synthetic.generate().unwrap();
        let cfg = SamplerConfig {
            seed: 7,
            batch_images: 100,
            patches_per_image: 1000,
            minibatch_size: 100_000,
            flip_probability: 0.0,
            sequential_minibatches: true,
        };
        PatchSampler::new(&images, cfg, 4, 1).unwrap().outer_batch(0).remove(0).values
    };
    let dec = train_decoder(encoders, train_patches.view(), &DecoderConfig { seed: 1, ..DecoderConfig::default() })
        .unwrap();
    let image = SyntheticCorpus { count: 1, width: 96, height: 96, channels: 1, seed: 99 }.generate().unwrap().remove(0);
    let recon = decode_image(encoders, &dec.model, &image, 4).unwrap();
    let mean = train_patches.mean_axis(Axis(0)).unwrap();
    let baseline = mean_patch_image(mean.view(), &image, 4).unwrap();
    let (mse, base) = (image_mse(&recon, &image).unwrap(), image_mse(&baseline, &image).unwrap());
    verdict(
        mse < base,
        format!("decoded MSE {mse:.5} vs mean-patch MSE {base:.5} ({} distinct codes)", dec.table.len()),
    )
}

fn main() -> ExitCode {
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let mut results = Vec::new();
    results.push(run(1, "transmission identity", Some(Duration::from_secs(5)), transmission_identity));
    results.push(run(2, "cross-entropy identity", None, cross_entropy_identity));
    results.push(run(3, "toy example", Some(Duration::from_secs(10)), toy_problem));
    results.push(run(4, "non-equivalence witness", None, non_equivalence));
    results.push(run(5, "gradient fidelity", Some(Duration::from_secs(30)), gradient_fidelity));
    results.push(run(6, "boundary-shift expansion", None, boundary_shift));

    let mut ood_bytes = Vec::new();
    results.push(run(7, "two-pixel OOD training", min(10), || {
        let (v, b) = two_pixel_ood();
        ood_bytes = b;
        v
    }));
    let mut miod_bytes = Vec::new();
    results.push(run(8, "two-pixel MIOD training", min(15), || {
        let (v, b) = two_pixel_miod();
        miod_bytes = b;
        v
    }));
    let mut gray = Vec::new();
    results.push(run(9, "patch binarization", min(60), || {
        let (v, m) = patch_binarization();
        gray = m;
        v
    }));
    results.push(run(10, "similarity search", None, similarity_search));
    results.push(run(11, "decoder sanity", None, || decoder_sanity(&gray)));
    results.push(run(12, "determinism", None, || {
        let (_, a) = two_pixel_ood();
        let (_, b) = two_pixel_miod();
        let c = train(&gray_config()).unwrap();
        let same = [a == ood_bytes, b == miod_bytes, c.models.len() == gray.len()
            && c.models.iter().zip(&gray).all(|(x, y)| weights_to_bytes(x) == weights_to_bytes(y))];
        verdict(same.iter().all(|&s| s), format!("bit-identical weights for criteria 7/8/9: {same:?}"))
    }));

    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    // failures are always reported; they only fail the process when asked to
    if passed == results.len() || std::env::var_os("IPU_ACCEPTANCE_STRICT").is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
