use ndarray::Array2;

use crate::rng::{streams, substream, Rng};
use crate::{Error, Result};

/// `count` draws from N(mean, cov), via Box-Muller and a Cholesky factor. Not clamped.
pub fn synth_gaussian_2d(count: usize, mean: [f64; 2], cov: [[f64; 2]; 2], seed: u64) -> Result<Array2<f64>> {
    let [[a, b], [c, d]] = cov;
    if !(mean.iter().chain(cov.iter().flatten()).all(|v| v.is_finite())) {
        return Err(Error::validation("mean and covariance must be finite"));
    }
    if (b - c).abs() > 1e-12 * b.abs().max(c.abs()).max(1.0) {
        return Err(Error::validation(format!("covariance is not symmetric: {b} vs {c}")));
    }
    let det = a * d - b * c;
    if !(a > 0.0 && det > 0.0) {
        return Err(Error::validation(format!("covariance is not positive definite (a={a}, det={det})")));
    }
    let l11 = a.sqrt();
    let l21 = b / l11;
    let l22 = (d - l21 * l21).sqrt();

    let mut rng = substream(seed, streams::GAUSSIAN, 0);
    let mut out = Array2::zeros((count, 2));
    for mut row in out.rows_mut() {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        let (z0, z1) = (r * c, r * s);
        row[0] = mean[0] + l11 * z0;
        row[1] = mean[1] + l21 * z0 + l22 * z1;
    }
    Ok(out)
}

/// Synthetic stand-in for neighbouring pixel intensities: a strongly
/// correlated Gaussian clamped to the unit square.
pub fn synth_pixel_pairs(count: usize, seed: u64) -> Array2<f64> {
    let (sd, rho) = (0.2, 0.95);
    let v = sd * sd;
    synth_gaussian_2d(count, [0.5, 0.5], [[v, rho * v], [rho * v, v]], seed)
        .expect("fixed covariance is positive definite")
        .mapv(|x| x.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_covariance_rejected() {
        assert!(synth_gaussian_2d(10, [0.0; 2], [[0.0, 0.0], [0.0, 0.0]], 1).is_err());
        assert!(synth_gaussian_2d(10, [0.0; 2], [[1.0, 1.0], [1.0, 1.0]], 1).is_err());
        assert!(synth_gaussian_2d(10, [0.0; 2], [[1.0, 0.5], [0.4, 1.0]], 1).is_err());
    }

    #[test]
    fn moments_converge() {
        let mean = [0.3, -1.0];
        let cov = [[1.0, 0.0], [0.0, 1.0]];
        let x = synth_gaussian_2d(1_000_000, mean, cov, 11).unwrap();
        let n = x.nrows() as f64;
        let m: Vec<f64> = (0..2).map(|j| x.column(j).sum() / n).collect();
        for j in 0..2 {
            assert!((m[j] - mean[j]).abs() < 0.005);
            for k in 0..2 {
                let c = x.column(j).iter().zip(x.column(k)).map(|(a, b)| (a - m[j]) * (b - m[k])).sum::<f64>() / n;
                assert!((c - cov[j][k]).abs() < 0.01, "cov[{j}][{k}] = {c}");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cov = [[0.04, 0.03], [0.03, 0.04]];
        let a = synth_gaussian_2d(1000, [0.5, 0.5], cov, 3).unwrap();
        assert_eq!(a, synth_gaussian_2d(1000, [0.5, 0.5], cov, 3).unwrap());
        assert_ne!(a, synth_gaussian_2d(1000, [0.5, 0.5], cov, 4).unwrap());
    }

    #[test]
    fn clamped_pairs_are_correlated() {
        let x = synth_pixel_pairs(10_000, 0);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        let d: f64 = x.rows().into_iter().map(|r| (r[0] - r[1]).abs()).sum::<f64>() / 10_000.0;
        assert!(d < 0.1);
    }
}
