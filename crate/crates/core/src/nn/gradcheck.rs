use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;

use super::Mlp;
use crate::rng::{streams, substream};
use crate::{Error, Result};

/// Parameters sampled by [`gradient_check`] (all of them for smaller models).
const MIN_CHECKED: usize = 200;

/// Absolute floor of the relative-error denominator, so parameters whose
/// gradient is zero up to rounding do not produce spurious failures.
const REL_FLOOR: f64 = 1e-8;
/// The floor also scales with the largest gradient of the model: entries
/// this far below it are dominated by finite-difference rounding.
const REL_FLOOR_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Flattened index of the worst parameter.
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central differences of a scalar function at every entry of `x`.
pub fn numerical_gradient<F>(x: ArrayView2<f64>, h: f64, mut f: F) -> Result<Array2<f64>>
where
    F: FnMut(ArrayView2<f64>) -> Result<f64>,
{
    let mut probe = x.to_owned();
    let mut grad = Array2::zeros(x.raw_dim());
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = probe[idx];
        probe[idx] = orig + h;
        let plus = f(probe.view())?;
        probe[idx] = orig - h;
        let minus = f(probe.view())?;
        probe[idx] = orig;
        grad[idx] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Compares reverse-mode parameter gradients with central differences.
///
/// The model is promoted to `f64` and both routes run in 64-bit arithmetic.
/// `loss` maps a batch of model outputs to `(loss, dloss/doutput)`.
pub fn gradient_check<F>(
    model: &Mlp<f32>,
    loss: F,
    batch: ArrayView2<f32>,
    h: f64,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: Fn(ArrayView2<f64>) -> Result<(f64, Array2<f64>)>,
{
    if batch.nrows() == 0 || batch.nrows() > 32 {
        return Err(Error::validation("gradient check expects 1..=32 samples"));
    }
    if !(1e-5..=1e-2).contains(&h) {
        return Err(Error::validation(format!("step {h} outside [1e-5, 1e-2]")));
    }
    let mut m64: Mlp<f64> = model.cast();
    let x = batch.mapv(f64::from);

    let cache = m64.forward_cached(x.view())?;
    let (_, dout) = loss(cache.output().view())?;
    let analytic: Vec<f64> = m64.backward(&cache, dout.view())?.values().collect();

    let total = m64.parameter_count();
    let mut rng = substream(seed, streams::GRADCHECK, 0);
    let mut chosen: Vec<usize> = if total <= MIN_CHECKED {
        (0..total).collect()
    } else {
        sample(&mut rng, total, MIN_CHECKED).into_vec()
    };
    chosen.sort_unstable();

    let floor = REL_FLOOR.max(REL_FLOOR_SCALE * analytic.iter().fold(0.0f64, |m, g| m.max(g.abs())));
    let eval = |m: &Mlp<f64>| -> Result<f64> { Ok(loss(m.forward(x.view())?.view())?.0) };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: chosen.len(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for &i in &chosen {
        let orig = *m64.parameter_mut(i).expect("index in range");
        *m64.parameter_mut(i).unwrap() = orig + h;
        let plus = eval(&m64)?;
        *m64.parameter_mut(i).unwrap() = orig - h;
        let minus = eval(&m64)?;
        *m64.parameter_mut(i).unwrap() = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[i], numeric, floor);
        if err > report.max_rel_error || !err.is_finite() {
            report.max_rel_error = err;
            report.worst_index = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}
