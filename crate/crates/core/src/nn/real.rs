use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};

/// Floating point element type of a network.
pub trait Real:
    LinalgScalar + ScalarOperand + PartialOrd + Debug + Default + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    /// `delta^T . input`, summed over the batch with 64-bit accumulation.
    fn weight_grad(delta: ArrayView2<Self>, input: ArrayView2<Self>) -> Array2<Self>;

    /// Column sums of `delta` with 64-bit accumulation.
    fn bias_grad(delta: ArrayView2<Self>) -> Array1<Self> {
        delta
            .axis_iter(Axis(1))
            .map(|col| Self::from_f64(col.iter().map(|v| v.to_f64()).sum()))
            .collect()
    }
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn weight_grad(delta: ArrayView2<Self>, input: ArrayView2<Self>) -> Array2<Self> {
        let d = delta.mapv(f64::from);
        let x = input.mapv(f64::from);
        d.t().dot(&x).mapv(|v| v as f32)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn weight_grad(delta: ArrayView2<Self>, input: ArrayView2<Self>) -> Array2<Self> {
        delta.t().dot(&input)
    }
}
