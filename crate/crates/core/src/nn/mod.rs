//! Dense feed-forward networks sized for the IPU experiments.
//!
//! Parameters and activations are `f32` for training. The same code is
//! generic over [`Real`] so the gradient checker can run every path in `f64`.

mod gradcheck;
mod io;
mod mlp;
mod optim;
mod real;
mod spec;

pub use gradcheck::{gradient_check, numerical_gradient, GradCheckReport};
pub use io::{read_weights, weights_from_bytes, weights_hash, weights_to_bytes, write_weights, WEIGHTS_MAGIC};
pub use mlp::{Dense, ForwardCache, Gradients, LayerGrad, Mlp};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use real::Real;
pub use spec::{Activation, LayerSpec, ModelSpec};
