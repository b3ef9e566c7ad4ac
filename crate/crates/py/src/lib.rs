//! Python bindings: the discrete calculus, the even-coding losses, models,
//! training and the binary-code analyses. Matrices cross the boundary as
//! lists of rows.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use ndarray::{Array2, ArrayView2};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use ipu_core::analysis::{self, codes_from_outputs, joint_outputs, knn_hamming, BinaryCodeSet};
use ipu_core::discrete::{
    self, best_contiguous_partition, DiscreteDistribution, LogBase, Objective, OutputDistribution, Partition,
};
use ipu_core::loss::{self, MultiDimBatch, OodLossConfig, RepelLossConfig, RepelMode};
use ipu_core::nn::{read_weights, weights_hash, write_weights, Activation, Mlp, ModelSpec};
use ipu_core::train::{self, RecipeConfig};
use ipu_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::RawIo(_) | Error::Format(_) | Error::Pnm(_) => PyOSError::new_err(e.to_string()),
        Error::NonFinite(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for ipu_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn matrix<T: Copy>(rows: Vec<Vec<T>>) -> PyResult<Array2<T>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows<T: Copy>(a: ArrayView2<T>) -> Vec<Vec<T>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn parse_enum<T: serde::de::DeserializeOwned>(name: &str, what: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} {name:?}")))
}

fn partition(assignment: Vec<usize>, n_groups: usize) -> PyResult<Partition> {
    Partition::new(assignment, n_groups).py()
}

/// Entropy of a probability vector, in nats or bits.
#[pyfunction]
#[pyo3(signature = (probs, base = "nats"))]
fn entropy(probs: Vec<f64>, base: &str) -> PyResult<f64> {
    let base: LogBase = parse_enum(base, "log base")?;
    Ok(discrete::entropy(&DiscreteDistribution::new(probs).py()?, base))
}

/// Output distribution `Q` of a partition, one probability per group.
#[pyfunction]
fn push_forward(p: Vec<f64>, assignment: Vec<usize>, n_groups: usize) -> PyResult<Vec<f64>> {
    let p = DiscreteDistribution::new(p).py()?;
    Ok(discrete::push_forward(&p, &partition(assignment, n_groups)?).py()?.probs().to_vec())
}

/// Piecewise-constant model `q(x)` of `p` implied by the partition.
#[pyfunction]
fn modeled_distribution(p: Vec<f64>, assignment: Vec<usize>, n_groups: usize) -> PyResult<Vec<f64>> {
    let p = DiscreteDistribution::new(p).py()?;
    let f = partition(assignment, n_groups)?;
    let q = discrete::push_forward(&p, &f).py()?;
    Ok(discrete::modeled_distribution(&q, &f).py()?.probs().to_vec())
}

/// `H_q` from group probabilities and sizes.
#[pyfunction]
fn hq_grouped(q: Vec<f64>, assignment: Vec<usize>, n_groups: usize) -> PyResult<f64> {
    let q = OutputDistribution::new(q).py()?;
    discrete::hq_grouped(&q, &partition(assignment, n_groups)?).py()
}

/// `D_KL(p || q)` for the model implied by the partition.
#[pyfunction]
fn kl_p_q(p: Vec<f64>, assignment: Vec<usize>, n_groups: usize) -> PyResult<f64> {
    let p = DiscreteDistribution::new(p).py()?;
    discrete::kl_p_q(&p, &partition(assignment, n_groups)?).py()
}

/// `(direct mutual information, H_Q)` of a deterministic partition.
#[pyfunction]
fn transmission_rate(p: Vec<f64>, assignment: Vec<usize>, n_groups: usize) -> PyResult<(f64, f64)> {
    let p = DiscreteDistribution::new(p).py()?;
    let t = discrete::transmission_rate(&p, &partition(assignment, n_groups)?).py()?;
    Ok((t.direct, t.via_output_entropy))
}

/// Boundaries of the optimal contiguous partition; `objective` is
/// `"max_HQ"` or `"min_Hq"`.
#[pyfunction]
fn best_partition(p: Vec<f64>, n: usize, objective: &str) -> PyResult<Vec<usize>> {
    let objective: Objective = parse_enum(objective, "objective")?;
    let p = DiscreteDistribution::new(p).py()?;
    let f = best_contiguous_partition(&p, n, objective).py()?;
    Ok(f.boundaries().expect("contiguous by construction"))
}

/// `(a_transmission, a_modeling)` of the linear-decay toy problem.
#[pyfunction]
fn toy_example(m: usize) -> PyResult<(usize, usize)> {
    let t = discrete::toy_example(m).py()?;
    Ok((t.a_transmission, t.a_modeling))
}

/// One-dimension even-coding loss and its gradient.
#[pyfunction]
#[pyo3(signature = (batch, k = 2.0 / 3.0))]
fn e_ood(batch: Vec<Vec<f64>>, k: f64) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let y = matrix(batch)?;
    let out = loss::e_ood(y.view(), &OodLossConfig { k }).py()?;
    Ok((out.loss, rows(out.grad.view())))
}

/// Multi-dimension even-coding loss; one batch per output dimension.
#[pyfunction]
#[pyo3(signature = (dims, k = 2.0 / 3.0))]
fn e_miod(dims: Vec<Vec<Vec<f64>>>, k: f64) -> PyResult<(f64, Vec<Vec<Vec<f64>>>)> {
    let dims = dims.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
    let batch = MultiDimBatch::new(dims).py()?;
    let (l, grads) = loss::e_miod(&batch, &OodLossConfig { k }).py()?;
    Ok((l, grads.iter().map(|g| rows(g.view())).collect()))
}

/// Repulsion loss; `mode` is `"sample_wise"` or `"node_wise"`.
#[pyfunction]
#[pyo3(signature = (batch, mode, alpha = 0.0, epsilon = 1e-38))]
fn repel(batch: Vec<Vec<f64>>, mode: &str, alpha: f64, epsilon: f64) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let mode: RepelMode = parse_enum(mode, "repel mode")?;
    let y = matrix(batch)?;
    let out = loss::repel(y.view(), &RepelLossConfig::new(mode, alpha, epsilon)).py()?;
    Ok((out.loss, rows(out.grad.view())))
}

/// A dense MLP with `f32` parameters.
#[pyclass(name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: Mlp<f32>,
}

#[pymethods]
impl PyModel {
    /// Seeded initialization of `dims[0] -> dims[1] -> ...`.
    #[new]
    #[pyo3(signature = (dims, hidden = "relu", head = "sigmoid", seed = 0))]
    fn new(dims: Vec<usize>, hidden: &str, head: &str, seed: u64) -> PyResult<Self> {
        let hidden: Activation = parse_enum(hidden, "activation")?;
        let head: Activation = parse_enum(head, "activation")?;
        let spec = ModelSpec::chain(&dims, hidden, head);
        Ok(Self { inner: Mlp::init(&spec, seed).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = File::open(&path).map_err(|e| py_err(Error::Io { path, source: e }))?;
        Ok(Self { inner: read_weights(BufReader::new(file)).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let io = |e| py_err(Error::Io { path: path.clone(), source: e });
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        write_weights(&mut w, &self.inner).py()?;
        w.flush().map_err(io)
    }

    fn forward(&self, batch: Vec<Vec<f32>>) -> PyResult<Vec<Vec<f32>>> {
        let x = matrix(batch)?;
        Ok(rows(self.inner.forward(x.view()).py()?.view()))
    }

    /// SHA-256 of the serialized weights.
    fn hash(&self) -> String {
        weights_hash([&self.inner])
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    fn __repr__(&self) -> String {
        format!("Model({} -> {}, {} parameters)", self.input_dim(), self.output_dim(), self.parameter_count())
    }
}

fn unwrap_models(models: Vec<PyRef<'_, PyModel>>) -> Vec<Mlp<f32>> {
    models.iter().map(|m| m.inner.clone()).collect()
}

/// Trains a recipe from its JSON config. Returns the models and the report
/// as a JSON string; with `out_dir` the artifacts are written there too.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir = None))]
fn train_recipe(py: Python<'_>, config_json: &str, out_dir: Option<PathBuf>) -> PyResult<(Vec<PyModel>, String)> {
    let cfg = RecipeConfig::from_json(config_json).py()?;
    let mut outcome = py.detach(|| train::train(&cfg)).py()?;
    if let Some(dir) = out_dir {
        outcome.save(&dir).py()?;
    }
    let report = serde_json::to_string(&outcome.report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((outcome.models.into_iter().map(|inner| PyModel { inner }).collect(), report))
}

/// Binary codes of the joint rounded output, one integer per sample.
#[pyfunction]
fn encode(models: Vec<PyRef<'_, PyModel>>, batch: Vec<Vec<f32>>) -> PyResult<Vec<u128>> {
    let models = unwrap_models(models);
    let x = matrix(batch)?;
    let out = joint_outputs(&models, x.view()).py()?;
    codes_from_outputs(out.view()).py()
}

/// `k` nearest codes by Hamming distance as `(index, distance)` pairs.
#[pyfunction]
fn knn(codes: Vec<u128>, query: u128, k: usize) -> PyResult<Vec<(usize, u32)>> {
    Ok(knn_hamming(&codes, query, k).py()?.into_iter().map(|n| (n.index, n.distance)).collect())
}

/// Writes `(code, count)` entries in the binary code-set format.
#[pyfunction]
fn write_codes(path: PathBuf, bits: usize, entries: Vec<(u128, u64)>) -> PyResult<()> {
    let mut set = BinaryCodeSet::new(bits).py()?;
    for (code, count) in entries {
        set.insert(code, count).py()?;
    }
    let file = File::create(&path).map_err(|e| py_err(Error::Io { path: path.clone(), source: e }))?;
    analysis::io::write_codes(BufWriter::new(file), &set).py()
}

/// `(bits, [(code, count), ...])` from a code-set file.
#[pyfunction]
fn read_codes(path: PathBuf) -> PyResult<(usize, Vec<(u128, u64)>)> {
    let file = File::open(&path).map_err(|e| py_err(Error::Io { path, source: e }))?;
    let set = analysis::io::read_codes(BufReader::new(file)).py()?;
    Ok((set.bits(), set.iter().collect()))
}

#[pymodule]
fn ipu_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(push_forward, m)?)?;
    m.add_function(wrap_pyfunction!(modeled_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(hq_grouped, m)?)?;
    m.add_function(wrap_pyfunction!(kl_p_q, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_rate, m)?)?;
    m.add_function(wrap_pyfunction!(best_partition, m)?)?;
    m.add_function(wrap_pyfunction!(toy_example, m)?)?;
    m.add_function(wrap_pyfunction!(e_ood, m)?)?;
    m.add_function(wrap_pyfunction!(e_miod, m)?)?;
    m.add_function(wrap_pyfunction!(repel, m)?)?;
    m.add_function(wrap_pyfunction!(train_recipe, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(knn, m)?)?;
    m.add_function(wrap_pyfunction!(write_codes, m)?)?;
    m.add_function(wrap_pyfunction!(read_codes, m)?)?;
    Ok(())
}
