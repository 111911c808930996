//! Python bindings: `import dynent`.
//!
//! Matrices cross the boundary as nested lists of complex numbers. Reports
//! come back as plain dictionaries.

use dynent_core::channels::{self, ChannelFamily, ChannelSpec, QuantumChannel};
use dynent_core::decoupling::{self, HaarSampler};
use dynent_core::linalg::{self, HermitianOperator};
use dynent_core::{cli, dynamical, entropies, thermo, ComplexMatrix, DensityOperator, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

type Rows = Vec<Vec<Complex64>>;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Validation(_) | Error::DimensionMismatch(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        Error::Solver { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for dynent_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("expected a non-empty rectangular nested list"));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn from_matrix(m: &ComplexMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(a) => {
            let items = a.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report<'py, T: Serialize>(py: Python<'py>, r: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(r).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// A density operator with subsystem dimensions.
#[pyclass(name = "State", module = "dynent", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: DensityOperator,
}

#[pymethods]
impl PyState {
    /// `State(matrix, dims=None)`; `dims` defaults to a single system.
    #[new]
    #[pyo3(signature = (matrix, dims=None))]
    fn new(matrix: Rows, dims: Option<Vec<usize>>) -> PyResult<Self> {
        let m = to_matrix(&matrix)?;
        let dims = dims.unwrap_or_else(|| vec![m.nrows()]);
        Ok(Self { inner: DensityOperator::from_matrix(m, dims).py()? })
    }

    #[staticmethod]
    fn maximally_mixed(d: usize) -> Self {
        Self { inner: DensityOperator::maximally_mixed(d) }
    }

    #[staticmethod]
    fn maximally_entangled(d: usize) -> Self {
        Self { inner: DensityOperator::maximally_entangled(d) }
    }

    #[staticmethod]
    fn basis(d: usize, i: usize) -> Self {
        Self { inner: DensityOperator::basis(d, i) }
    }

    /// Haar-random pure state on the given subsystems.
    #[staticmethod]
    #[pyo3(signature = (dims, seed=42))]
    fn random_pure(dims: Vec<usize>, seed: u64) -> Self {
        Self { inner: dynent_core::random::random_pure_state(&dims, &mut dynent_core::random::stream_rng(seed, 0)) }
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    fn matrix(&self) -> Rows {
        from_matrix(self.inner.matrix())
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    /// Reduced state on the subsystems listed in `keep`.
    fn partial_trace(&self, keep: Vec<usize>) -> PyResult<Self> {
        let op = linalg::partial_trace(&self.inner, &keep).py()?;
        Ok(Self { inner: DensityOperator::new(op).py()? })
    }

    fn __repr__(&self) -> String {
        format!("State(dims={:?})", self.inner.dims())
    }
}

/// A quantum channel in Kraus form.
#[pyclass(name = "Channel", module = "dynent", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: QuantumChannel,
}

#[pymethods]
impl PyChannel {
    /// `Channel(kraus)` from a list of Kraus matrices.
    #[new]
    fn new(kraus: Vec<Rows>) -> PyResult<Self> {
        let ks = kraus.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: QuantumChannel::new(ks).py()? })
    }

    /// Named family: depolarizing, dephasing1, dephasing2, replacer, unitary
    /// or identity.
    #[staticmethod]
    #[pyo3(signature = (family, p=None))]
    fn named(family: &str, p: Option<f64>) -> PyResult<Self> {
        let family: ChannelFamily = family.parse().py()?;
        Ok(Self { inner: channels::make_named_channel(&ChannelSpec::named(family, p)).py()? })
    }

    /// Channel from a JSON description.
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: channels::make_named_channel(&ChannelSpec::from_json(spec).py()?).py()? })
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        Self { inner: QuantumChannel::identity(d) }
    }

    #[staticmethod]
    fn depolarizing(p: f64) -> PyResult<Self> {
        Ok(Self { inner: QuantumChannel::depolarizing(p).py()? })
    }

    /// Trace over the second factor of `d_keep ⊗ d_traced`.
    #[staticmethod]
    fn partial_trace(d_keep: usize, d_traced: usize) -> Self {
        Self { inner: QuantumChannel::partial_trace(d_keep, d_traced) }
    }

    /// Replacer channel with the maximally mixed output.
    #[staticmethod]
    fn completely_depolarizing(d: usize) -> Self {
        Self { inner: QuantumChannel::completely_depolarizing(d) }
    }

    #[staticmethod]
    #[pyo3(signature = (in_dim, out_dim, n_kraus, seed=42))]
    fn random(in_dim: usize, out_dim: usize, n_kraus: usize, seed: u64) -> Self {
        let mut rng = dynent_core::random::stream_rng(seed, 0);
        Self { inner: QuantumChannel::random(in_dim, out_dim, n_kraus, &mut rng) }
    }

    #[getter]
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }

    #[getter]
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }

    fn kraus(&self) -> Vec<Rows> {
        self.inner.kraus().iter().map(from_matrix).collect()
    }

    /// Normalized Choi state on `[R, A]`.
    fn choi(&self) -> PyState {
        PyState { inner: channels::choi_state(&self.inner) }
    }

    /// Applies the channel to subsystem `subsystem` of `rho`.
    #[pyo3(signature = (rho, subsystem=0))]
    fn apply(&self, rho: &PyState, subsystem: usize) -> PyResult<PyState> {
        Ok(PyState { inner: channels::apply(&self.inner, &rho.inner, subsystem).py()? })
    }

    fn compose_after(&self, first: &PyChannel) -> PyResult<PyChannel> {
        Ok(PyChannel { inner: channels::compose(&self.inner, &first.inner).py()? })
    }

    fn tensor(&self, other: &PyChannel) -> PyChannel {
        PyChannel { inner: channels::tensor_channels(&self.inner, &other.inner) }
    }

    fn is_ppt(&self) -> bool {
        channels::is_ppt(&self.inner)
    }

    /// Closed-form channel min-entropy in bits.
    fn min_entropy(&self) -> f64 {
        dynamical::channel_min_entropy(&self.inner)
    }

    /// Channel min-entropy from the semidefinite program.
    fn min_entropy_sdp(&self) -> PyResult<f64> {
        dynamical::channel_min_entropy_sdp(&self.inner).py()
    }

    /// Closed form, SDP value and sampled infimum over pure inputs.
    #[pyo3(signature = (n_samples=200, seed=42))]
    fn min_entropy_report<'py>(&self, py: Python<'py>, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| dynamical::channel_min_entropy_scan(&self.inner, n_samples, seed)).py()?;
        report(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(in_dim={}, out_dim={}, n_kraus={})",
            self.inner.in_dim(),
            self.inner.out_dim(),
            self.inner.kraus().len()
        )
    }
}

fn op(s: &PyState) -> &HermitianOperator {
    &s.inner
}

#[pyfunction]
fn fidelity(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    linalg::fidelity(op(rho), op(sigma)).py()
}

#[pyfunction]
fn trace_distance(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    linalg::trace_distance(op(rho), op(sigma)).py()
}

#[pyfunction]
fn d_max(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    entropies::d_max(op(rho), op(sigma)).py()
}

#[pyfunction]
fn relative_entropy(rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    entropies::relative_entropy(op(rho), op(sigma)).py()
}

#[pyfunction]
fn sandwiched_renyi(alpha: f64, rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    entropies::sandwiched_renyi(entropies::RenyiOrder::from_alpha(alpha).py()?, op(rho), op(sigma)).py()
}

#[pyfunction]
fn petz_renyi(alpha: f64, rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    entropies::petz_renyi(entropies::RenyiOrder::from_alpha(alpha).py()?, op(rho), op(sigma)).py()
}

#[pyfunction]
fn d_hypothesis(epsilon: f64, rho: &PyState, sigma: &PyState) -> PyResult<f64> {
    entropies::d_hypothesis(epsilon, op(rho), op(sigma)).py()
}

#[pyfunction]
fn cond_min_entropy_up(rho: &PyState) -> PyResult<f64> {
    entropies::cond_min_entropy_up(op(rho)).py()
}

#[pyfunction]
fn cond_min_entropy_down(rho: &PyState) -> PyResult<f64> {
    entropies::cond_min_entropy_down(op(rho)).py()
}

#[pyfunction]
fn cond_hypothesis_entropy(epsilon: f64, rho: &PyState) -> PyResult<f64> {
    entropies::cond_hypothesis_entropy(epsilon, op(rho)).py()
}

#[pyfunction]
fn cond_sandwiched_half_up(rho: &PyState) -> PyResult<f64> {
    entropies::cond_sandwiched_half_up(op(rho)).py()
}

/// `½‖N − M‖⋄`.
#[pyfunction]
fn diamond_distance(n: &PyChannel, m: &PyChannel) -> PyResult<f64> {
    channels::diamond_distance(&n.inner, &m.inner).py()
}

#[pyfunction]
#[pyo3(signature = (phi, t, n_samples=200, epsilon=0.0, seed=42))]
fn decouple_states<'py>(
    py: Python<'py>,
    phi: &PyState,
    t: &PyChannel,
    n_samples: usize,
    epsilon: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sampler = HaarSampler::new(t.inner.in_dim(), seed).py()?;
    let r = py.detach(|| decoupling::decouple_states_mc(&phi.inner, &t.inner, n_samples, epsilon, &sampler)).py()?;
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n, t, n_samples=200, epsilon=0.0, seed=42))]
fn decouple_channel<'py>(
    py: Python<'py>,
    n: &PyChannel,
    t: &PyChannel,
    n_samples: usize,
    epsilon: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sampler = HaarSampler::new(n.inner.out_dim(), seed).py()?;
    let r = py.detach(|| decoupling::decouple_channel_mc(&n.inner, &t.inner, n_samples, epsilon, &sampler)).py()?;
    report(py, &r)
}

/// Preparation and erasure costs of a channel.
#[pyfunction]
#[pyo3(signature = (n, mu=0.0, temperature=thermo::DEFAULT_TEMPERATURE, n_samples=500, seed=42))]
fn channel_costs<'py>(
    py: Python<'py>,
    n: &PyChannel,
    mu: f64,
    temperature: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| thermo::channel_costs(&n.inner, mu, temperature, n_samples, seed)).py()?;
    let v = serde_json::to_value(&r).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let d = json_to_py(py, &v)?;
    d.set_item("checks", report(py, &r.checks)?)?;
    Ok(d)
}

/// Work in joules for `bits` at `temperature` kelvin.
#[pyfunction]
#[pyo3(signature = (bits, temperature=thermo::DEFAULT_TEMPERATURE))]
fn work_joules(bits: f64, temperature: f64) -> PyResult<f64> {
    Ok(thermo::WorkCost::new(bits, temperature).py()?.joules)
}

/// Closed-form `S_min` on a `p` grid for the named families.
#[pyfunction]
#[pyo3(signature = (families=vec!["depolarizing".to_string(), "dephasing1".to_string(), "dephasing2".to_string()], p_steps=21))]
fn sweep<'py>(py: Python<'py>, families: Vec<String>, p_steps: usize) -> PyResult<Bound<'py, PyAny>> {
    let fams = families.iter().map(|f| f.parse::<ChannelFamily>()).collect::<dynent_core::Result<Vec<_>>>().py()?;
    report(py, &cli::sweep_rows(&fams, p_steps).py()?)
}

#[pymodule]
fn dynent(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(d_max, m)?)?;
    m.add_function(wrap_pyfunction!(relative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(sandwiched_renyi, m)?)?;
    m.add_function(wrap_pyfunction!(petz_renyi, m)?)?;
    m.add_function(wrap_pyfunction!(d_hypothesis, m)?)?;
    m.add_function(wrap_pyfunction!(cond_min_entropy_up, m)?)?;
    m.add_function(wrap_pyfunction!(cond_min_entropy_down, m)?)?;
    m.add_function(wrap_pyfunction!(cond_hypothesis_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(cond_sandwiched_half_up, m)?)?;
    m.add_function(wrap_pyfunction!(diamond_distance, m)?)?;
    m.add_function(wrap_pyfunction!(decouple_states, m)?)?;
    m.add_function(wrap_pyfunction!(decouple_channel, m)?)?;
    m.add_function(wrap_pyfunction!(channel_costs, m)?)?;
    m.add_function(wrap_pyfunction!(work_joules, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
