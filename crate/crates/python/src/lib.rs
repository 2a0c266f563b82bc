//! Python bindings: phasor vectors, encoders, codebooks, the resonator solver
//! and the experiment drivers. Experiment results are returned as JSON text.

use std::path::PathBuf;

use hdcore::codebook::Codebook;
use hdcore::experiments::{self, SweepConfig};
use hdcore::fpe::{self, FpeEncoder};
use hdcore::hrr::{self, PhasorVector};
use hdcore::io::{self, Envelope};
use hdcore::primes::{self, CompositeSample};
use hdcore::resonator::{self, ConvergenceSim, FactorizationResult, ResonatorConfig, UpdateMode};
use hdcore::rng::Rng;
use hdcore::Error;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for hdcore::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn json_text<T: serde::Serialize>(kind: &str, data: &T) -> PyResult<String> {
    let bytes = io::to_json_bytes(&Envelope::new(kind, data)).py()?;
    Ok(String::from_utf8(bytes).expect("JSON output is UTF-8"))
}

#[pyclass(name = "PhasorVector", module = "hdfactor", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPhasor(PhasorVector);

#[pymethods]
impl PyPhasor {
    #[new]
    fn new(phases: Vec<f64>) -> PyResult<Self> {
        PhasorVector::from_phases(phases).py().map(PyPhasor)
    }

    #[staticmethod]
    fn ones(n: usize) -> PyResult<Self> {
        PhasorVector::ones(n).py().map(PyPhasor)
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, stream = 0))]
    fn random(n: usize, seed: u64, stream: u64) -> PyResult<Self> {
        hrr::random_phasor(n, &mut Rng::with_stream(seed, stream)).py().map(PyPhasor)
    }

    #[getter]
    fn phases(&self) -> Vec<f64> {
        self.0.phases().to_vec()
    }

    fn bind(&self, other: &PyPhasor) -> PyResult<Self> {
        self.0.bind(&other.0).py().map(PyPhasor)
    }

    fn unbind(&self, other: &PyPhasor) -> PyResult<Self> {
        self.0.unbind(&other.0).py().map(PyPhasor)
    }

    fn inverse(&self) -> Self {
        PyPhasor(self.0.inverse())
    }

    fn similarity(&self, other: &PyPhasor) -> PyResult<f64> {
        hrr::similarity(&self.0, &other.0).py()
    }

    fn __len__(&self) -> usize {
        self.0.phases().len()
    }

    fn __repr__(&self) -> String {
        format!("PhasorVector(n={})", self.0.phases().len())
    }
}

#[pyclass(name = "FpeEncoder", module = "hdfactor", frozen)]
struct PyEncoder(FpeEncoder);

#[pymethods]
impl PyEncoder {
    #[new]
    fn new(base: &PyPhasor, beta: f64) -> PyResult<Self> {
        FpeEncoder::new(base.0.clone(), beta).py().map(PyEncoder)
    }

    #[staticmethod]
    #[pyo3(signature = (n, beta, seed, stream = 0))]
    fn random(n: usize, beta: f64, seed: u64, stream: u64) -> PyResult<Self> {
        FpeEncoder::random(n, beta, &mut Rng::with_stream(seed, stream)).py().map(PyEncoder)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn base(&self) -> PyPhasor {
        PyPhasor(self.0.base().clone())
    }

    fn encode(&self, x: f64) -> PyResult<PyPhasor> {
        self.0.encode(x).py().map(PyPhasor)
    }

    fn encode_log(&self, m: u128) -> PyResult<PyPhasor> {
        self.0.encode_log(m).py().map(PyPhasor)
    }
}

#[pyclass(name = "Codebook", module = "hdfactor", frozen)]
struct PyCodebook(Codebook);

#[pymethods]
impl PyCodebook {
    /// Encodes `primes` with a random base vector drawn from `(seed, stream)`.
    #[new]
    #[pyo3(signature = (primes, n, seed = 1, stream = 0, beta_scale = fpe::DEFAULT_BETA_SCALE, identity = false))]
    fn new(
        primes: Vec<u64>,
        n: usize,
        seed: u64,
        stream: u64,
        beta_scale: f64,
        identity: bool,
    ) -> PyResult<Self> {
        Codebook::build(&primes, n, &mut Rng::with_stream(seed, stream), beta_scale, identity)
            .py()
            .map(PyCodebook)
    }

    #[staticmethod]
    #[pyo3(signature = (encoder, primes, identity = false))]
    fn from_encoder(encoder: &PyEncoder, primes: Vec<u64>, identity: bool) -> PyResult<Self> {
        Codebook::from_encoder(encoder.0.clone(), &primes, identity).py().map(PyCodebook)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Codebook::load(&path).py().map(PyCodebook)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).py()
    }

    #[getter]
    fn labels(&self) -> Vec<u64> {
        self.0.labels().to_vec()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn row(&self, i: usize) -> PyResult<PyPhasor> {
        if i >= self.0.len() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(PyPhasor(self.0.row(i)))
    }

    /// `(index, similarity)` of the best-matching row.
    fn cleanup(&self, v: &PyPhasor) -> PyResult<(usize, f64)> {
        self.0.cleanup(&v.0).py()
    }

    fn coefficients(&self, v: &PyPhasor) -> PyResult<Vec<f64>> {
        self.0.coefficients(&v.0).py()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "FactorizationResult", module = "hdfactor", frozen)]
struct PyFactorization(FactorizationResult);

#[pymethods]
impl PyFactorization {
    #[getter]
    fn s(&self) -> u128 {
        self.0.s
    }
    #[getter]
    fn predicted_factors(&self) -> Vec<u64> {
        self.0.predicted_factors.clone()
    }
    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }
    #[getter]
    fn correct(&self) -> bool {
        self.0.correct
    }
    #[getter]
    fn iterations_used(&self) -> usize {
        self.0.iterations_used
    }
    #[getter]
    fn final_similarities(&self) -> Vec<f64> {
        self.0.final_similarities.clone()
    }
    #[getter]
    fn error(&self) -> Option<String> {
        self.0.error.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        json_text("result", &self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "FactorizationResult(s={}, predicted={:?}, correct={}, iterations={})",
            self.0.s, self.0.predicted_factors, self.0.correct, self.0.iterations_used
        )
    }
}

fn parse_convergence(v: &Bound<'_, PyAny>) -> PyResult<ConvergenceSim> {
    if let Ok(x) = v.extract::<f64>() {
        return Ok(ConvergenceSim::Fixed(x));
    }
    let s: String = v.extract()?;
    s.parse().py()
}

fn resonator_config(
    k: usize,
    max_iters: usize,
    convergence_window: usize,
    convergence_sim: &Bound<'_, PyAny>,
    update_mode: &str,
    trace: bool,
) -> PyResult<ResonatorConfig> {
    let cfg = ResonatorConfig {
        max_iters,
        convergence_window,
        convergence_sim: parse_convergence(convergence_sim)?,
        update_mode: update_mode.parse::<UpdateMode>().py()?,
        k,
        record_trace: trace,
    };
    cfg.validate().py()?;
    Ok(cfg)
}

#[pyfunction]
#[pyo3(signature = (s, codebook, k = 2, max_iters = 100, convergence_window = 3, convergence_sim = None, update_mode = "asynchronous", trace = false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    s: u128,
    codebook: &PyCodebook,
    k: usize,
    max_iters: usize,
    convergence_window: usize,
    convergence_sim: Option<Bound<'_, PyAny>>,
    update_mode: &str,
    trace: bool,
) -> PyResult<PyFactorization> {
    let auto = "auto".into_pyobject(py)?.into_any();
    let cs = convergence_sim.unwrap_or(auto);
    let cfg = resonator_config(k, max_iters, convergence_window, &cs, update_mode, trace)?;
    let book = &codebook.0;
    py.detach(|| resonator::solve(s, book, &cfg)).py().map(PyFactorization)
}

/// Solves products of the given factor lists; results carry their true factors.
#[pyfunction]
#[pyo3(signature = (factor_lists, codebook, max_iters = 100, convergence_window = 3, convergence_sim = None, update_mode = "asynchronous"))]
fn solve_batch(
    py: Python<'_>,
    factor_lists: Vec<Vec<u64>>,
    codebook: &PyCodebook,
    max_iters: usize,
    convergence_window: usize,
    convergence_sim: Option<Bound<'_, PyAny>>,
    update_mode: &str,
) -> PyResult<Vec<PyFactorization>> {
    let samples = factor_lists
        .into_iter()
        .map(CompositeSample::new)
        .collect::<hdcore::Result<Vec<_>>>()
        .py()?;
    let k = samples.first().map_or(2, CompositeSample::k);
    let auto = "auto".into_pyobject(py)?.into_any();
    let cs = convergence_sim.unwrap_or(auto);
    let cfg = resonator_config(k, max_iters, convergence_window, &cs, update_mode, false)?;
    let book = &codebook.0;
    let out = py.detach(|| resonator::solve_batch(&samples, book, &cfg)).py()?;
    Ok(out.into_iter().map(PyFactorization).collect())
}

#[pyfunction]
#[pyo3(signature = (primes, scale = fpe::DEFAULT_BETA_SCALE))]
fn select_beta(primes: Vec<u64>, scale: f64) -> PyResult<f64> {
    fpe::select_beta(&primes, scale).py()
}

#[pyfunction]
fn primes_up_to(limit: u64) -> PyResult<Vec<u64>> {
    primes::primes_up_to(limit).py().map(|p| p.primes().to_vec())
}

#[pyfunction]
fn candidate_set(s: u128) -> PyResult<Vec<u64>> {
    primes::candidate_set(s).py().map(|p| p.primes().to_vec())
}

#[pyfunction]
fn prime_window(start: u64, count: usize) -> PyResult<Vec<u64>> {
    primes::prime_window(start, count).py().map(|p| p.primes().to_vec())
}

/// Kernel profiles as a JSON document.
#[pyfunction]
#[pyo3(signature = (elements, betas, n = experiments::DEFAULT_KERNEL_DIM, runs = experiments::DEFAULT_KERNEL_RUNS, grid_points = experiments::DEFAULT_KERNEL_GRID, seed = experiments::DEFAULT_SEED))]
fn kernel_sweep(
    py: Python<'_>,
    elements: Vec<f64>,
    betas: Vec<f64>,
    n: usize,
    runs: usize,
    grid_points: usize,
    seed: u64,
) -> PyResult<String> {
    let profiles = py
        .detach(|| {
            let grid = experiments::default_kernel_grid(grid_points)?;
            experiments::kernel_sweep(&elements, &betas, n, runs, &grid, seed)
        })
        .py()?;
    json_text("kernel", &profiles)
}

fn sweep_config(toml_text: &str) -> PyResult<SweepConfig> {
    let cfg = SweepConfig::from_toml(toml_text).py()?;
    cfg.validate().py()?;
    Ok(cfg)
}

/// Accuracy sweep over a TOML config (empty string for defaults); JSON out.
#[pyfunction]
#[pyo3(signature = (config = ""))]
fn accuracy_sweep(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = sweep_config(config)?;
    let summary = py.detach(|| experiments::accuracy_sweep(&cfg)).py()?;
    json_text("sweep", &summary)
}

/// Minimal-dimension search over a TOML config; JSON out.
#[pyfunction]
#[pyo3(signature = (config = ""))]
fn min_dim_search(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = sweep_config(config)?;
    let summary = py.detach(|| experiments::min_dim_search(&cfg)).py()?;
    json_text("mindim", &summary)
}

#[pymodule]
#[pyo3(name = "hdfactor")]
fn hdfactor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPhasor>()?;
    m.add_class::<PyEncoder>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyFactorization>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_batch, m)?)?;
    m.add_function(wrap_pyfunction!(select_beta, m)?)?;
    m.add_function(wrap_pyfunction!(primes_up_to, m)?)?;
    m.add_function(wrap_pyfunction!(candidate_set, m)?)?;
    m.add_function(wrap_pyfunction!(prime_window, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(min_dim_search, m)?)?;
    Ok(())
}
