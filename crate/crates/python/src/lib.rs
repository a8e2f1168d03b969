//! Python bindings: datasets, the l1-ball oracle, schedules, compressors,
//! recursion constants and the benchmark driver.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use condgrad::compression::{top_k as top_k_core, UnbiasedCompressor};
use condgrad::config::MethodParams;
use condgrad::constants::{constants_for, ConstantsParams, Method};
use condgrad::driver::{fw_gap as fw_gap_core, reference_optimum, run as run_core, RunSpec};
use condgrad::objective::Dataset;
use condgrad::rng::{RngStream, StreamKind};
use condgrad::schedule::{schedule_convex, schedule_nonconvex, ScheduleMode};
use condgrad::sets::{FeasibleSet, L1Ball};
use condgrad::synthetic;
use condgrad::vector::Vector;

fn to_py_err(e: condgrad::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector_from(x: Vec<f64>, dim: usize, what: &str) -> PyResult<Vector> {
    if x.len() != dim {
        return Err(PyValueError::new_err(format!(
            "{what}: expected length {dim}, got {}",
            x.len()
        )));
    }
    Ok(Vector::from_vec(x))
}

/// Sparse logistic-regression dataset with +-1 labels.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// Parse a LibSVM text file.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        let inner =
            condgrad::parse_libsvm(std::io::BufReader::new(file)).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    /// Parse LibSVM records from a string.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = condgrad::parse_libsvm(text.as_bytes()).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    /// Deterministic 112-feature one-hot synthetic corpus.
    #[staticmethod]
    fn mushrooms_like(rows: usize) -> Self {
        PyDataset {
            inner: synthetic::mushrooms_like(rows),
        }
    }

    /// Deterministic 300-feature sparse binary synthetic corpus.
    #[staticmethod]
    fn w1a_like(rows: usize) -> Self {
        PyDataset {
            inner: synthetic::w1a_like(rows),
        }
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Objective value f(x).
    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        let x = vector_from(x, self.inner.dim(), "x")?;
        Ok(self.inner.value(&x))
    }

    /// Exact gradient of f at x.
    fn full_gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = vector_from(x, self.inner.dim(), "x")?;
        Ok(self.inner.full_gradient(&x).into_vec())
    }

    /// Single coordinate of the gradient, computed without the full vector.
    fn partial_derivative(&self, j: usize, x: Vec<f64>) -> PyResult<f64> {
        let x = vector_from(x, self.inner.dim(), "x")?;
        self.inner.partial_derivative(j, &x).map_err(to_py_err)
    }

    /// (L, L_tilde, L_max) smoothness constants.
    fn smoothness(&self) -> (f64, f64, f64) {
        let m = self.inner.smoothness();
        (m.l, m.l_tilde, m.l_max)
    }

    fn to_libsvm(&self) -> PyResult<String> {
        let mut out = Vec::new();
        self.inner
            .write_libsvm(&mut out)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(String::from_utf8(out).expect("ascii"))
    }
}

/// The l1-ball feasible set with its closed-form linear minimization oracle.
#[pyclass(name = "L1Ball", frozen)]
struct PyL1Ball {
    inner: L1Ball,
}

#[pymethods]
impl PyL1Ball {
    #[new]
    fn new(radius: f64, dim: usize) -> PyResult<Self> {
        Ok(PyL1Ball {
            inner: L1Ball::new(radius, dim).map_err(to_py_err)?,
        })
    }

    /// argmin over the ball of <g, s>.
    fn lmo(&self, g: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = vector_from(g, self.inner.dim(), "g")?;
        Ok(self.inner.lmo(&g).map_err(to_py_err)?.into_vec())
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    #[pyo3(signature = (x, tol = 1e-9))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        let x = vector_from(x, self.inner.dim(), "x")?;
        Ok(self.inner.contains(&x, tol))
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }
}

/// Per-iteration record columns of one run.
#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    #[pyo3(get)]
    iters: Vec<usize>,
    #[pyo3(get)]
    f_values: Vec<f64>,
    #[pyo3(get)]
    fw_gaps: Vec<f64>,
    #[pyo3(get)]
    grad_calls: Vec<u64>,
    #[pyo3(get)]
    coord_calls: Vec<u64>,
    #[pyo3(get)]
    bits_sent: Vec<u64>,
}

#[pymethods]
impl PyTrace {
    fn final_f(&self) -> f64 {
        *self.f_values.last().expect("nonempty")
    }

    fn min_gap(&self) -> f64 {
        self.fw_gaps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn __len__(&self) -> usize {
        self.iters.len()
    }
}

/// Execute a conditional-gradient run and return its trace.
#[pyfunction]
#[pyo3(signature = (dataset, method, l1_radius, iterations, seed = 0,
    schedule = "convex", eta = None, p = None, b = None, tau = None,
    alpha = None, n_workers = None, compressor = None, compressor_k = None,
    log_every = None))]
#[allow(clippy::too_many_arguments)]
fn run(
    dataset: &PyDataset,
    method: &str,
    l1_radius: f64,
    iterations: usize,
    seed: u64,
    schedule: &str,
    eta: Option<f64>,
    p: Option<f64>,
    b: Option<usize>,
    tau: Option<f64>,
    alpha: Option<f64>,
    n_workers: Option<usize>,
    compressor: Option<&str>,
    compressor_k: Option<usize>,
    log_every: Option<usize>,
) -> PyResult<PyTrace> {
    let data = &dataset.inner;
    let method = Method::parse(method).map_err(to_py_err)?;
    let params = MethodParams {
        p,
        b,
        tau,
        alpha,
        n_workers,
        compressor_kind: compressor.map(str::to_owned),
        compressor_k,
        table_read: None,
        anchor_mean: None,
    };
    let method_spec = params
        .resolve(method, data.n_samples(), data.dim())
        .map_err(to_py_err)?;
    let schedule = ScheduleMode::parse(schedule, eta).map_err(to_py_err)?;
    let ball = L1Ball::new(l1_radius, data.dim()).map_err(to_py_err)?;
    let mut spec = RunSpec::new(method_spec, schedule, iterations, seed);
    if let Some(every) = log_every {
        if every == 0 {
            return Err(PyValueError::new_err("log_every must be >= 1"));
        }
        spec.log_every = every;
    }
    let trace = run_core(data, &ball, &spec).map_err(to_py_err)?;
    Ok(PyTrace {
        iters: trace.records.iter().map(|r| r.k).collect(),
        f_values: trace.records.iter().map(|r| r.f_value).collect(),
        fw_gaps: trace.records.iter().map(|r| r.fw_gap).collect(),
        grad_calls: trace.records.iter().map(|r| r.grad_calls).collect(),
        coord_calls: trace.records.iter().map(|r| r.coord_calls).collect(),
        bits_sent: trace.records.iter().map(|r| r.bits_sent).collect(),
    })
}

/// Frank-Wolfe gap of x on the given dataset and ball.
#[pyfunction]
fn fw_gap(dataset: &PyDataset, ball: &PyL1Ball, x: Vec<f64>) -> PyResult<f64> {
    let x = vector_from(x, dataset.inner.dim(), "x")?;
    Ok(fw_gap_core(&x, &dataset.inner, &ball.inner))
}

/// Best objective value of a long exact-gradient run, for use as f*.
#[pyfunction]
fn reference_f_star(dataset: &PyDataset, l1_radius: f64, iterations: usize) -> PyResult<f64> {
    let ball = L1Ball::new(l1_radius, dataset.inner.dim()).map_err(to_py_err)?;
    reference_optimum(&dataset.inner, &ball, iterations).map_err(to_py_err)
}

/// Theorem-backed step size of iteration k for a K-iteration convex run.
#[pyfunction(name = "schedule_convex")]
fn py_schedule_convex(k: usize, big_k: usize, rho1: f64, rho2: f64) -> f64 {
    schedule_convex(k, big_k, rho1, rho2)
}

/// Constant step size 1/sqrt(K) of the non-convex guarantee.
#[pyfunction(name = "schedule_nonconvex")]
fn py_schedule_nonconvex(big_k: usize) -> f64 {
    schedule_nonconvex(big_k)
}

/// Variance-recursion constants (rho1, rho2, A, B, C, E) of a method
/// instance, plus the schedule constant d.
#[pyfunction]
#[pyo3(signature = (method, n_samples, dim, p = None, b = None, omega = None,
    delta = None, n_workers = None, tau = None, l = 1.0, l_tilde = 1.0))]
#[allow(clippy::too_many_arguments)]
fn method_constants<'py>(
    py: Python<'py>,
    method: &str,
    n_samples: usize,
    dim: usize,
    p: Option<f64>,
    b: Option<usize>,
    omega: Option<f64>,
    delta: Option<f64>,
    n_workers: Option<usize>,
    tau: Option<f64>,
    l: f64,
    l_tilde: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let method = Method::parse(method).map_err(to_py_err)?;
    let mut params = ConstantsParams::new(n_samples, dim).with_smoothness(l, l_tilde);
    params.p = p;
    params.b = b;
    params.omega = omega;
    params.delta = delta;
    params.n_workers = n_workers;
    params.tau = tau;
    let c = constants_for(method, &params).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("rho1", c.rho1)?;
    out.set_item("rho2", c.rho2)?;
    out.set_item("A", c.a)?;
    out.set_item("B", c.b)?;
    out.set_item("C", c.c)?;
    out.set_item("E", c.e)?;
    out.set_item("d", c.schedule_d())?;
    Ok(out)
}

/// Unbiased random sparsification: keep k coordinates scaled by dim/k.
#[pyfunction]
fn rand_k(x: Vec<f64>, k: usize, seed: u64) -> PyResult<Vec<f64>> {
    let v = Vector::from_vec(x);
    let q = UnbiasedCompressor::RandK { k };
    q.validate(v.dim()).map_err(to_py_err)?;
    let mut rng = RngStream::new(seed, 0, 0, StreamKind::Compressor);
    Ok(q.compress(&v, &mut rng).vector.into_vec())
}

/// Greedy sparsification: keep the k largest-magnitude coordinates.
#[pyfunction]
fn top_k(x: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
    let v = Vector::from_vec(x);
    if k == 0 || k > v.dim() {
        return Err(PyValueError::new_err(format!(
            "k must be in 1..={}, got {k}",
            v.dim()
        )));
    }
    Ok(top_k_core(&v, k).vector.into_vec())
}

#[pymodule]
fn condgrad_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyL1Ball>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(fw_gap, m)?)?;
    m.add_function(wrap_pyfunction!(reference_f_star, m)?)?;
    m.add_function(wrap_pyfunction!(py_schedule_convex, m)?)?;
    m.add_function(wrap_pyfunction!(py_schedule_nonconvex, m)?)?;
    m.add_function(wrap_pyfunction!(method_constants, m)?)?;
    m.add_function(wrap_pyfunction!(rand_k, m)?)?;
    m.add_function(wrap_pyfunction!(top_k, m)?)?;
    Ok(())
}
