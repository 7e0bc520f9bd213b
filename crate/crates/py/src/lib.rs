//! Python bindings. Structured results come back as plain dicts.

use gjsoq::approx::{applicable, ratio_curve as core_ratio_curve, Approximation, AsymmetricApprox};
use gjsoq::oracle::{solve_stationary, TruncatedSolution};
use gjsoq::sim::simulate as core_simulate;
use gjsoq::stability::check_stability;
use gjsoq::tail::{decay_profile as core_decay_profile, tail_evaluate};
use gjsoq::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(gjsoq_py, HypothesisError, PyValueError, "Parameters violate a hypothesis of the requested result.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::InvalidParam { .. } | Error::Input(_) => PyValueError::new_err(msg),
        Error::NoConvergence { .. } | Error::Singular(_) => PyRuntimeError::new_err(msg),
        _ => HypothesisError::new_err(msg),
    }
}

fn to_dict<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

/// The six rates of the system.
#[pyclass(name = "SystemParams", frozen)]
#[derive(Clone)]
struct PySystemParams {
    inner: gjsoq::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (lambda0, lambda1, lambda2, mu, alpha1, alpha2))]
    fn new(lambda0: f64, lambda1: f64, lambda2: f64, mu: f64, alpha1: f64, alpha2: f64) -> PyResult<Self> {
        let inner = gjsoq::SystemParams::new(lambda0, lambda1, lambda2, mu, alpha1, alpha2).map_err(to_py)?;
        Ok(PySystemParams { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = gjsoq::SystemParams::from_json(text).map_err(to_py)?;
        Ok(PySystemParams { inner })
    }

    #[getter]
    fn lambda0(&self) -> f64 {
        self.inner.lambda0
    }
    #[getter]
    fn lambda1(&self) -> f64 {
        self.inner.lambda1
    }
    #[getter]
    fn lambda2(&self) -> f64 {
        self.inner.lambda2
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn alpha1(&self) -> f64 {
        self.inner.alpha1
    }
    #[getter]
    fn alpha2(&self) -> f64 {
        self.inner.alpha2
    }

    /// Hatted rates, loads and the pooling flags.
    fn derived(&self, py: Python<'_>) -> PyResult<PyObject> {
        let d = self.inner.derived();
        let dict = to_dict(py, &d)?;
        let b = dict.bind(py);
        b.set_item("pooling_margin", d.pooling_margin())?;
        b.set_item("strongly_pooled", d.strongly_pooled())?;
        b.set_item("strongly_balanced", d.strongly_balanced())?;
        Ok(dict)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_dict(py, &self.inner)
    }

    fn mirrored(&self) -> Self {
        PySystemParams {
            inner: self.inner.mirrored(),
        }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(lambda0={}, lambda1={}, lambda2={}, mu={}, alpha1={}, alpha2={})",
            p.lambda0, p.lambda1, p.lambda2, p.mu, p.alpha1, p.alpha2
        )
    }
}

/// Truncated exact stationary distribution.
#[pyclass(name = "StationarySolution", frozen)]
struct PySolution {
    inner: TruncatedSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }
    #[getter]
    fn residual_norm(&self) -> f64 {
        self.inner.residual_norm
    }
    #[getter]
    fn mass_at_boundary(&self) -> f64 {
        self.inner.mass_at_boundary
    }
    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    /// `P(n1 = i, n2 = j, server = k)`.
    fn prob(&self, i: usize, j: usize, k: usize) -> PyResult<f64> {
        if i > self.inner.n_max || j > self.inner.n_max || k > 1 {
            return Err(PyValueError::new_err("state outside the truncated grid"));
        }
        Ok(self.inner.p(i, j, k))
    }

    fn busy_fraction(&self) -> f64 {
        self.inner.busy_fraction()
    }

    fn mean_min(&self) -> f64 {
        self.inner.mean_min()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

#[pyfunction]
fn stability(py: Python<'_>, p: &PySystemParams) -> PyResult<PyObject> {
    to_dict(py, &check_stability(&p.inner))
}

#[pyfunction]
fn decay_profile(py: Python<'_>, p: &PySystemParams) -> PyResult<PyObject> {
    to_dict(py, &core_decay_profile(&p.inner).map_err(to_py)?)
}

/// `pi_{m,l}(server)` from the exact tail asymptotics, unit constant.
#[pyfunction]
fn tail_value(p: &PySystemParams, m: u32, l: i64, server: u8) -> PyResult<f64> {
    let profile = core_decay_profile(&p.inner).map_err(to_py)?;
    Ok(tail_evaluate(&profile, m, l, server))
}

/// Closed-form approximation `c p_{i,j}(server)`; the symmetric evaluator
/// is used on symmetric input unless `general` is set.
#[pyfunction]
#[pyo3(signature = (p, i, j, server, general = false))]
fn approx_value(p: &PySystemParams, i: u32, j: u32, server: u8, general: bool) -> PyResult<f64> {
    if general {
        return Ok(AsymmetricApprox::new(&p.inner).map_err(to_py)?.value(i, j, server));
    }
    Ok(applicable(&p.inner).map_err(to_py)?.value(i, j, server))
}

/// `[(k, Pr(k+1)/Pr(k))]` for `k <= k_max`.
#[pyfunction]
fn ratio_curve(p: &PySystemParams, k_max: u32) -> PyResult<Vec<(u32, f64)>> {
    core_ratio_curve(&p.inner, k_max).map_err(to_py)
}

#[pyfunction]
fn reference_decay_rate(p: &PySystemParams) -> PyResult<f64> {
    gjsoq::reference::reference_decay_rate(&p.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, n_max = 60))]
fn solve(p: &PySystemParams, n_max: usize) -> PyResult<PySolution> {
    let inner = solve_stationary(&p.inner, n_max).map_err(to_py)?;
    Ok(PySolution { inner })
}

/// Runs the simulator and returns its summary statistics.
#[pyfunction]
#[pyo3(signature = (p, horizon, seed = 1))]
fn simulate(py: Python<'_>, p: &PySystemParams, horizon: f64, seed: u64) -> PyResult<PyObject> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PyValueError::new_err("horizon must be positive and finite"));
    }
    let tr = py.allow_threads(|| core_simulate(&p.inner, horizon, seed, 0.0));
    let dict = to_dict(py, &tr.summary)?;
    let b = dict.bind(py);
    b.set_item("rng", tr.rng)?;
    b.set_item("growth_ratio", tr.summary.growth_ratio())?;
    Ok(dict)
}

#[pymodule]
fn gjsoq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HypothesisError", m.py().get_type_bound::<HypothesisError>())?;
    m.add_class::<PySystemParams>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(decay_profile, m)?)?;
    m.add_function(wrap_pyfunction!(tail_value, m)?)?;
    m.add_function(wrap_pyfunction!(approx_value, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_curve, m)?)?;
    m.add_function(wrap_pyfunction!(reference_decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
