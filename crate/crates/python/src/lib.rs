//! Python bindings. Rationals cross the boundary as strings (`"p/q"`); any
//! object whose `str()` parses as a rational is accepted, so `int`, `str` and
//! `fractions.Fraction` all work. Reports come back as plain dicts.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qds::arith::{format_ratio, parse_ratio, Ratio};
use qds::harness::{self, CampaignOptions, GeneratorConfig, Instance, ParamsDoc};
use qds::model::{self, EdgeSet, Natural};
use qds::quality::OmegaMode;

fn err(e: qds::Error) -> PyErr {
    match e {
        qds::Error::InvalidParameter(_) | qds::Error::Parse(_) | qds::Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rational(x: &Bound<'_, PyAny>) -> PyResult<Ratio> {
    parse_ratio(&x.str()?.to_string()).map_err(err)
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn weights(d: &BTreeMap<Natural, Bound<'_, PyAny>>) -> PyResult<model::WeightFunction> {
    let pairs = d.iter().map(|(&n, v)| Ok((n, rational(v)?))).collect::<PyResult<Vec<_>>>()?;
    model::WeightFunction::from_pairs(pairs).map_err(err)
}

/// Parameters `ε, C, t, K, p₀` and evaluation settings.
#[pyclass(name = "Params", module = "qds_py", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: qds::quality::Params,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (epsilon, c, t, k, p0 = 100, precision_bits = 256, omega_mode = "squared"))]
    fn new(
        epsilon: &Bound<'_, PyAny>,
        c: &Bound<'_, PyAny>,
        t: &Bound<'_, PyAny>,
        k: &Bound<'_, PyAny>,
        p0: u64,
        precision_bits: u32,
        omega_mode: &str,
    ) -> PyResult<Self> {
        let mut inner =
            qds::quality::Params::new(rational(epsilon)?, rational(c)?, rational(t)?, rational(k)?, p0, precision_bits)
                .map_err(err)?;
        inner.omega_mode = omega_mode.parse::<OmegaMode>().map_err(err)?;
        Ok(PyParams { inner })
    }

    #[getter]
    fn q(&self) -> String {
        format_ratio(&self.inner.q())
    }

    #[getter]
    fn q_prime(&self) -> String {
        format_ratio(&self.inner.q_prime())
    }

    fn __repr__(&self) -> String {
        let d = ParamsDoc::from_params(&self.inner);
        format!("Params(epsilon={}, c={}, t={}, k={}, p0={})", d.epsilon, d.c, d.t, d.k, d.p0)
    }
}

/// Weights `ψ, θ`, multiplicative weights `f, g` and an edge set.
#[pyclass(name = "PairSystem", module = "qds_py", from_py_object)]
#[derive(Clone)]
struct PyPairSystem {
    inner: model::PairSystem,
}

#[pymethods]
impl PyPairSystem {
    /// Totient weights; `edges` defaults to empty.
    #[new]
    #[pyo3(signature = (psi, theta, edges = None))]
    fn new(
        psi: BTreeMap<Natural, Bound<'_, PyAny>>,
        theta: BTreeMap<Natural, Bound<'_, PyAny>>,
        edges: Option<Vec<(Natural, Natural)>>,
    ) -> PyResult<Self> {
        let sys = model::PairSystem::totient(weights(&psi)?, weights(&theta)?);
        let inner = sys.with_edges(edges.unwrap_or_default().into_iter().collect()).map_err(err)?;
        Ok(PyPairSystem { inner })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyPairSystem { inner: Instance::from_json_str(s).map_err(err)?.system })
    }

    fn to_json(&self) -> PyResult<String> {
        Instance { system: self.inner.clone(), params: None }.to_json_string().map_err(err)
    }

    #[getter]
    fn edges(&self) -> Vec<(Natural, Natural)> {
        self.inner.edges.iter().copied().collect()
    }

    #[getter]
    fn psi(&self) -> BTreeMap<Natural, String> {
        self.inner.psi.iter().map(|(n, v)| (n, format_ratio(v))).collect()
    }

    #[getter]
    fn theta(&self) -> BTreeMap<Natural, String> {
        self.inner.theta.iter().map(|(n, v)| (n, format_ratio(v))).collect()
    }

    fn with_edges(&self, edges: Vec<(Natural, Natural)>) -> PyResult<Self> {
        Ok(PyPairSystem { inner: self.inner.with_edges(edges.into_iter().collect()).map_err(err)? })
    }

    /// `μ_{ψ,θ}^{f,g}` of the given edges, or of the system's own edges.
    #[pyo3(signature = (edges = None))]
    fn mu_pairs(&self, edges: Option<Vec<(Natural, Natural)>>) -> PyResult<String> {
        let e: EdgeSet = edges.map_or_else(|| self.inner.edges.clone(), |v| v.into_iter().collect());
        Ok(format_ratio(&model::mu_pairs(&self.inner, &e).map_err(err)?))
    }

    fn __len__(&self) -> usize {
        self.inner.edges.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "PairSystem(|V|={}, |W|={}, |E|={})",
            self.inner.psi.len(),
            self.inner.theta.len(),
            self.inner.edges.len()
        )
    }
}

#[pyfunction]
fn d_value(v: Natural, w: Natural, system: &PyPairSystem) -> String {
    format_ratio(&qds::quality::d_value(v, w, &system.inner.psi, &system.inner.theta))
}

#[pyfunction]
#[pyo3(signature = (v, w, t, omega_mode = "squared"))]
fn omega_t(v: Natural, w: Natural, t: &Bound<'_, PyAny>, omega_mode: &str) -> PyResult<u32> {
    let mode = omega_mode.parse::<OmegaMode>().map_err(err)?;
    qds::quality::omega_t_with(v, w, &rational(t)?, mode).map_err(err)
}

/// `𝓔^{t,K}` as a sorted list of pairs.
#[pyfunction]
fn build_edge_set(system: &PyPairSystem, params: &PyParams) -> PyResult<Vec<(Natural, Natural)>> {
    let p = &params.inner;
    let s = &system.inner;
    let e = qds::quality::build_edge_set_with(&s.psi, &s.theta, &p.t, &p.k, p.omega_mode).map_err(err)?;
    Ok(e.into_iter().collect())
}

/// Main bound on the system's edges, or on `𝓔^{t,K}` when it has none.
#[pyfunction]
fn main_bound_check(py: Python<'_>, system: &PyPairSystem, params: &PyParams) -> PyResult<Py<PyAny>> {
    let e = if system.inner.edges.is_empty() {
        build_edge_set(system, params)?.into_iter().collect()
    } else {
        system.inner.edges.clone()
    };
    let sys = system.inner.with_edges(e.clone()).map_err(err)?;
    let r = qds::quality::main_bound_check(&sys, &params.inner, &e).map_err(err)?;
    to_py(py, &r.to_json())
}

#[pyfunction]
fn slice_identities(py: Python<'_>, system: &PyPairSystem, params: &PyParams, p: u64, i: u32, j: u32) -> PyResult<Py<PyAny>> {
    let s = qds::compress::slice(&system.inner, p, i, j).map_err(err)?;
    let pr = &params.inner;
    let rep = qds::compress::verify_slice_identities(&system.inner, &s, &pr.t, &pr.k, pr.omega_mode).map_err(err)?;
    to_py(py, &serde_json::to_value(&rep).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

/// `(N, E*)` from the diagonal centers.
#[pyfunction]
fn concentrate(system: &PyPairSystem) -> PyResult<(Natural, Vec<(Natural, Natural)>)> {
    let c = qds::diagonal::concentrate(&system.inner, &system.inner.edges).map_err(err)?;
    Ok((c.n, c.e_star.into_iter().collect()))
}

/// `(edges, number of removal steps, all step certificates hold)`.
#[pyfunction]
fn peel(system: &PyPairSystem, params: &PyParams) -> PyResult<(Vec<(Natural, Natural)>, usize, bool)> {
    let r = qds::diagonal::peel(&system.inner, &system.inner.edges, &params.inner).map_err(err)?;
    let ok = r.trace.iter().all(|s| s.certificate.verdict == qds::arith::Verdict::Holds);
    Ok((r.edges.into_iter().collect(), r.trace.len(), ok))
}

#[pyfunction]
fn resolution_check(py: Python<'_>, system: &PyPairSystem, n: Natural, params: &PyParams) -> PyResult<Py<PyAny>> {
    let r = qds::resolution::resolution_check(&system.inner, &system.inner.edges, n, &params.inner).map_err(err)?;
    let mut doc = r.to_json();
    doc["all_hold"] = serde_json::Value::Bool(r.all_hold());
    to_py(py, &doc)
}

#[pyfunction]
fn count_many_small_primes(x: &Bound<'_, PyAny>, t: &Bound<'_, PyAny>, k: &Bound<'_, PyAny>) -> PyResult<u64> {
    qds::anatomy::count_many_small_primes(&rational(x)?, &rational(t)?, &rational(k)?).map_err(err)
}

/// Divisor sum with `f = φ`.
#[pyfunction]
fn divisor_anatomy_sum(m: Natural, t: &Bound<'_, PyAny>, k: &Bound<'_, PyAny>) -> PyResult<String> {
    let f = model::MultiplicativeFunction::Totient;
    Ok(format_ratio(&qds::anatomy::divisor_anatomy_sum(m, &rational(t)?, &rational(k)?, &f).map_err(err)?))
}

/// Exact majorant for integer `K`; `None` when `K` is not an integer.
#[pyfunction]
fn divisor_anatomy_bound(m: Natural, t: &Bound<'_, PyAny>, k: &Bound<'_, PyAny>, gamma: &Bound<'_, PyAny>) -> PyResult<Option<String>> {
    let b = qds::anatomy::divisor_anatomy_bound(m, &rational(t)?, &rational(k)?, &rational(gamma)?).map_err(err)?;
    Ok(b.exact().map(format_ratio))
}

#[pyfunction]
fn mertens_product(t: &Bound<'_, PyAny>, gamma: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(format_ratio(&qds::anatomy::mertens_product(&rational(t)?, &rational(gamma)?).map_err(err)?))
}

/// Instance from the default generator config with the given seed and
/// support bound.
#[pyfunction]
#[pyo3(signature = (seed, support_max = 100, symmetric = false))]
fn generate_instance(seed: u64, support_max: usize, symmetric: bool) -> PyResult<(PyPairSystem, PyParams)> {
    let cfg = GeneratorConfig { seed, support_max, symmetric, ..Default::default() };
    let inst = harness::generate_instance(&cfg).map_err(err)?;
    let params = inst.params().map_err(err)?.clone();
    Ok((PyPairSystem { inner: inst.system }, PyParams { inner: params }))
}

/// Campaign over the default parameter grid; returns the summary document.
#[pyfunction]
#[pyo3(signature = (count, seed = 42, support_max = 100))]
fn certify_campaign(py: Python<'_>, count: u64, seed: u64, support_max: usize) -> PyResult<Py<PyAny>> {
    let cfg = GeneratorConfig { seed, support_max, ..Default::default() };
    let r = py
        .detach(|| harness::certify_campaign(&cfg, count, &CampaignOptions::standard()))
        .map_err(err)?;
    to_py(py, &serde_json::to_value(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

#[pymodule]
pub fn qds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyPairSystem>()?;
    m.add_function(wrap_pyfunction!(d_value, m)?)?;
    m.add_function(wrap_pyfunction!(omega_t, m)?)?;
    m.add_function(wrap_pyfunction!(build_edge_set, m)?)?;
    m.add_function(wrap_pyfunction!(main_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(slice_identities, m)?)?;
    m.add_function(wrap_pyfunction!(concentrate, m)?)?;
    m.add_function(wrap_pyfunction!(peel, m)?)?;
    m.add_function(wrap_pyfunction!(resolution_check, m)?)?;
    m.add_function(wrap_pyfunction!(count_many_small_primes, m)?)?;
    m.add_function(wrap_pyfunction!(divisor_anatomy_sum, m)?)?;
    m.add_function(wrap_pyfunction!(divisor_anatomy_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mertens_product, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(certify_campaign, m)?)?;
    Ok(())
}
