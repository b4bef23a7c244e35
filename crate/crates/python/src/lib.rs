//! Python bindings: catalog access, expressions, reduction and verification.
//!
//! Documents that the CLI prints as JSON come back as plain dicts.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fuchs_core::catalog::{self, parse_rational};
use fuchs_core::report::{reduce_document, SCHEMA};
use fuchs_core::verify::{full_report, prepare, Config, Pipeline};
use fuchs_core::{Binding, Var, C64};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// Builds a config from the keyword arguments shared by the entry points.
fn config(params: Option<BTreeMap<String, String>>, basepoint: Option<C64>, seed: u64) -> PyResult<Config> {
    let mut c = Config { seed, basepoint, ..Config::default() };
    for (k, v) in params.unwrap_or_default() {
        c.params.insert(k, parse_rational(&v).map_err(value_err)?);
    }
    Ok(c)
}

fn pipeline(id: &str, c: &Config) -> PyResult<Pipeline> {
    prepare(id, c).map_err(|e| match e {
        fuchs_core::verify::VerifyError::Catalog(e) => value_err(e),
        e => runtime_err(e),
    })
}

/// Ids of the shipped entries; `negative=True` adds the negative controls.
#[pyfunction]
#[pyo3(signature = (negative = false))]
fn list_entries(negative: bool) -> Vec<&'static str> {
    if negative {
        catalog::all_entries()
    } else {
        catalog::list_entries()
    }
}

#[pyfunction]
fn manifest<'py>(py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &catalog::manifest(id).map_err(value_err)?)
}

/// Decomposition, case and classical target of an entry.
///
/// `params` maps parameter names to exact rationals written as strings,
/// e.g. `{"theta_inf": "5/2"}`.
#[pyfunction]
#[pyo3(signature = (id, params = None, basepoint = None, seed = 42))]
fn reduce<'py>(
    py: Python<'py>,
    id: &str,
    params: Option<BTreeMap<String, String>>,
    basepoint: Option<C64>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config(params, basepoint, seed)?;
    let pl = pipeline(id, &c)?;
    let doc = py.detach(|| reduce_document(&pl, &c)).map_err(runtime_err)?;
    to_py(py, &doc)
}

/// Full verification report for an entry.
#[pyfunction]
#[pyo3(signature = (id, params = None, basepoint = None, seed = 42))]
fn verify<'py>(
    py: Python<'py>,
    id: &str,
    params: Option<BTreeMap<String, String>>,
    basepoint: Option<C64>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config(params, basepoint, seed)?;
    let id = id.to_string();
    let rep = py.detach(|| full_report(&id, &c)).map_err(value_err)?;
    to_py(py, &serde_json::to_value(&rep).map_err(runtime_err)?)
}

type Row = (C64, C64, C64, C64, C64);

/// `n` samples as `(tau, P, Q, x, t)` tuples of complex numbers.
#[pyfunction]
#[pyo3(signature = (id, n = 64, params = None, seed = 42))]
fn sample(
    py: Python<'_>,
    id: &str,
    n: usize,
    params: Option<BTreeMap<String, String>>,
    seed: u64,
) -> PyResult<Vec<Row>> {
    let c = config(params, None, seed)?;
    let pl = pipeline(id, &c)?;
    let rows = py.detach(|| pl.random_samples(n, seed)).map_err(runtime_err)?;
    Ok(rows.into_iter().map(|s| (s.tau, s.p, s.q, s.x, s.t)).collect())
}

/// A symbolic expression in `x`, `t` and named parameters.
#[pyclass(name = "Expr", frozen, module = "fuchs_reduce")]
#[derive(Clone)]
struct PyExpr(fuchs_core::Expr);

#[pymethods]
impl PyExpr {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        fuchs_core::Expr::parse(src).map(PyExpr).map_err(value_err)
    }

    #[pyo3(signature = (x, t = C64::new(0.0, 0.0), params = None))]
    fn eval(&self, x: C64, t: C64, params: Option<BTreeMap<String, C64>>) -> PyResult<C64> {
        let mut b = Binding::at(x, t);
        for (k, v) in params.unwrap_or_default() {
            b = b.with_param(&k, v);
        }
        self.0.eval(&b).map_err(value_err)
    }

    /// Derivative with respect to `"x"` or `"t"`.
    fn diff(&self, var: &str) -> PyResult<Self> {
        let v = match var {
            "x" => Var::X,
            "t" => Var::T,
            _ => return Err(PyValueError::new_err(format!("can only differentiate in x or t, not `{var}`"))),
        };
        Ok(PyExpr(self.0.diff(v)))
    }

    fn params(&self) -> Vec<String> {
        self.0.params().into_iter().collect()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.0.to_string())
    }
}

#[pymodule]
fn fuchs_reduce(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA", SCHEMA)?;
    m.add_function(wrap_pyfunction!(list_entries, m)?)?;
    m.add_function(wrap_pyfunction!(manifest, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_class::<PyExpr>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_are_parsed_exactly() {
        let p = BTreeMap::from([("theta_inf".to_string(), "5/2".to_string())]);
        let c = config(Some(p), None, 7).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.params["theta_inf"].to_string(), "5/2");
        let bad = BTreeMap::from([("theta_inf".to_string(), "2.5".to_string())]);
        assert!(config(Some(bad), None, 42).is_err());
    }

    #[test]
    fn module_functions() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "fuchs_reduce").unwrap();
            fuchs_reduce(&m).unwrap();
            let ids: Vec<String> = m.getattr("list_entries").unwrap().call0().unwrap().extract().unwrap();
            assert_eq!(ids.len(), 8);
            let doc = m.getattr("reduce").unwrap().call1(("PII.y0",)).unwrap();
            let f: String = doc.get_item("f").unwrap().extract().unwrap();
            assert_eq!(f, "2*x");
            let e = m.getattr("Expr").unwrap().call1(("x^2*t",)).unwrap();
            let d = e.call_method1("diff", ("x",)).unwrap();
            let v: C64 = d.call_method1("eval", (C64::new(3.0, 0.0), C64::new(2.0, 0.0))).unwrap().extract().unwrap();
            assert_eq!(v, C64::new(12.0, 0.0));
        });
    }
}
