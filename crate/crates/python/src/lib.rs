//! Python bindings for the verification engine.
//!
//! Reports come back as plain dicts/lists (the same shape the CLI writes as JSON).

use hsl_core::catalog::{build_entry, list_catalog as catalog_templates, CatalogEntry, Params};
use hsl_core::checks::{gauss_bonnet_flat, run_checks, ToleranceProfile};
use hsl_core::jets::{eval_jet, Rect};
use hsl_core::surface::point_geometry;
use hsl_core::variation::{first_variation, variation_report, BumpFunction, VariationSettings};
use hsl_core::HslError;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyDict};
use serde::Serialize;

create_exception!(
    hsl,
    ParameterError,
    PyValueError,
    "Rejected input: bad parameter, domain or unsupported request."
);
create_exception!(
    hsl,
    NumericalAbort,
    PyArithmeticError,
    "Lift, immersion or grid unusable for the computation."
);

fn py_err(e: HslError) -> PyErr {
    let msg = e.to_string();
    match e {
        HslError::Io(_) => PyOSError::new_err(msg),
        _ if e.exit_code() == 3 => NumericalAbort::new_err(msg),
        _ => ParameterError::new_err(msg),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn params_from(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Params> {
    match kwargs {
        Some(d) => d.extract(),
        None => Ok(Params::new()),
    }
}

fn rect(domain: Option<(f64, f64, f64, f64)>) -> Option<Rect> {
    domain.map(|(x0, x1, y0, y1)| Rect::new(x0, x1, y0, y1))
}

/// A catalog member with concrete parameters.
#[pyclass(frozen, name = "Entry", module = "hsl")]
struct PyEntry {
    inner: CatalogEntry,
}

#[pymethods]
impl PyEntry {
    #[new]
    #[pyo3(signature = (id, **params))]
    fn new(id: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let inner = build_entry(id, &params_from(params)?).map_err(py_err)?;
        Ok(PyEntry { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn ambient(&self) -> &'static str {
        self.inner.ambient.name()
    }

    /// Holomorphic sectional curvature over 4.
    #[getter]
    fn c(&self) -> f64 {
        self.inner.ambient.c()
    }

    #[getter]
    fn params(&self) -> Params {
        self.inner.params.clone()
    }

    /// (x0, x1, y0, y1)
    #[getter]
    fn domain(&self) -> (f64, f64, f64, f64) {
        let d = self.inner.default_domain();
        (d.x0, d.x1, d.y0, d.y1)
    }

    #[getter]
    fn periodic(&self) -> (bool, bool) {
        let [a, b] = self.inner.periodic();
        (a, b)
    }

    /// Lift coordinates at (x, y).
    fn lift<'py>(&self, py: Python<'py>, x: f64, y: f64) -> PyResult<Vec<Bound<'py, PyComplex>>> {
        let jets = eval_jet(&self.inner.immersion, x, y, 0).map_err(py_err)?;
        Ok(jets
            .iter()
            .map(|j| PyComplex::from_doubles(py, j.value().re, j.value().im))
            .collect())
    }

    /// Every pointwise quantity at (x, y) as a nested dict.
    fn point(&self, py: Python<'_>, x: f64, y: f64) -> PyResult<Py<PyAny>> {
        let p = point_geometry(&self.inner.immersion, x, y).map_err(py_err)?;
        to_py(py, &p)
    }

    #[pyo3(signature = (nx = 41, ny = 41, profile = "default", domain = None))]
    fn verify(
        &self,
        py: Python<'_>,
        nx: usize,
        ny: usize,
        profile: &str,
        domain: Option<(f64, f64, f64, f64)>,
    ) -> PyResult<Py<PyAny>> {
        let profile: ToleranceProfile = profile.parse().map_err(py_err)?;
        let report = py
            .detach(|| run_checks(&self.inner, nx, ny, rect(domain), &profile))
            .map_err(py_err)?;
        to_py(py, &report)
    }

    /// Total curvature over one period cell; only for doubly periodic entries.
    #[pyo3(signature = (n = 64))]
    fn gauss_bonnet(&self, py: Python<'_>, n: usize) -> PyResult<f64> {
        py.detach(|| gauss_bonnet_flat(&self.inner, n)).map_err(py_err)
    }

    /// d/dt Area(F_t) at t = 0 for the Hamiltonian flow of one bump (C² only).
    #[pyo3(signature = (center, radius, amplitude = 1.0, h = 1e-3))]
    fn first_variation(
        &self,
        py: Python<'_>,
        center: (f64, f64),
        radius: f64,
        amplitude: f64,
        h: f64,
    ) -> PyResult<f64> {
        let bump = BumpFunction::new([center.0, center.1], radius, amplitude).map_err(py_err)?;
        py.detach(|| first_variation(&self.inner.immersion, &bump, h))
            .map_err(py_err)
    }

    /// First variations for `bumps` seeded bump functions (C² only).
    #[pyo3(signature = (bumps = 5, seed = 42))]
    fn variation(&self, py: Python<'_>, bumps: usize, seed: u64) -> PyResult<Py<PyAny>> {
        let report = py
            .detach(|| {
                variation_report(
                    &self.inner.id,
                    &self.inner.immersion,
                    bumps,
                    seed,
                    VariationSettings::default(),
                )
            })
            .map_err(py_err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        let params: Vec<String> = self
            .inner
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("Entry({:?}, {})", self.inner.id, params.join(", "))
    }
}

#[derive(Serialize)]
struct TemplateInfo {
    id: &'static str,
    ambient: &'static str,
    params: Params,
    clauses: Vec<&'static str>,
}

/// Catalog families with default parameters and constraint clauses.
#[pyfunction]
fn list_catalog(py: Python<'_>) -> PyResult<Py<PyAny>> {
    let info: Vec<TemplateInfo> = catalog_templates()
        .iter()
        .map(|t| TemplateInfo {
            id: t.id,
            ambient: t.ambient.name(),
            params: t.params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            clauses: t.clauses.iter().map(|c| c.0).collect(),
        })
        .collect();
    to_py(py, &info)
}

/// Shortcut for `Entry(id, **params).verify(...)`.
#[pyfunction]
#[pyo3(signature = (id, params = None, nx = 41, ny = 41, profile = "default"))]
fn verify(
    py: Python<'_>,
    id: &str,
    params: Option<&Bound<'_, PyDict>>,
    nx: usize,
    ny: usize,
    profile: &str,
) -> PyResult<Py<PyAny>> {
    PyEntry::new(id, params)?.verify(py, nx, ny, profile, None)
}

#[pymodule]
fn hsl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEntry>()?;
    m.add_function(wrap_pyfunction!(list_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("ParameterError", m.py().get_type::<ParameterError>())?;
    m.add("NumericalAbort", m.py().get_type::<NumericalAbort>())?;
    Ok(())
}
