//! Python module `idslab`: coefficient specs, fields, stiffness matrices,
//! IDS estimators and the lab experiments. Reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

use idslab_core::discretize::assemble;
use idslab_core::ids::{self, MeanKind, ThetaGrid};
use idslab_core::lab::{self, ApproxSettings, DeviationSettings, SandwichParams, SandwichSettings};
use idslab_core::spectral;
use idslab_core::{BoundaryCondition, Disorder, IdsError};

fn err(e: IdsError) -> PyErr {
    match e {
        IdsError::Config(_) | IdsError::DimensionMismatch { .. } | IdsError::Range { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(value_to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value_to_py(py, &json)
}

fn parse_bc(bc: &str, theta: Option<Vec<f64>>) -> PyResult<BoundaryCondition> {
    match theta {
        Some(t) => Ok(BoundaryCondition::floquet(&t)),
        None => BoundaryCondition::parse(bc).map_err(err),
    }
}

fn theta_grid(nodes: usize, rule: &str) -> PyResult<ThetaGrid> {
    match rule {
        "midpoint" => Ok(ThetaGrid::midpoint(nodes)),
        "endpoint" => Ok(ThetaGrid::endpoint(nodes)),
        _ => Err(PyValueError::new_err(format!("rule must be midpoint or endpoint, got '{rule}'"))),
    }
}

/// Law of the random field: periodic background, bump and single-site disorder.
#[pyclass(name = "CoefficientSpec", module = "idslab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySpec {
    inner: idslab_core::CoefficientSpec,
}

#[pymethods]
impl PySpec {
    /// `disorder` is `bernoulli:p[:v0:v1]`, `uniform:a:b` or `constant:v`.
    #[new]
    #[pyo3(signature = (dimension, mesh, rho_plus, rho_bump, disorder = "constant:0"))]
    fn new(
        dimension: usize,
        mesh: usize,
        rho_plus: Vec<f64>,
        rho_bump: Vec<f64>,
        disorder: &str,
    ) -> PyResult<Self> {
        let law = Disorder::parse(disorder).map_err(err)?;
        let inner = idslab_core::CoefficientSpec::new(dimension, mesh, rho_plus, rho_bump, law)
            .map_err(err)?;
        Ok(PySpec { inner })
    }

    #[staticmethod]
    fn constant(dimension: usize, mesh: usize, c: f64) -> PyResult<Self> {
        let inner = idslab_core::CoefficientSpec::constant(dimension, mesh, c).map_err(err)?;
        Ok(PySpec { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = idslab_core::CoefficientSpec::from_toml_str(text).map_err(err)?;
        Ok(PySpec { inner })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension
    }

    #[getter]
    fn mesh(&self) -> usize {
        self.inner.mesh
    }

    #[getter]
    fn rho_lower(&self) -> f64 {
        self.inner.rho_lower
    }

    #[getter]
    fn rho_upper(&self) -> f64 {
        self.inner.rho_upper
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "CoefficientSpec(d={}, mesh={}, rho in [{}, {}])",
            self.inner.dimension, self.inner.mesh, self.inner.rho_lower, self.inner.rho_upper
        )
    }
}

/// Coefficient samples on a box of `2n+1` unit cells per axis.
#[pyclass(name = "Field", module = "idslab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyField {
    inner: idslab_core::FieldOnGrid,
}

#[pymethods]
impl PyField {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn mesh(&self) -> usize {
        self.inner.mesh
    }

    #[getter]
    fn periodic(&self) -> bool {
        self.inner.periodic
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn tile(&self, n: usize) -> PyResult<PyField> {
        Ok(PyField { inner: self.inner.tile(n).map_err(err)? })
    }

    fn scaled(&self, c: f64) -> PyResult<PyField> {
        Ok(PyField { inner: self.inner.scaled(c).map_err(err)? })
    }

    fn reciprocal(&self) -> PyResult<PyField> {
        Ok(PyField { inner: idslab_core::reciprocal_field(&self.inner).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Field(d={}, mesh={}, n={}, kind={}, periodic={})",
            self.inner.dimension,
            self.inner.mesh,
            self.inner.n,
            self.inner.kind.as_str(),
            self.inner.periodic
        )
    }
}

/// Finite-difference matrix of `-div(rho grad)`.
#[pyclass(name = "StiffnessMatrix", module = "idslab", frozen)]
pub struct PyMatrix {
    inner: idslab_core::StiffnessMatrix,
}

#[pymethods]
impl PyMatrix {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    #[getter]
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }

    /// Number of eigenvalues `<= energy`, by inertia.
    fn eigen_count(&self, energy: f64) -> PyResult<usize> {
        spectral::eigen_count(&self.inner, energy).map_err(err)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        spectral::dense_eigenvalues(&self.inner)
    }

    fn eigenvalues_in(&self, lo: f64, hi: f64) -> PyResult<Vec<f64>> {
        spectral::eigenvalues_in(&self.inner, lo, hi).map_err(err)
    }

    fn lowest_eigenvalues(&self, k: usize) -> PyResult<Vec<f64>> {
        spectral::lowest_eigenvalues(&self.inner, k).map_err(err)
    }

    /// `(rows, cols, real, imag)` of the stored entries.
    fn coo(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>) {
        let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, j, v) in self.inner.triplets() {
            out.0.push(i);
            out.1.push(j);
            out.2.push(v.re);
            out.3.push(v.im);
        }
        out
    }

    fn quadratic_form(&self, u: Vec<f64>) -> PyResult<f64> {
        idslab_core::quadratic_form(&self.inner, &u).map_err(err)
    }
}

/// Returns `(omega, field)` for sample `index` of the seed stream.
#[pyfunction]
#[pyo3(signature = (spec, n, seed = 0, index = 0))]
fn sample_field(spec: &PySpec, n: usize, seed: u64, index: u64) -> PyResult<(Vec<f64>, PyField)> {
    let (r, f) = idslab_core::sample_field(&spec.inner, n, seed, index).map_err(err)?;
    Ok((r.omega, PyField { inner: f }))
}

/// Periodic approximant built from sample `index`.
#[pyfunction]
#[pyo3(signature = (spec, n, seed = 0, index = 0))]
fn periodize(spec: &PySpec, n: usize, seed: u64, index: u64) -> PyResult<PyField> {
    let (r, _) = idslab_core::sample_field(&spec.inner, n, seed, index).map_err(err)?;
    Ok(PyField { inner: idslab_core::periodize(&r, &spec.inner).map_err(err)? })
}

#[pyfunction]
fn mean_field(spec: &PySpec) -> PyResult<PyField> {
    Ok(PyField { inner: idslab_core::mean_field(&spec.inner).map_err(err)? })
}

/// `bc` is dirichlet, neumann or periodic; passing `theta` selects Floquet.
#[pyfunction(name = "assemble")]
#[pyo3(signature = (field, bc = "dirichlet", theta = None))]
fn py_assemble(field: &PyField, bc: &str, theta: Option<Vec<f64>>) -> PyResult<PyMatrix> {
    let bc = parse_bc(bc, theta)?;
    Ok(PyMatrix { inner: assemble(&field.inner, &bc).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (spec, n, energies, bc = "dirichlet", samples = 1, seed = 0))]
fn finite_volume_ids<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n: usize,
    energies: Vec<f64>,
    bc: &str,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let bc = parse_bc(bc, None)?;
    let c = py
        .detach(|| ids::finite_volume_ids(&spec.inner, n, &bc, &energies, samples, seed))
        .map_err(err)?;
    to_py(py, &c)
}

#[pyfunction]
#[pyo3(signature = (field, energies, theta_nodes = 32, rule = "midpoint"))]
fn floquet_ids<'py>(
    py: Python<'py>,
    field: &PyField,
    energies: Vec<f64>,
    theta_nodes: usize,
    rule: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let theta = theta_grid(theta_nodes, rule)?;
    let c = py.detach(|| ids::floquet_ids(&field.inner, &energies, theta)).map_err(err)?;
    to_py(py, &c)
}

#[pyfunction]
#[pyo3(signature = (spec, n, energies, samples = 20, seed = 0, theta_nodes = 32))]
fn periodized_ids<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n: usize,
    energies: Vec<f64>,
    samples: usize,
    seed: u64,
    theta_nodes: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let theta = ThetaGrid::midpoint(theta_nodes);
    let c = py
        .detach(|| ids::periodized_ids(&spec.inner, n, &energies, samples, seed, theta))
        .map_err(err)?;
    to_py(py, &c)
}

/// `mean` is arithmetic or harmonic.
#[pyfunction]
#[pyo3(signature = (spec, energies, theta_nodes = 64, mean = "arithmetic"))]
fn homogenized_ids<'py>(
    py: Python<'py>,
    spec: &PySpec,
    energies: Vec<f64>,
    theta_nodes: usize,
    mean: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = match mean {
        "arithmetic" => MeanKind::Arithmetic,
        "harmonic" => MeanKind::Harmonic,
        _ => return Err(PyValueError::new_err(format!("unknown mean '{mean}'"))),
    };
    let theta = ThetaGrid::midpoint(theta_nodes);
    let c = py
        .detach(|| ids::homogenized_ids_with(&spec.inner, &energies, theta, kind))
        .map_err(err)?;
    to_py(py, &c)
}

#[pyfunction]
#[pyo3(signature = (spec, alpha, energies, n = 200, samples = 200, seed = 0, c = None, tau = 1.0))]
#[allow(clippy::too_many_arguments)]
fn sandwich_check<'py>(
    py: Python<'py>,
    spec: &PySpec,
    alpha: f64,
    energies: Vec<f64>,
    n: usize,
    samples: usize,
    seed: u64,
    c: Option<f64>,
    tau: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let params = SandwichParams { alpha, energies, c, tau };
    let settings = SandwichSettings { n, samples, seed, ..SandwichSettings::default() };
    let r = py.detach(|| lab::sandwich_check(&spec.inner, &params, &settings)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, energy, epsilon, n, samples = 200, seed = 0, coupling_exponent = 1.0))]
#[allow(clippy::too_many_arguments)]
fn approximation_check<'py>(
    py: Python<'py>,
    spec: &PySpec,
    energy: f64,
    epsilon: f64,
    n: usize,
    samples: usize,
    seed: u64,
    coupling_exponent: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let settings = ApproxSettings { coupling_exponent, seed, ..ApproxSettings::default() };
    let r = py
        .detach(|| lab::approximation_check(&spec.inner, energy, epsilon, n, samples, &settings))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, n, energy, alpha, trials = 10000, seed = 0, cutoff_mult = 1.0))]
#[allow(clippy::too_many_arguments)]
fn deviation_event_probability<'py>(
    py: Python<'py>,
    spec: &PySpec,
    n: usize,
    energy: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    cutoff_mult: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let settings = DeviationSettings { cutoff_mult, ..DeviationSettings::default() };
    let r = py
        .detach(|| lab::deviation_event_probability(&spec.inner, n, energy, alpha, trials, seed, &settings))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn ld_rate<'py>(py: Python<'py>, law: &str, t: f64, cells: u64) -> PyResult<Bound<'py, PyAny>> {
    let d = Disorder::parse(law).map_err(err)?;
    to_py(py, &lab::ld_rate(&d, t, cells).map_err(err)?)
}

/// Least-squares tail exponent from `(E, p)` pairs.
#[pyfunction]
fn fit_tail<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &lab::fit_tail(&points).map_err(err)?)
}

#[pyfunction]
fn selftest<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let checks = py.detach(idslab_core::selftest::run_selftest);
    to_py(py, &checks)
}

#[pymodule]
fn idslab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(sample_field, m)?)?;
    m.add_function(wrap_pyfunction!(periodize, m)?)?;
    m.add_function(wrap_pyfunction!(mean_field, m)?)?;
    m.add_function(wrap_pyfunction!(py_assemble, m)?)?;
    m.add_function(wrap_pyfunction!(finite_volume_ids, m)?)?;
    m.add_function(wrap_pyfunction!(floquet_ids, m)?)?;
    m.add_function(wrap_pyfunction!(periodized_ids, m)?)?;
    m.add_function(wrap_pyfunction!(homogenized_ids, m)?)?;
    m.add_function(wrap_pyfunction!(sandwich_check, m)?)?;
    m.add_function(wrap_pyfunction!(approximation_check, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_event_probability, m)?)?;
    m.add_function(wrap_pyfunction!(ld_rate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tail, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_types() {
        Python::initialize();
        Python::attach(|py| {
            assert!(err(IdsError::config("x")).is_instance_of::<PyValueError>(py));
            assert!(err(IdsError::domain("x")).is_instance_of::<PyRuntimeError>(py));
        });
    }

    #[test]
    fn json_values_convert() {
        Python::initialize();
        Python::attach(|py| {
            let v = serde_json::json!({ "a": [1, 2.5, true, null], "b": "s" });
            let o = value_to_py(py, &v).unwrap();
            let d = o.cast::<PyDict>().unwrap();
            let a = d.get_item("a").unwrap().unwrap();
            assert_eq!(a.len().unwrap(), 4);
            assert_eq!(d.get_item("b").unwrap().unwrap().extract::<String>().unwrap(), "s");
        });
    }
}
