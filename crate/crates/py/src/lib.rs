//! Python bindings: scenario runs and the core Hermitian/PSD predicates,
//! driven in-process (no subprocess, no files unless asked).
//!
//! Matrices cross the boundary as nested lists of Python complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use riccati_nonosc_core::linalg::CMatrix;
use riccati_nonosc_core::scenario::{
    build_scenario, builtin_scenario, catalog_text, parse_scenario_str, run_scenario_str,
    scenario_to_json, RunError, ScenarioFile,
};

fn matrix_from_py(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("matrix must be nonempty"));
    }
    CMatrix::from_rows(&rows).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix_to_py(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim())
        .map(|r| (0..m.dim()).map(|c| m[(r, c)]).collect())
        .collect()
}

/// `M + M*` (the full sum convention used throughout the crate).
#[pyfunction]
fn hermitian_part(matrix: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    let m = matrix_from_py(matrix)?;
    Ok(matrix_to_py(m.hermitian_part().matrix()))
}

/// Least eigenvalue of the Hermitian (symmetrized) input.
#[pyfunction]
fn min_eigenvalue(matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let m = matrix_from_py(matrix)?;
    let h = riccati_nonosc_core::linalg::HermitianMatrix::symmetrize(&m);
    h.min_eigenvalue()
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Nonnegative definiteness up to `tol` relative to `max(1, ‖H‖_F)`.
#[pyfunction]
#[pyo3(signature = (matrix, tol=1e-10))]
fn is_psd(matrix: Vec<Vec<Complex64>>, tol: f64) -> PyResult<bool> {
    let m = matrix_from_py(matrix)?;
    let h = riccati_nonosc_core::linalg::HermitianMatrix::symmetrize(&m);
    h.is_psd(tol).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn trace(matrix: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
    Ok(matrix_from_py(matrix)?.trace())
}

#[pyfunction]
fn determinant(matrix: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
    Ok(matrix_from_py(matrix)?.determinant())
}

/// Inverse guarded by a condition cap; raises ValueError when the matrix
/// is too ill-conditioned.
#[pyfunction]
#[pyo3(signature = (matrix, cond_cap=1e12))]
fn inverse(matrix: Vec<Vec<Complex64>>, cond_cap: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let m = matrix_from_py(matrix)?;
    let inv = m
        .inverse(cond_cap)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(matrix_to_py(&inv))
}

/// The coefficient-family catalog listing (same text as the CLI).
#[pyfunction]
fn catalog() -> String {
    catalog_text()
}

/// JSON of a bundled example scenario: "e1", "e2", "e3" or "e4".
#[pyfunction]
fn example_scenario(name: &str) -> PyResult<String> {
    builtin_scenario(name)
        .map(|s| scenario_to_json(&s))
        .ok_or_else(|| PyValueError::new_err(format!("unknown example scenario '{name}'")))
}

/// A parsed verification scenario.
#[pyclass]
struct Scenario {
    inner: ScenarioFile,
}

#[pymethods]
impl Scenario {
    /// Parse a scenario from JSON text. Raises ValueError naming the
    /// offending field when malformed.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = parse_scenario_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Scenario { inner })
    }

    /// Load a scenario from a file path.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let inner = riccati_nonosc_core::scenario::load_scenario(std::path::Path::new(path))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Scenario { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    fn to_json(&self) -> String {
        scenario_to_json(&self.inner)
    }

    /// Run the verification pipeline; returns the report as JSON text.
    /// Raises RuntimeError when a numerical failure prevents completion.
    fn run(&self) -> PyResult<String> {
        run_scenario_str(&self.to_json()).map_err(|e| match e {
            RunError::Pipeline(p) => PyRuntimeError::new_err(p.to_string()),
            other => PyValueError::new_err(other.to_string()),
        })
    }

    /// Check the scenario can be resolved into model objects (includes
    /// the cone admissibility of Y0).
    fn check_buildable(&self) -> PyResult<()> {
        build_scenario(&self.inner)
            .map(|_| ())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name='{}', n={})", self.inner.name, self.inner.n)
    }
}

/// Validate scenario JSON; returns a list of issues (empty means valid).
/// Parse failures are reported as a single issue naming the field.
#[pyfunction]
fn validate_scenario_json(text: &str) -> Vec<String> {
    match parse_scenario_str(text) {
        Ok(_) => Vec::new(),
        Err(riccati_nonosc_core::scenario::ScenarioError::Invalid { issues }) => issues,
        Err(e) => vec![e.to_string()],
    }
}

/// Parse + run scenario JSON in one call; returns the report JSON.
#[pyfunction]
fn run_scenario(text: &str) -> PyResult<String> {
    run_scenario_str(text).map_err(|e| match e {
        RunError::Pipeline(p) => PyRuntimeError::new_err(p.to_string()),
        other => PyValueError::new_err(other.to_string()),
    })
}

#[pymodule]
fn riccati_nonosc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", riccati_nonosc_core::TOOL_VERSION)?;
    m.add("SCHEMA_VERSION", riccati_nonosc_core::SCHEMA_VERSION)?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(hermitian_part, m)?)?;
    m.add_function(wrap_pyfunction!(min_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(is_psd, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(determinant, m)?)?;
    m.add_function(wrap_pyfunction!(inverse, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(example_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario_json, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
