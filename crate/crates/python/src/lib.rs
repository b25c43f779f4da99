use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use inls_core::groundstate::{compute_constants, GroundStateProfile};
use inls_core::harness::{parse_config, run_experiment as run_one, sweep_amplitude, ConstantsCache, KEYS};
use inls_core::model::{derive_alpha_exact, Number};
use inls_core::InlsError;

fn to_py(e: InlsError) -> PyErr {
    match e {
        InlsError::Config(_) | InlsError::Range { .. } | InlsError::DimensionUnsupported(..) | InlsError::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// b as int, float or a "p/q" string. Floats go through their shortest
/// decimal form so 0.25 stays exact.
fn number(b: &Bound<'_, PyAny>) -> PyResult<Number> {
    if let Ok(i) = b.extract::<i64>() {
        return Ok(Number::int(i));
    }
    let text = match b.extract::<f64>() {
        Ok(x) => x.to_string(),
        Err(_) => b.extract::<String>()?,
    };
    text.parse().map_err(to_py)
}

/// c, C1, E_W, alpha and P(W) for (N, b) in the validated range.
#[pyfunction]
#[pyo3(signature = (n, b))]
fn constants<'py>(py: Python<'py>, n: u32, b: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyDict>> {
    let k = compute_constants(n, number(b)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("alpha", k.alpha)?;
    d.set_item("c", k.c)?;
    d.set_item("C1", k.c1)?;
    d.set_item("E_W", k.e_w)?;
    d.set_item("potential", k.potential)?;
    d.set_item("quadrature_error", k.quadrature_error)?;
    Ok(d)
}

/// α = (4 − 2b)/(N − 2) as a string, exact when b is.
#[pyfunction]
fn critical_alpha(n: u32, b: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(derive_alpha_exact(n, number(b)?).map_err(to_py)?.to_string())
}

/// W(r) at each radius.
#[pyfunction]
fn ground_state(n: u32, b: f64, r: Vec<f64>) -> PyResult<Vec<f64>> {
    let w = GroundStateProfile::new(n, b).map_err(to_py)?;
    Ok(r.into_iter().map(|x| w.w(x)).collect())
}

/// (key, description) for every config key.
#[pyfunction]
fn config_keys() -> Vec<(&'static str, &'static str)> {
    KEYS.to_vec()
}

/// Runs one experiment from config text and returns its record as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = parse_config(config).map_err(to_py)?;
    py.detach(|| run_one(&cfg, &ConstantsCache::new()).and_then(|r| r.to_json_line()))
        .map_err(to_py)
}

/// Amplitude sweep; returns the summary CSV (A,E0,K0,subthreshold,verdict).
#[pyfunction]
fn sweep(py: Python<'_>, config: &str, amplitudes: Vec<f64>) -> PyResult<String> {
    let cfg = parse_config(config).map_err(to_py)?;
    py.detach(|| sweep_amplitude(&cfg, &amplitudes, &ConstantsCache::new()).map(|s| s.csv()))
        .map_err(to_py)
}

#[pymodule]
fn inls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(critical_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(config_keys, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
