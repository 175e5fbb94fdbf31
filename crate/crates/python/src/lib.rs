//! Python module `korteweg`: the CLI commands plus a few numerical entry points.

use std::path::{Path, PathBuf};

use korteweg_core::cli::{self, Outcome};
use korteweg_core::config::{parse_config, parse_norm_spec, document_to_text};
use korteweg_core::linear::{blk_apply, mode_block};
use korteweg_core::spectral::C64;
use korteweg_core::{DyadicFilterBank, Error, LinearParams};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Config { .. } | Error::Parameter(_) | Error::Usage(_) | Error::InvalidGrid(_) | Error::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn root(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(korteweg_core::io::output_root)
}

fn outcome<'py>(py: Python<'py>, o: Outcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("run_id", o.run_id)?;
    d.set_item("dir", o.dir.to_string_lossy().into_owned())?;
    d.set_item("passed", o.passed)?;
    d.set_item("summary", o.summary)?;
    Ok(d)
}

/// Integrate a run config; outputs go under `out` (default `$KORTEWEG_OUT`).
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn simulate<'py>(py: Python<'py>, config: PathBuf, out: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let o = py.detach(|| cli::simulate(&config, &root(out))).map_err(to_py)?;
    outcome(py, o)
}

#[pyfunction]
#[pyo3(signature = (plan, out=None))]
fn sweep<'py>(py: Python<'py>, plan: PathBuf, out: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let o = py.detach(|| cli::sweep(&plan, &root(out))).map_err(to_py)?;
    outcome(py, o)
}

#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn verify_linear<'py>(py: Python<'py>, config: PathBuf, out: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let o = py.detach(|| cli::verify_linear(&config, &root(out))).map_err(to_py)?;
    outcome(py, o)
}

#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn verify_lp<'py>(py: Python<'py>, config: PathBuf, out: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let o = py.detach(|| cli::verify_lp(&config, &root(out))).map_err(to_py)?;
    outcome(py, o)
}

#[pyfunction]
#[pyo3(signature = (snapshots, specs, out=None))]
fn norms<'py>(
    py: Python<'py>,
    snapshots: Vec<PathBuf>,
    specs: Vec<String>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let o = py.detach(|| cli::norms(&snapshots, &specs, &root(out))).map_err(to_py)?;
    outcome(py, o)
}

/// Parse a config or plan and return its full normalised text.
#[pyfunction]
fn normalize_config(text: &str) -> PyResult<String> {
    parse_config(text).map(|d| document_to_text(&d)).map_err(to_py)
}

/// Norm of one snapshot file.
#[pyfunction]
fn snapshot_norm(path: PathBuf, spec: &str) -> PyResult<f64> {
    let spec = parse_norm_spec(spec).map_err(PyValueError::new_err)?;
    let (f, _) = korteweg_core::io::read_snapshot(Path::new(&path)).map_err(to_py)?;
    DyadicFilterBank::new(*f.grid())
        .and_then(|b| b.norm(&f, &spec))
        .map_err(to_py)
}

/// `(n, side, rank, time)` of a snapshot file.
#[pyfunction]
fn snapshot_info(path: PathBuf) -> PyResult<(usize, f64, String, f64)> {
    let (f, t) = korteweg_core::io::read_snapshot(&path).map_err(to_py)?;
    Ok((f.grid().n(), f.grid().side(), f.rank().name().to_string(), t))
}

/// Linear evolution of one Fourier mode `(â, v̂₁, v̂₂)` at wavevector `xi` for time `t`.
#[pyfunction]
#[pyo3(signature = (xi, state, t, eps, mu, lam, kappa))]
fn propagate_mode(
    xi: (f64, f64),
    state: (C64, C64, C64),
    t: f64,
    eps: f64,
    mu: f64,
    lam: f64,
    kappa: f64,
) -> PyResult<(C64, C64, C64)> {
    if !(t >= 0.0) {
        return Err(PyValueError::new_err("t must be nonnegative"));
    }
    let p = LinearParams::new(eps, mu, lam, kappa).map_err(to_py)?;
    let xi = [xi.0, xi.1];
    let r = xi[0].hypot(xi[1]);
    let (a, v1, v2) = state;
    if r == 0.0 {
        return Ok(state);
    }
    let b = mode_block(&p, xi);
    let m = (xi[0] * v1 + xi[1] * v2) / r;
    let u = (xi[0] * v2 - xi[1] * v1) / r * (-b.perp_rate * t).exp();
    let (a, m) = blk_apply(&b.exp_neg(t), a, m);
    Ok((a, (xi[0] * m - xi[1] * u) / r, (xi[1] * m + xi[0] * u) / r))
}

#[pymodule]
fn korteweg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", korteweg_core::CODE_VERSION)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(verify_linear, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lp, m)?)?;
    m.add_function(wrap_pyfunction!(norms, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_config, m)?)?;
    m.add_function(wrap_pyfunction!(snapshot_norm, m)?)?;
    m.add_function(wrap_pyfunction!(snapshot_info, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_mode, m)?)?;
    Ok(())
}
