//! Python bindings exposing the main types and operations: tower functions,
//! the constructed potentials, the singular-ODE solver, the change of
//! variables, and the discrete sharp-constant solvers.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hdl_core::grid::log_grid;
use hdl_core::ode::{self, SolveConfig};
use hdl_core::potential::{self, Potential};
use hdl_core::transform::VariableMap;
use hdl_core::{forms, LogTower};

fn err(e: hdl_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tower(a: f64) -> PyResult<LogTower> {
    LogTower::new(a).map_err(err)
}

fn build(kind: &str, a: f64) -> PyResult<Potential> {
    let t = tower(a)?;
    match kind {
        "one" => Ok(Potential::One),
        "winf" => Ok(Potential::tower_optimal(t)),
        "wbar" => Ok(Potential::BarEnvelope { tower: t }),
        "w1" => Potential::w1(t).map_err(err),
        "w2" => Potential::w2().map_err(err),
        "w3" => {
            let sol = Arc::new(ode::solve(&t, &SolveConfig::default()).map_err(err)?);
            Potential::w3(t)
                .map_err(err)?
                .attach_ode(sol)
                .map_err(err)
        }
        other => Err(PyValueError::new_err(format!(
            "unknown potential `{other}` (one|winf|wbar|w1|w2|w3)"
        ))),
    }
}

/// `X_1(s) = 1/(a - log s)`.
#[pyfunction]
#[pyo3(signature = (s, a = 5.0))]
fn x1(s: f64, a: f64) -> PyResult<f64> {
    tower(a)?.x1(s).map_err(err)
}

/// `X_k(s)` by k-fold composition.
#[pyfunction]
#[pyo3(signature = (s, k, a = 5.0))]
fn xk(s: f64, k: usize, a: f64) -> PyResult<f64> {
    tower(a)?.xk(s, k).map_err(err)
}

/// Optimal potential `W_inf(s) = 1 + (1/8) sum pi_k^2`.
#[pyfunction]
#[pyo3(signature = (s, a = 5.0))]
fn w_infinity(s: f64, a: f64) -> PyResult<f64> {
    tower(a)?.w_infinity(s).map_err(err)
}

/// Multiplier generator `nbar(s) = (1/2) sum pi_k`.
#[pyfunction]
#[pyo3(signature = (s, a = 5.0))]
fn nbar(s: f64, a: f64) -> PyResult<f64> {
    tower(a)?.nbar(s).map_err(err)
}

/// Threshold past which the `1/(4s)`-channel envelope stays above 1.
#[pyfunction]
fn find_t() -> PyResult<f64> {
    potential::find_t().map_err(err)
}

/// Closed-form radical for the same threshold.
#[pyfunction]
fn t_closed_form() -> f64 {
    potential::t_closed_form()
}

/// Evaluate a constructed potential (`one|winf|wbar|w1|w2|w3`) at `s`.
#[pyfunction]
#[pyo3(signature = (kind, s, a = 5.0))]
fn eval_potential(kind: &str, s: f64, a: f64) -> PyResult<f64> {
    build(kind, a)?.eval(s).map_err(err)
}

/// Break radii `(plus, minus)` of the multiplier pair behind `w1|w2|w3`.
#[pyfunction]
#[pyo3(signature = (kind, a = 5.0))]
fn break_radii(kind: &str, a: f64) -> PyResult<(f64, f64)> {
    build(kind, a)?.break_radii().map_err(err)
}

/// Solve the singular multiplier problem; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (delta = 1e-2, class_constant = 0.5, tol = 1e-10, a = 5.0))]
fn solve_ode(
    py: Python<'_>,
    delta: f64,
    class_constant: f64,
    tol: f64,
    a: f64,
) -> PyResult<Py<PyDict>> {
    let config = SolveConfig {
        delta,
        class_constant,
        tol,
        ..SolveConfig::default()
    };
    let sol = ode::solve(&tower(a)?, &config).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta", sol.delta)?;
    d.set_item("iterations", sol.iterations)?;
    d.set_item("residual_sup", sol.residual_sup)?;
    d.set_item("class_norm", sol.class_norm)?;
    d.set_item("w0_extrapolated", sol.w0_extrapolated)?;
    d.set_item("contraction_ratios", sol.contraction_ratios())?;
    Ok(d.into())
}

/// `y(r)` for the change of variables under the chosen potential.
#[pyfunction]
#[pyo3(signature = (kind, r, a = 5.0))]
fn y_of_r(kind: &str, r: f64, a: f64) -> PyResult<f64> {
    let map = VariableMap::new(build(kind, a)?).map_err(err)?;
    map.y_of_r(r).map_err(err)
}

/// `V(y)` of the transformed inequality.
#[pyfunction]
#[pyo3(signature = (kind, y, a = 5.0))]
fn v_of_y(kind: &str, y: f64, a: f64) -> PyResult<f64> {
    let map = VariableMap::new(build(kind, a)?).map_err(err)?;
    map.v_of_y(y).map_err(err)
}

/// Discrete minimum of the `1/4`-quotient on a log grid of `n` nodes over
/// `(r_min, 1)`.
#[pyfunction]
#[pyo3(signature = (r_min = 1e-139, n = 10_000))]
fn hardy_discrete_min(r_min: f64, n: usize) -> PyResult<f64> {
    forms::hardy_discrete_min(&log_grid(r_min, 1.0, n)).map_err(err)
}

/// Pointwise admissibility margin minimum for `w1|w2|w3` on a log grid.
#[pyfunction]
#[pyo3(signature = (kind, a = 5.0))]
fn admissibility_margin(kind: &str, a: f64) -> PyResult<f64> {
    let p = build(kind, a)?;
    let pair = p.multiplier_pair().map_err(err)?;
    let grid = hdl_core::grid::log_grid_ppd(1e-6, 1e2, 256);
    let report = potential::admissible(&pair, &p, &grid, 1e-9).map_err(err)?;
    Ok(report.min_margin)
}

#[pymodule]
fn hdl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(x1, m)?)?;
    m.add_function(wrap_pyfunction!(xk, m)?)?;
    m.add_function(wrap_pyfunction!(w_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(nbar, m)?)?;
    m.add_function(wrap_pyfunction!(find_t, m)?)?;
    m.add_function(wrap_pyfunction!(t_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(eval_potential, m)?)?;
    m.add_function(wrap_pyfunction!(break_radii, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ode, m)?)?;
    m.add_function(wrap_pyfunction!(y_of_r, m)?)?;
    m.add_function(wrap_pyfunction!(v_of_y, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_discrete_min, m)?)?;
    m.add_function(wrap_pyfunction!(admissibility_margin, m)?)?;
    Ok(())
}
