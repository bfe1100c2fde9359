//! Python bindings for pflab-core.
//!
//! Structured results come back as plain dicts (built from the serde form of
//! the core types); library errors map to `ValueError` for rejected inputs,
//! `NonConvergenceError` for failed iterations or a missing bracket, and
//! `RuntimeError` otherwise.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

use pflab_core::binding::{
    bracket_first_resonance, field_coefficient_closed as fc_closed, find_resonance_coupling_with, scan_epsilon,
    PotentialProfile, RadialPotential, ResonanceResult, ShootOptions,
};
use pflab_core::coeffs::{e1_closed as e1c, e2_total, Vev2Options};
use pflab_core::fock::{
    assemble, build_grid, check_auxiliary_bounds, check_epstens, discrete_coeffs_with, ground_state_with,
    self_adjointness, EigenOptions, Eigensolver, ModeGrid,
};
use pflab_core::{Cutoff, Error};

create_exception!(pflab, NonConvergenceError, PyRuntimeError, "An iterative method failed to converge.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        Error::NoBracket { .. } => NonConvergenceError::new_err(e.to_string()),
        e if e.is_non_convergence() => NonConvergenceError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn cutoff(lambda: f64) -> PyResult<Cutoff> {
    Cutoff::new(lambda).map_err(py_err)
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    match v {
        Value::Null => Ok(py.None().into_bound(py)),
        Value::Bool(b) => b.into_bound_py_any(py),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_bound_py_any(py),
            (None, Some(u)) => u.into_bound_py_any(py),
            _ => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py),
        },
        Value::String(s) => s.into_bound_py_any(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            Ok(PyList::new(py, items)?.into_any())
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            Ok(d.into_any())
        }
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// First order coefficient (2/π)(Λ − ln(1+Λ)).
#[pyfunction]
fn e1_closed(lambda: f64) -> PyResult<f64> {
    Ok(e1c(cutoff(lambda)?))
}

/// Closed form (2/(3π))ln(1+Λ) of the field coefficient.
#[pyfunction]
fn field_coefficient_closed(lambda: f64) -> PyResult<f64> {
    Ok(fc_closed(cutoff(lambda)?))
}

/// e₁ and e₂ with the per-integral breakdown by quadrature and Monte Carlo.
#[pyfunction]
#[pyo3(signature = (lambda, quad_tol=1e-6, quad_tol_1d=1e-9, mc_samples=1_000_000, seed=20_240_601))]
fn self_energy<'py>(
    py: Python<'py>,
    lambda: f64,
    quad_tol: f64,
    quad_tol_1d: f64,
    mc_samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = cutoff(lambda)?;
    let opts = Vev2Options {
        quad_tol,
        quad_tol_1d,
        mc_samples,
        seed,
    };
    let r = py.detach(|| e2_total(c, &opts)).map_err(py_err)?;
    to_py(py, &r)
}

/// Largest relative deviation between the reduced kernels and direct
/// angular integration of the unreduced integrand at random points.
#[pyfunction]
#[pyo3(signature = (lambda, points=100, seed=7))]
fn kernel_reduction_deviation(py: Python<'_>, lambda: f64, points: usize, seed: u64) -> PyResult<f64> {
    let c = cutoff(lambda)?;
    py.detach(|| pflab_core::integrand::reduction_deviation(c, points, seed)).map_err(py_err)
}

/// Discretized photon modes on a product Gauss-Legendre grid.
#[pyclass(frozen)]
struct Grid {
    inner: ModeGrid,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(lambda: f64, n_r: usize, n_t: usize, n_phi: usize) -> PyResult<Self> {
        let inner = build_grid(cutoff(lambda)?, n_r, n_t, n_phi).map_err(py_err)?;
        Ok(Grid { inner })
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn vacuum_constant(&self) -> f64 {
        self.inner.vacuum_constant()
    }

    /// Discrete analogues of e₁, e₂ and the vacuum constant.
    #[pyo3(signature = (include_diagonal_pairs=true))]
    fn discrete_coeffs<'py>(&self, py: Python<'py>, include_diagonal_pairs: bool) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &discrete_coeffs_with(&self.inner, include_diagonal_pairs))
    }

    /// Lowest eigenvalue of the truncated operator at coupling α and zero total momentum.
    #[pyo3(signature = (alpha, tol=1e-12, max_iter=400, solver="davidson"))]
    fn ground_state<'py>(
        &self,
        py: Python<'py>,
        alpha: f64,
        tol: f64,
        max_iter: usize,
        solver: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let solver: Eigensolver = serde_json::from_value(Value::String(solver.to_string()))
            .map_err(|_| PyValueError::new_err(format!("unknown solver {solver:?}; use davidson or lanczos")))?;
        let opts = EigenOptions {
            tol,
            max_iter,
            solver,
            ..Default::default()
        };
        let gs = py
            .detach(|| assemble(&self.inner, alpha, [0.0; 3], None).and_then(|op| ground_state_with(&op, &opts)))
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("energy", gs.energy)?;
        d.set_item("residual", gs.residual)?;
        d.set_item("degeneracy_gap", gs.degeneracy_gap)?;
        d.set_item("iterations", gs.iterations)?;
        Ok(d.into_any())
    }

    /// Dense checks of the auxiliary operator bounds at coupling α.
    fn auxiliary_bounds<'py>(&self, py: Python<'py>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = py.detach(|| check_auxiliary_bounds(&self.inner, alpha)).map_err(py_err)?;
        to_py(py, &r)
    }

    /// Largest deviation of the discrete polarization tensor sum from its closed form.
    fn epstens(&self) -> f64 {
        check_epstens(&self.inner)
    }

    /// Largest |⟨x,Ty⟩ − ⟨Tx,y⟩| over random state pairs.
    #[pyo3(signature = (alpha, pairs=100, seed=7))]
    fn self_adjointness(&self, py: Python<'_>, alpha: f64, pairs: usize, seed: u64) -> PyResult<f64> {
        py.detach(|| assemble(&self.inner, alpha, [0.0; 3], None).map(|op| self_adjointness(&op, pairs, seed)))
            .map_err(py_err)
    }
}

/// A radial potential tuned to a zero-energy resonance.
#[pyclass(frozen)]
struct Resonance {
    inner: ResonanceResult,
}

#[pymethods]
impl Resonance {
    /// Locates the first resonance coupling g* of a bump or square-well
    /// profile. Without a bracket the interval (0, g_max] is scanned at
    /// `samples` points.
    #[staticmethod]
    #[pyo3(signature = (profile="bump", r0=1.0, bracket=None, g_max=40.0, samples=40, tol=1e-12, steps=4000))]
    fn find(
        py: Python<'_>,
        profile: &str,
        r0: f64,
        bracket: Option<(f64, f64)>,
        g_max: f64,
        samples: usize,
        tol: f64,
        steps: usize,
    ) -> PyResult<Self> {
        let profile = match profile {
            "bump" => PotentialProfile::Bump,
            "square_well" => PotentialProfile::SquareWell,
            p => return Err(PyValueError::new_err(format!("unknown profile {p:?}; use bump or square_well"))),
        };
        let pot = RadialPotential::new(profile, r0).map_err(py_err)?;
        let inner = py
            .detach(|| {
                let b = match bracket {
                    Some(b) => b,
                    None => bracket_first_resonance(&pot, g_max, samples)?,
                };
                find_resonance_coupling_with(&pot, b, tol, &ShootOptions { steps })
            })
            .map_err(py_err)?;
        Ok(Resonance { inner })
    }

    #[getter]
    fn g_star(&self) -> f64 {
        self.inner.g_star
    }

    #[getter]
    fn integral_equation_residual(&self) -> f64 {
        self.inner.integral_equation_residual
    }

    #[getter]
    fn tail_constant(&self) -> f64 {
        self.inner.tail_constant()
    }

    /// Radial resonance function ψ(r).
    fn psi(&self, r: f64) -> f64 {
        self.inner.psi(r)
    }

    /// Binding margin of the truncated trial state at (Λ, α, ε).
    fn margin<'py>(&self, py: Python<'py>, lambda: f64, alpha: f64, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
        let c = cutoff(lambda)?;
        let r = py
            .detach(|| pflab_core::binding::binding_margin(&self.inner, c, alpha, epsilon))
            .map_err(py_err)?;
        to_py(py, &r)
    }

    /// Margins over ε = 2^-j for j in [j_min, j_max].
    #[pyo3(signature = (lambda, alpha, j_min=0, j_max=30))]
    fn scan<'py>(&self, py: Python<'py>, lambda: f64, alpha: f64, j_min: i32, j_max: i32) -> PyResult<Bound<'py, PyAny>> {
        let c = cutoff(lambda)?;
        let r = py.detach(|| scan_epsilon(&self.inner, c, alpha, j_min, j_max)).map_err(py_err)?;
        to_py(py, &r)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

#[pymodule]
pub fn pflab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NonConvergenceError", m.py().get_type::<NonConvergenceError>())?;
    m.add_function(wrap_pyfunction!(e1_closed, m)?)?;
    m.add_function(wrap_pyfunction!(field_coefficient_closed, m)?)?;
    m.add_function(wrap_pyfunction!(self_energy, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_reduction_deviation, m)?)?;
    m.add_class::<Grid>()?;
    m.add_class::<Resonance>()?;
    Ok(())
}
