//! Python bindings: matrices cross the boundary as lists of row lists,
//! spectra as lists of (re, im) pairs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nonrev_core as core;
use nonrev_core::{Matrix, Vector};

fn to_py_err(e: core::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(PyValueError::new_err("expected nonempty rectangular rows"));
    }
    Ok(Matrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn spd(rows: Vec<Vec<f64>>) -> PyResult<core::SpdMatrix> {
    core::SpdMatrix::new(rows_to_matrix(rows)?).map_err(to_py_err)
}

/// Validate a symmetric positive definite matrix; returns the symmetrized
/// entries or raises ValueError.
#[pyfunction]
fn validate_spd(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_to_rows(spd(rows)?.matrix()))
}

/// Eigenvalues of a square real matrix as (re, im) pairs.
#[pyfunction]
fn eig(rows: Vec<Vec<f64>>) -> PyResult<Vec<(f64, f64)>> {
    let spec = core::eig_general(&rows_to_matrix(rows)?).map_err(to_py_err)?;
    Ok(spec.eigenvalues.iter().map(|c| (c.re, c.im)).collect())
}

/// Matrix exponential.
#[pyfunction]
fn expm(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_to_rows(&core::expm(&rows_to_matrix(rows)?).map_err(to_py_err)?))
}

/// Dirichlet tridiagonal Laplacian (2 on the diagonal, -1 off).
#[pyfunction]
fn make_laplacian(n: usize) -> PyResult<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(PyValueError::new_err("n must be at least 2"));
    }
    Ok(matrix_to_rows(core::make_laplacian(n).matrix()))
}

/// Balanced basis for S: returns (vectors as rows, rayleigh quotients, target).
#[pyfunction]
fn balanced_basis(rows: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let s = spd(rows)?;
    let basis = core::build_balanced_basis(&s);
    Ok((
        matrix_to_rows(&basis.vectors().transpose()),
        basis.rayleigh_quotients(&s),
        basis.target(),
    ))
}

/// Rotation angle placing the Rayleigh quotient at `target`.
#[pyfunction]
fn solve_tstar(alpha0: f64, alpha1: f64, beta: f64, target: f64) -> PyResult<f64> {
    core::solve_tstar(alpha0, alpha1, beta, target).map_err(to_py_err)
}

/// The optimal pair (J_tilde, Q) and derived drift matrices for S.
#[pyclass(name = "OptimalPair")]
struct PyOptimalPair {
    inner: core::OptimalPair,
}

#[pymethods]
impl PyOptimalPair {
    /// The achieved spectral gap Tr(S)/N.
    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    fn j(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.j().matrix())
    }

    fn j_tilde(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.j_tilde().matrix())
    }

    fn q(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.q().matrix())
    }

    fn b_j(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.b_j())
    }

    fn ladder(&self) -> Vec<f64> {
        self.inner.ladder().values().to_vec()
    }

    fn spectrum(&self) -> PyResult<Vec<(f64, f64)>> {
        let spec = core::eig_general(self.inner.b_j()).map_err(to_py_err)?;
        Ok(spec.eigenvalues.iter().map(|c| (c.re, c.im)).collect())
    }

    fn min_re(&self) -> PyResult<f64> {
        core::min_re_spectrum(&self.inner).map_err(to_py_err)
    }

    fn lyapunov_residual(&self) -> f64 {
        self.inner.lyapunov_residual()
    }

    fn prefactors<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = core::prefactor_constants(&self.inner);
        let d = PyDict::new(py);
        d.set_item("cn1", c.cn1)?;
        d.set_item("cn2", c.cn2)?;
        d.set_item("kappa_q", c.kappa_q)?;
        d.set_item("kappa_q_inv_s", c.kappa_q_inv_s)?;
        d.set_item("j_tilde_norm", c.j_tilde_norm)?;
        d.set_item("lower_bound_j", c.lower_bound_j)?;
        d.set_item("scalar_case", c.scalar_case)?;
        d.set_item("lower_bound_holds", c.lower_bound_holds)?;
        d.set_item("frobenius_bound_holds", c.frobenius_bound_holds)?;
        Ok(d)
    }
}

/// Build the optimal pair for S, optionally with an explicit eigenvalue
/// ladder for Q (defaults to N+1, ..., 2N).
#[pyfunction]
#[pyo3(signature = (rows, ladder=None))]
fn optimal_pair(rows: Vec<Vec<f64>>, ladder: Option<Vec<f64>>) -> PyResult<PyOptimalPair> {
    let s = spd(rows)?;
    let ladder = match ladder {
        Some(values) => Some(core::EigenLadder::new(values).map_err(to_py_err)?),
        None => None,
    };
    let inner = core::build_optimal_pair(&s, ladder).map_err(to_py_err)?;
    Ok(PyOptimalPair { inner })
}

/// Operator norms of exp(-tB) on a uniform grid: (times, norms).
#[pyfunction]
fn decay_norms(rows: Vec<Vec<f64>>, t_max: f64, steps: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let curve =
        core::decay_curve(&rows_to_matrix(rows)?, t_max, steps, "py").map_err(to_py_err)?;
    Ok((curve.times, curve.norms))
}

/// Closed-form 2D report for S = diag(1, lambda), J = [[0, a], [-a, 0]].
#[pyfunction]
fn two_dim_report<'py>(py: Python<'py>, lambda: f64, a: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = core::two_dim_report(lambda, a).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("lambda", r.lambda)?;
    d.set_item("a", r.a)?;
    d.set_item("a_crit_squared", r.a_crit_squared)?;
    d.set_item("mu_plus", (r.mu_plus.re, r.mu_plus.im))?;
    d.set_item("mu_minus", (r.mu_minus.re, r.mu_minus.im))?;
    d.set_item("p_norm_product", r.p_norm_product)?;
    d.set_item("jordan_case", r.jordan_case)?;
    Ok(d)
}

/// L2(psi_inf^{-1}) distance of a Gaussian state to equilibrium;
/// None when the squared distance is infinite.
#[pyfunction]
fn l2_distance(
    s_rows: Vec<Vec<f64>>,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
) -> PyResult<Option<f64>> {
    let s = spd(s_rows)?;
    let state = core::GaussianState::new(Vector::from_vec(mean), rows_to_matrix(covariance)?)
        .map_err(to_py_err)?;
    match core::l2_distance_to_equilibrium(&state, &s).map_err(to_py_err)? {
        core::L2Distance::Finite(d) => Ok(Some(d)),
        core::L2Distance::Divergent => Ok(None),
    }
}

/// Hermite-Galerkin check on the optimal pair for S: returns
/// (max spectrum mismatch, coercivity min eigenvalue).
#[pyfunction]
fn hermite_check(rows: Vec<Vec<f64>>, degree: usize) -> PyResult<(f64, f64)> {
    let s = spd(rows)?;
    let pair = core::build_optimal_pair(&s, None).map_err(to_py_err)?;
    let trunc = core::HermiteTruncation::new(s.dim(), degree);
    let report = core::verify_spectrum(&trunc, &s, pair.j_tilde()).map_err(to_py_err)?;
    let coercivity = core::coercivity_min_eigenvalue(&trunc, &pair).map_err(to_py_err)?;
    Ok((report.max_mismatch, coercivity))
}

/// Double-well Euler-Maruyama experiment; returns (times, means, stderrs)
/// of the second moment.
#[pyfunction]
#[pyo3(signature = (delta, beta, dt, steps, n_paths, seed, record_every=100))]
fn simulate_double_well(
    delta: f64,
    beta: f64,
    dt: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
    record_every: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let j = core::AntisymMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))
        .map_err(to_py_err)?;
    let drift =
        core::gradient_drift(core::Potential::DoubleWell, delta, &j).map_err(to_py_err)?;
    let config = core::SdeConfig {
        dim: 2,
        drift: core::DriftKind::Gradient(drift),
        beta,
        dt,
        steps,
        n_paths,
        seed,
        x0: vec![vec![0.0, 0.0]],
        record_every,
    };
    let trace = core::simulate(&config, core::Observable::SecondMoment).map_err(to_py_err)?;
    Ok((trace.times, trace.values, trace.stderr))
}

/// Equilibrium second moment of the double-well density by quadrature.
#[pyfunction]
#[pyo3(signature = (beta, half_width=3.0, nodes=400))]
fn equilibrium_double_well(beta: f64, half_width: f64, nodes: usize) -> PyResult<f64> {
    core::equilibrium_quadrature_2d(
        &core::Potential::DoubleWell,
        beta,
        |x, y| x * x + y * y,
        half_width,
        nodes,
    )
    .map_err(to_py_err)
}

#[pymodule]
fn nonrev_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOptimalPair>()?;
    m.add_function(wrap_pyfunction!(validate_spd, m)?)?;
    m.add_function(wrap_pyfunction!(eig, m)?)?;
    m.add_function(wrap_pyfunction!(expm, m)?)?;
    m.add_function(wrap_pyfunction!(make_laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_basis, m)?)?;
    m.add_function(wrap_pyfunction!(solve_tstar, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_pair, m)?)?;
    m.add_function(wrap_pyfunction!(decay_norms, m)?)?;
    m.add_function(wrap_pyfunction!(two_dim_report, m)?)?;
    m.add_function(wrap_pyfunction!(l2_distance, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_check, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_double_well, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_double_well, m)?)?;
    Ok(())
}
