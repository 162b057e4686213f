//! Exact propagation of Gaussian laws under the linear SDE: the mean ODE,
//! the covariance flow, the closed-form L2(psi_inf^{-1}) distance to
//! equilibrium, and the time thresholds attached to the density bounds.

use crate::error::{Error, Result};
use crate::matrix::{expm, operator_norm, Matrix, SpdMatrix, Vector};
use crate::perturbation::OptimalPair;

/// Mean and covariance of the law of `X_t`. The covariance may be merely
/// positive semidefinite (deterministic starts).
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean: Vector,
    pub covariance: Matrix,
}

impl GaussianState {
    pub fn new(mean: Vector, covariance: Matrix) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: covariance.nrows() });
        }
        let scale = covariance.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let mut dev = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                dev = dev.max((covariance[(i, j)] - covariance[(j, i)]).abs());
            }
        }
        if dev > 1e-10 * (1.0 + scale) {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        let sym = (&covariance + covariance.transpose()) * 0.5;
        let min_eig =
            sym.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 * (1.0 + operator_norm(&sym)) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min_eig });
        }
        Ok(GaussianState { mean, covariance: sym })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Mean flow `x_t = exp(-tB) x_0`.
pub fn evolve_mean(b: &Matrix, x0: &Vector, t: f64) -> Result<Vector> {
    if t < 0.0 {
        return Err(Error::Invalid("t must be nonnegative".into()));
    }
    Ok(expm(&(-b * t))? * x0)
}

/// Covariance flow `Sigma_t = S^{-1} + exp(-tB_J)(Sigma_0 - S^{-1}) exp(-tB_J^T)`,
/// symmetrized after assembly.
pub fn evolve_covariance(b_j: &Matrix, s: &SpdMatrix, sigma0: &Matrix, t: f64) -> Result<Matrix> {
    if t < 0.0 {
        return Err(Error::Invalid("t must be nonnegative".into()));
    }
    let s_inv = s.inverse();
    let e = expm(&(-b_j * t))?;
    let sigma = &s_inv + &e * (sigma0 - &s_inv) * e.transpose();
    Ok((&sigma + sigma.transpose()) * 0.5)
}

/// Outcome of the L2 distance computation: the squared distance is finite
/// only while `2I - S^{1/2} Sigma_t S^{1/2}` stays positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L2Distance {
    Finite(f64),
    Divergent,
}

impl L2Distance {
    pub fn finite(&self) -> Option<f64> {
        match self {
            L2Distance::Finite(v) => Some(*v),
            L2Distance::Divergent => None,
        }
    }
}

/// Closed-form `|psi_t - psi_inf|_{L2(psi_inf^{-1})}` for a Gaussian state:
///
///   1 + d^2 = det(S Sigma_t)^{-1/2} det(2I - S Sigma_t)^{-1/2}
///             * exp( x_t^T (2 S^{-1} - Sigma_t)^{-1} x_t ).
///
/// The positivity test runs on the symmetric form `2I - S^{1/2} Sigma_t S^{1/2}`
/// and determinants are accumulated as log-determinants, so dimensions up
/// to a hundred do not overflow.
pub fn l2_distance_to_equilibrium(state: &GaussianState, s: &SpdMatrix) -> Result<L2Distance> {
    let n = state.dim();
    if s.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.dim() });
    }
    let sym_sigma = (&state.covariance + state.covariance.transpose()) * 0.5;
    let min_sigma = sym_sigma
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_sigma <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min_sigma });
    }

    // w = eigenvalues of S^{1/2} Sigma_t S^{1/2} (= eigenvalues of S Sigma_t)
    let s_sqrt = s.sqrt();
    let w_form = &s_sqrt * &sym_sigma * &s_sqrt;
    let w = SpdMatrix::new(w_form)
        .map_err(|_| Error::NotPositiveDefinite { min_eigenvalue: min_sigma })?
        .eigen()
        .0;
    if w.iter().any(|&wi| 2.0 - wi <= 0.0) {
        return Ok(L2Distance::Divergent);
    }

    let mut log_term = 0.0_f64;
    for &wi in &w {
        log_term -= 0.5 * wi.ln();
        log_term -= 0.5 * (2.0 - wi).ln();
    }

    // x_t^T (2 S^{-1} - Sigma_t)^{-1} x_t , the symmetric rewriting of
    // x_t^T [2(2I - S Sigma_t)^{-1} - I] Sigma_t^{-1} x_t
    let quad_form = Matrix::from(s.inverse() * 2.0 - &sym_sigma);
    let chol = nalgebra::Cholesky::new(quad_form)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: f64::NAN })?;
    let solved = chol.solve(&state.mean);
    let quad = solved.dot(&state.mean);

    let arg = log_term + quad;
    if arg > 700.0 {
        // exp would overflow; the state is astronomically far but finite
        return Ok(L2Distance::Finite(f64::MAX.sqrt()));
    }
    let d2 = arg.exp_m1().max(0.0);
    Ok(L2Distance::Finite(d2.sqrt()))
}

/// The explicit threshold formula behind [`threshold_t0`]:
/// `t0 = N/(2 Tr S) * ln[4 (1 + |S|) kappa(Q^{-1}S) (1 + |S Sigma_0|)]`.
pub fn t0_value(
    n: usize,
    trace_s: f64,
    norm_s: f64,
    kappa_q_inv_s: f64,
    norm_s_sigma0: f64,
) -> f64 {
    (n as f64 / (2.0 * trace_s))
        * (4.0 * (1.0 + norm_s) * kappa_q_inv_s * (1.0 + norm_s_sigma0)).ln()
}

/// Time after which the Gaussian density bound applies.
pub fn threshold_t0(pair: &OptimalPair, sigma0: &Matrix) -> f64 {
    let s = pair.s();
    let norm_s = operator_norm(s.matrix());
    let kappa = crate::matrix::kappa_pencil(pair.q(), s);
    let norm_s_sigma0 = operator_norm(&(s.matrix() * sigma0));
    t0_value(s.dim(), s.trace(), norm_s, kappa, norm_s_sigma0)
}

/// Squared-distance bound for a Gaussian start, valid for `t >= t0`:
/// `N 2^N exp(-2 Tr(S)(t - t0)/N) [1 + |x0|^2 exp(2 exp(-2 Tr(S)(t-t0)/N) |x0|^2)]`.
pub fn gaussian_density_bound(pair: &OptimalPair, x0_norm: f64, t0: f64, t: f64) -> f64 {
    let n = pair.dim() as f64;
    let decay = (-2.0 * pair.rate() * (t - t0)).exp();
    n * 2.0_f64.powf(n) * decay * (1.0 + x0_norm * x0_norm * (2.0 * decay * x0_norm * x0_norm).exp())
}

/// Threshold for general initial densities with a finite exponential moment.
pub fn t_alpha(pair: &OptimalPair, alpha: f64) -> f64 {
    let s = pair.s();
    let t0 = t0_value(
        s.dim(),
        s.trace(),
        operator_norm(s.matrix()),
        crate::matrix::kappa_pencil(pair.q(), s),
        0.0,
    );
    t0 + (s.dim() as f64 / (2.0 * s.trace())) * (alpha / 4.0).ln().abs()
}

/// Certificate bound `N 2^{N+1} exp(-2 Tr(S)(t - t_alpha)/N) * expMoment`
/// on the squared distance, for initial densities with
/// `integral of exp(alpha |x|^2) psi_0 = expMoment`. Valid for `t >= t_alpha`.
pub fn general_density_bound(
    pair: &OptimalPair,
    alpha: f64,
    exp_moment: f64,
    t: f64,
) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Invalid("alpha must be positive".into()));
    }
    let threshold = t_alpha(pair, alpha);
    if t < threshold {
        return Err(Error::TimeBelowThreshold { t, t_alpha: threshold });
    }
    let n = pair.dim() as f64;
    Ok(n * 2.0_f64.powf(n + 1.0) * (-2.0 * pair.rate() * (t - threshold)).exp() * exp_moment)
}
