//! Decay of the matrix semigroup `exp(-tB)`: norm-vs-time curves, rate
//! fitting, the exact `Q^{-1}`-weighted decay identity, and the closed-form
//! two-dimensional theory.

use nalgebra::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{expm, operator_norm, Matrix, Vector};
use crate::perturbation::OptimalPair;

/// Operator norms of `exp(-tB)` on a uniform time grid.
#[derive(Debug, Clone)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub matrix_label: String,
}

/// Norm curve on `steps` uniform points spanning `[0, t_max]`.
///
/// Every point is computed from scratch (no reuse of powers of a step
/// exponential) so errors do not accumulate along the grid.
pub fn decay_curve(b: &Matrix, t_max: f64, steps: usize, label: &str) -> Result<DecayCurve> {
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::Invalid("t_max must be positive".into()));
    }
    if steps < 2 {
        return Err(Error::Invalid("need at least 2 grid points".into()));
    }
    let times: Vec<f64> =
        (0..steps).map(|k| t_max * k as f64 / (steps - 1) as f64).collect();
    let norms: Vec<f64> = times
        .par_iter()
        .map(|&t| expm(&(-b * t)).map(|e| operator_norm(&e)))
        .collect::<Result<_>>()?;
    Ok(DecayCurve { times, norms, matrix_label: label.to_string() })
}

/// Default fraction of the window discarded before rate fitting; early
/// non-normal transients would otherwise pollute the slope.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Minus the fitted slope of `log |exp(-tB)|` vs `t`.
    pub rate: f64,
    pub log_prefactor: f64,
}

/// Least-squares line through `log(norm)` vs `t` after discarding the first
/// `transient_fraction` of the window, where non-normal transients live.
pub fn fit_rate(curve: &DecayCurve, transient_fraction: f64) -> Result<RateFit> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::Invalid("transient fraction must be in [0, 1)".into()));
    }
    let start = (curve.times.len() as f64 * transient_fraction).ceil() as usize;
    let window: Vec<(f64, f64)> = curve.times[start..]
        .iter()
        .zip(&curve.norms[start..])
        .map(|(&t, &n)| (t, n))
        .collect();
    if window.len() < 10 {
        return Err(Error::Invalid(format!(
            "need at least 10 samples after the transient cutoff, have {}",
            window.len()
        )));
    }
    if window.iter().any(|&(_, n)| n < 1e-300) {
        return Err(Error::Underflow);
    }
    let m = window.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, n) in &window {
        let y = n.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = m * stt - st * st;
    if denom.abs() < 1e-300 {
        return Err(Error::Invalid("degenerate time grid".into()));
    }
    let slope = (m * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / m;
    Ok(RateFit { rate: -slope, log_prefactor: intercept })
}

/// Exact identity check: `|y_t|^2_{Q^{-1}} = exp(-2 Tr(S) t / N) |y_0|^2_{Q^{-1}}`
/// along `y_t = exp(-t (S + J_tilde)) y_0`. Returns the largest relative
/// deviation over the grid.
pub fn qnorm_decay_check(pair: &OptimalPair, y0: &Vector, times: &[f64]) -> Result<f64> {
    if y0.norm() == 0.0 {
        return Err(Error::Invalid("y0 must be nonzero".into()));
    }
    let q_inv = pair.q().inverse();
    let qnorm2 = |v: &Vector| (&q_inv * v).dot(v);
    let base = qnorm2(y0);
    let rate = pair.rate();
    let mut worst = 0.0_f64;
    for &t in times {
        let y_t = expm(&(-pair.b_j_tilde() * t))? * y0;
        let dev = (qnorm2(&y_t) * (2.0 * rate * t).exp() / base - 1.0).abs();
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Closed forms for `N = 2` with `S = diag(1, lambda)` and
/// `J = [[0, a], [-a, 0]]`.
#[derive(Debug, Clone)]
pub struct TwoDimReport {
    pub lambda: f64,
    pub a: f64,
    /// `(1 - lambda)^2 / (4 lambda)`; eigenvalues leave the real axis and
    /// pin at `Re = (1 + lambda)/2` once `a^2` reaches this.
    pub a_crit_squared: f64,
    pub mu_plus: Complex<f64>,
    pub mu_minus: Complex<f64>,
    /// `|P|_F |P^{-1}|_F = 2 (lambda + 1) |a| / sqrt(4 lambda a^2 - (1-lambda)^2)`,
    /// defined only strictly above the critical strength.
    pub p_norm_product: Option<f64>,
    /// True at the eigenvalue coalescence `a^2 = a_crit^2` (for
    /// `lambda != 1`), where `B_J` has a Jordan block and `P` degenerates.
    pub jordan_case: bool,
}

/// Assemble `B_J = (I + J) S` for the two-dimensional family.
pub fn two_dim_bj(lambda: f64, a: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[1.0, a * lambda, -a, lambda])
}

pub fn two_dim_report(lambda: f64, a: f64) -> Result<TwoDimReport> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Invalid("lambda must be positive".into()));
    }
    let a_crit_squared = (1.0 - lambda).powi(2) / (4.0 * lambda);
    let disc = 4.0 * lambda * a * a - (1.0 - lambda).powi(2);
    let half_trace = (lambda + 1.0) / 2.0;
    let jordan_case =
        (a * a - a_crit_squared).abs() <= 1e-10 * (a * a).max(1.0) && (1.0 - lambda).abs() > 1e-14;

    let (mu_plus, mu_minus, p_norm_product) = if disc >= 0.0 {
        let root = disc.sqrt() / 2.0;
        let product = if disc > 0.0 && !jordan_case {
            Some(2.0 * (lambda + 1.0) * a.abs() / disc.sqrt())
        } else {
            None
        };
        (
            Complex::new(half_trace, root),
            Complex::new(half_trace, -root),
            product,
        )
    } else {
        let root = (-disc).sqrt() / 2.0;
        (
            Complex::new(half_trace + root, 0.0),
            Complex::new(half_trace - root, 0.0),
            None,
        )
    };

    Ok(TwoDimReport { lambda, a, a_crit_squared, mu_plus, mu_minus, p_norm_product, jordan_case })
}
