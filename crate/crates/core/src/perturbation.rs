//! Construction of the optimal antisymmetric drift perturbation.
//!
//! Given a balanced basis for `S` and a ladder of distinct positive
//! eigenvalues for the companion matrix `Q`, the perturbation `J_tilde` is
//! pinned entrywise in the basis frame by
//!
//!   <psi_j, Jt psi_k> = -((l_k + l_j)/(l_k - l_j)) <psi_j, S psi_k>,
//!
//! which makes every eigenvalue of `S + J_tilde` sit on the vertical line
//! `Re = Tr(S)/N`. The pair `(J_tilde, Q)` satisfies the Lyapunov-type
//! relation `Jt Q - Q Jt + QS + SQ = (2 Tr(S)/N) Q` that drives all the
//! decay estimates.

use crate::basis::{build_balanced_basis, BalancedBasis};
use crate::error::{Error, Result};
use crate::matrix::{
    eig_general, frobenius_norm, kappa_pencil, operator_norm, AntisymMatrix, Matrix, SpdMatrix,
};

/// Strictly positive, pairwise distinct eigenvalues for `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenLadder {
    values: Vec<f64>,
}

impl EigenLadder {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("empty eigenvalue ladder".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Invalid("ladder values must be positive and finite".into()));
        }
        let max = values.iter().cloned().fold(0.0_f64, f64::max);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for pair in sorted.windows(2) {
            let gap = pair[1] - pair[0];
            if gap <= 1e-12 * max {
                return Err(Error::DegenerateLadder { gap });
            }
        }
        Ok(EigenLadder { values })
    }

    /// The ladder `lambda_k = N + k`, giving `kappa(Q) = 2N/(N+1) <= 2`.
    pub fn default_ladder(n: usize) -> Self {
        assert!(n >= 1);
        EigenLadder { values: (1..=n).map(|k| (n + k) as f64).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0_f64, f64::max)
    }

    pub fn kappa(&self) -> f64 {
        self.max() / self.min()
    }

    /// Smallest gap between distinct ladder values.
    pub fn min_gap(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
    }

    /// Largest gap, i.e. `max - min`.
    pub fn max_gap(&self) -> f64 {
        self.max() - self.min()
    }
}

/// An optimal pair `(J_tilde, Q)` together with the derived drift matrices.
#[derive(Debug, Clone)]
pub struct OptimalPair {
    s: SpdMatrix,
    basis: BalancedBasis,
    ladder: EigenLadder,
    j_tilde: AntisymMatrix,
    q: SpdMatrix,
    j: AntisymMatrix,
    b_j: Matrix,
    b_j_tilde: Matrix,
    rate: f64,
}

impl OptimalPair {
    pub fn s(&self) -> &SpdMatrix {
        &self.s
    }

    pub fn basis(&self) -> &BalancedBasis {
        &self.basis
    }

    pub fn ladder(&self) -> &EigenLadder {
        &self.ladder
    }

    pub fn j_tilde(&self) -> &AntisymMatrix {
        &self.j_tilde
    }

    pub fn q(&self) -> &SpdMatrix {
        &self.q
    }

    pub fn j(&self) -> &AntisymMatrix {
        &self.j
    }

    /// Drift matrix `B_J = (I + J) S` in the original coordinates.
    pub fn b_j(&self) -> &Matrix {
        &self.b_j
    }

    /// Drift matrix `S + J_tilde` in the symmetrized coordinates.
    pub fn b_j_tilde(&self) -> &Matrix {
        &self.b_j_tilde
    }

    /// The achieved spectral gap `Tr(S)/N`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// Frobenius norm of `Jt Q - Q Jt + QS + SQ - (2 Tr(S)/N) Q`.
    pub fn lyapunov_residual(&self) -> f64 {
        lyapunov_residual(self.j_tilde.matrix(), self.q.matrix(), self.s.matrix(), self.rate)
    }
}

pub fn lyapunov_residual(j_tilde: &Matrix, q: &Matrix, s: &Matrix, rate: f64) -> f64 {
    let residual = j_tilde * q - q * j_tilde + q * s + s * q - q * (2.0 * rate);
    frobenius_norm(&residual)
}

/// Assemble `J_tilde` from a balanced basis and a ladder.
///
/// Entries are built in the basis frame (strictly upper triangle, reflected
/// with a sign) so antisymmetry holds exactly before the change of frame.
pub fn build_jtilde(
    basis: &BalancedBasis,
    ladder: &EigenLadder,
    s: &SpdMatrix,
) -> Result<AntisymMatrix> {
    let n = s.dim();
    if basis.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: basis.dim() });
    }
    if ladder.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ladder.len() });
    }
    let max = ladder.max();
    let gap = ladder.min_gap();
    if gap <= 1e-12 * max {
        return Err(Error::DegenerateLadder { gap });
    }

    let psi = basis.vectors();
    let s_frame = psi.transpose() * s.matrix() * psi;
    let lambda = ladder.values();
    let mut frame = Matrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let coeff = -(lambda[k] + lambda[j]) / (lambda[k] - lambda[j]);
            let value = coeff * s_frame[(j, k)];
            frame[(j, k)] = value;
            frame[(k, j)] = -value;
        }
    }
    Ok(AntisymMatrix::enforce(psi * frame * psi.transpose()))
}

/// The triangular limit `J_infinity`: coefficients `-sign(k - j)` instead of
/// the ladder ratio. `S + J_tilde` is then triangular in the basis frame
/// with the whole spectrum collapsed onto `Tr(S)/N`.
#[derive(Debug, Clone)]
pub struct TriangularPerturbation {
    pub j_tilde: AntisymMatrix,
    pub j: AntisymMatrix,
    pub b_j: Matrix,
    pub b_j_tilde: Matrix,
    pub rate: f64,
}

/// Build the triangular-limit perturbation. `B_J` may be non-diagonalizable
/// (Jordan blocks), so no decay-prefactor guarantee is attached; the norm
/// decay only obeys a `C (1 + t) exp(-rate t)` envelope.
pub fn build_triangular(s: &SpdMatrix) -> TriangularPerturbation {
    let n = s.dim();
    let basis = build_balanced_basis(s);
    let psi = basis.vectors();
    let s_frame = psi.transpose() * s.matrix() * psi;
    let mut frame = Matrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            // sign(k - j) = 1 above the diagonal
            frame[(j, k)] = -s_frame[(j, k)];
            frame[(k, j)] = s_frame[(j, k)];
        }
    }
    let j_tilde = AntisymMatrix::enforce(psi * frame * psi.transpose());
    let (j, b_j, b_j_tilde) = derived_matrices(s, &j_tilde);
    TriangularPerturbation { j_tilde, j, b_j, b_j_tilde, rate: s.rate() }
}

fn derived_matrices(s: &SpdMatrix, j_tilde: &AntisymMatrix) -> (AntisymMatrix, Matrix, Matrix) {
    let n = s.dim();
    let s_inv_sqrt = s.inv_sqrt();
    // Conjugation leaks a symmetric rounding part that would shift the
    // real parts of the spectrum; strip it.
    let j = AntisymMatrix::enforce(&s_inv_sqrt * j_tilde.matrix() * &s_inv_sqrt);
    let b_j = (Matrix::identity(n, n) + j.matrix()) * s.matrix();
    let b_j_tilde = s.matrix() + j_tilde.matrix();
    (j, b_j, b_j_tilde)
}

/// Build the full optimal pair for `S`, using the default ladder
/// `lambda_k = N + k` unless one is supplied.
pub fn build_optimal_pair(s: &SpdMatrix, ladder: Option<EigenLadder>) -> Result<OptimalPair> {
    let n = s.dim();
    let ladder = match ladder {
        Some(l) => {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: l.len() });
            }
            l
        }
        None => EigenLadder::default_ladder(n),
    };
    let basis = build_balanced_basis(s);
    let j_tilde = build_jtilde(&basis, &ladder, s)?;

    let psi = basis.vectors();
    let q_raw = psi
        * Matrix::from_diagonal(&crate::matrix::Vector::from_row_slice(ladder.values()))
        * psi.transpose();
    let q = SpdMatrix::new(q_raw)?;

    let rate = s.rate();
    let residual = lyapunov_residual(j_tilde.matrix(), q.matrix(), s.matrix(), rate);
    let bound = 1e-9 * frobenius_norm(q.matrix()) * frobenius_norm(s.matrix());
    if residual > bound {
        return Err(Error::Invalid(format!(
            "Lyapunov residual {residual:.3e} exceeds {bound:.3e}; construction failed"
        )));
    }

    let (j, b_j, b_j_tilde) = derived_matrices(s, &j_tilde);
    Ok(OptimalPair { s: s.clone(), basis, ladder, j_tilde, q, j, b_j, b_j_tilde, rate })
}

/// Report on whether `b(x) = -A x` leaves the Gaussian measure invariant,
/// i.e. whether `A = J S` for some antisymmetric `J`.
#[derive(Debug, Clone)]
pub struct DivergenceFreeReport {
    pub divergence_free: bool,
    /// `|Tr(A)|`, scaled.
    pub trace_residual: f64,
    /// Deviation of `A S^{-1}` from antisymmetry, scaled.
    pub antisym_residual: f64,
}

pub fn check_divergence_free(a: &Matrix, s: &SpdMatrix) -> DivergenceFreeReport {
    let scale = 1.0 + frobenius_norm(a);
    let trace_residual = a.trace().abs() / scale;
    let k = a * s.inverse();
    let antisym_residual = frobenius_norm(&(&k + k.transpose())) / (1.0 + frobenius_norm(&k));
    let tol = 1e-9;
    DivergenceFreeReport {
        divergence_free: trace_residual <= tol && antisym_residual <= tol,
        trace_residual,
        antisym_residual,
    }
}

/// Prefactor constants attached to an optimal pair.
#[derive(Debug, Clone)]
pub struct PrefactorConstants {
    /// `kappa(Q)^{1/2}`, the ODE semigroup prefactor.
    pub cn1: f64,
    /// `2^5 N kappa(Q)^{1/2} (max sigma(Q) / min gap)^2`, the PDE prefactor.
    pub cn2: f64,
    pub kappa_q: f64,
    pub kappa_q_inv_s: f64,
    /// Operator norm of `J_tilde`.
    pub j_tilde_norm: f64,
    /// `sqrt(2) min sigma(Q) min sigma(S) / max gap sigma(Q)`.
    pub lower_bound_j: f64,
    /// True when `S` is (numerically) a multiple of the identity; the lower
    /// bound on `|J_tilde|` is vacuous there since `J_tilde = 0`.
    pub scalar_case: bool,
    pub lower_bound_holds: bool,
    /// `|J_tilde|_F <= 4 N |S|_F`, guaranteed for the default ladder.
    pub frobenius_bound_holds: bool,
}

pub fn prefactor_constants(pair: &OptimalPair) -> PrefactorConstants {
    let n = pair.dim() as f64;
    let ladder = pair.ladder();
    let kappa_q = ladder.kappa();
    let cn1 = kappa_q.sqrt();
    let min_gap = ladder.min_gap();
    let cn2 = 32.0 * n * kappa_q.sqrt() * (ladder.max() / min_gap).powi(2);
    let kappa_q_inv_s = kappa_pencil(pair.q(), pair.s());

    let j_tilde_norm = operator_norm(pair.j_tilde().matrix());
    let min_sigma_s = pair.s().min_eigenvalue();
    let lower_bound_j = 2.0_f64.sqrt() * ladder.min() * min_sigma_s / ladder.max_gap();

    let s_m = pair.s().matrix();
    let dev_from_scalar =
        frobenius_norm(&(s_m - Matrix::identity(pair.dim(), pair.dim()) * pair.rate()));
    let scalar_case = dev_from_scalar <= 1e-12 * frobenius_norm(s_m);

    PrefactorConstants {
        cn1,
        cn2,
        kappa_q,
        kappa_q_inv_s,
        j_tilde_norm,
        lower_bound_j,
        scalar_case,
        lower_bound_holds: scalar_case || j_tilde_norm >= lower_bound_j * (1.0 - 1e-12),
        frobenius_bound_holds: frobenius_norm(pair.j_tilde().matrix())
            <= 4.0 * n * frobenius_norm(s_m) * (1.0 + 1e-12),
    }
}

/// Smallest real part of the spectrum of `B_J`, computed through the
/// general eigensolver (independent of the construction).
pub fn min_re_spectrum(pair: &OptimalPair) -> Result<f64> {
    Ok(eig_general(pair.b_j())?.min_re())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::matrix::match_spectra;

    #[test]
    fn default_ladder_values() {
        let l = EigenLadder::default_ladder(2);
        assert_eq!(l.values(), &[3.0, 4.0]);
        let l1 = EigenLadder::default_ladder(1);
        assert_eq!(l1.values(), &[2.0]);
        let l100 = EigenLadder::default_ladder(100);
        assert_relative_eq!(l100.kappa(), 200.0 / 101.0, max_relative = 1e-15);
    }

    #[test]
    fn ladder_rejects_duplicates() {
        assert!(matches!(
            EigenLadder::new(vec![1.0, 1.0 + 1e-15]),
            Err(Error::DegenerateLadder { .. })
        ));
        assert!(EigenLadder::new(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn one_dimensional_pair_is_trivial() {
        let s = SpdMatrix::from_diagonal(&[0.7]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        assert_eq!(pair.ladder().values(), &[2.0]);
        assert_eq!(pair.j_tilde().matrix()[(0, 0)], 0.0);
        assert_eq!(pair.b_j()[(0, 0)], 0.7);
    }

    #[test]
    fn identity_s_pair_is_reversible() {
        let s = SpdMatrix::identity(3);
        let pair = build_optimal_pair(&s, None).unwrap();
        assert_eq!(frobenius_norm(pair.j().matrix()), 0.0);
        assert_eq!(pair.b_j(), &Matrix::identity(3, 3));
        assert_eq!(pair.rate(), 1.0);
    }

    #[test]
    fn scalar_s_gives_zero_jtilde() {
        let s = SpdMatrix::from_diagonal(&[2.0, 2.0, 2.0]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        assert_eq!(frobenius_norm(pair.j_tilde().matrix()), 0.0);
        assert_eq!(frobenius_norm(pair.j().matrix()), 0.0);
        assert_relative_eq!(pair.rate(), 2.0, max_relative = 1e-15);
    }

    /// Oracle: the 2D relation (l2 - l1)(-2 a sqrt(lam)) = (l2 + l1)(1 - lam)
    /// pins |a| = 4.5 / (2 sqrt(0.1)) for the ladder (2, 3).
    #[test]
    fn two_dim_ladder_23_reproduces_a_7115() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.1]).unwrap();
        let basis = build_balanced_basis(&s);
        let ladder = EigenLadder::new(vec![2.0, 3.0]).unwrap();
        let jt = build_jtilde(&basis, &ladder, &s).unwrap();
        assert_relative_eq!(jt.matrix()[(0, 1)].abs(), 2.25, max_relative = 1e-12);

        let pair = build_optimal_pair(&s, Some(ladder)).unwrap();
        let a = pair.j().matrix()[(0, 1)].abs();
        assert_relative_eq!(a, 2.25 / 0.1_f64.sqrt(), max_relative = 1e-12);
        assert!((a - 7.115).abs() < 1e-3);
    }

    #[test]
    fn optimal_pair_places_spectrum_on_vertical_line() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.1, 0.01]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let spec = eig_general(pair.b_j()).unwrap();
        for ev in &spec.eigenvalues {
            assert!((ev.re - 0.37).abs() <= 1e-9, "Re {} != 0.37", ev.re);
        }
        assert_relative_eq!(min_re_spectrum(&pair).unwrap(), 0.37, epsilon = 1e-9);
    }

    #[test]
    fn lyapunov_residual_is_small_and_sign_flip_pairs_with_q_inverse() {
        let s = SpdMatrix::from_diagonal(&[2.0, 0.5, 0.2, 1.3]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let bound = 1e-9 * frobenius_norm(pair.q().matrix()) * frobenius_norm(s.matrix());
        assert!(pair.lyapunov_residual() <= bound);

        let q_inv = pair.q().inverse();
        let minus_jt = -pair.j_tilde().matrix();
        let res = lyapunov_residual(&minus_jt, &q_inv, s.matrix(), pair.rate());
        assert!(res <= 1e-9 * frobenius_norm(&q_inv) * frobenius_norm(s.matrix()));
    }

    #[test]
    fn cond_j_relation_holds_entrywise() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.4, 0.2]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let psi = pair.basis().vectors();
        let s_frame = psi.transpose() * s.matrix() * psi;
        let j_frame = psi.transpose() * pair.j_tilde().matrix() * psi;
        let lambda = pair.ladder().values();
        for j in 0..3 {
            for k in 0..3 {
                if j == k {
                    continue;
                }
                let lhs = (lambda[j] - lambda[k]) * j_frame[(j, k)];
                let rhs = (lambda[k] + lambda[j]) * s_frame[(j, k)];
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())),
                    "({j},{k}): {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn sigma_bj_equals_sigma_bjtilde() {
        let s = SpdMatrix::from_diagonal(&[1.7, 0.3, 0.9]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let a = eig_general(pair.b_j()).unwrap().eigenvalues;
        let b = eig_general(pair.b_j_tilde()).unwrap().eigenvalues;
        let scale = operator_norm(pair.b_j());
        assert!(match_spectra(&a, &b) <= 1e-7 * (1.0 + scale));
    }

    #[test]
    fn triangular_limit_collapses_spectrum() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.1, 0.01]).unwrap();
        let tri = build_triangular(&s);
        // In the basis frame, S + J_infinity is exactly triangular with the
        // rate on the diagonal.
        let basis = build_balanced_basis(&s);
        let psi = basis.vectors();
        let frame = psi.transpose() * &tri.b_j_tilde * psi;
        for j in 0..3 {
            assert!((frame[(j, j)] - 0.37).abs() <= 1e-12);
            for k in (j + 1)..3 {
                assert!(frame[(j, k)].abs() <= 1e-12, "upper entry ({j},{k})");
            }
        }
        // Computed eigenvalues of a size-3 Jordan block scatter like
        // eps^(1/3) around the collapsed point.
        let spec = eig_general(&tri.b_j_tilde).unwrap();
        for ev in &spec.eigenvalues {
            assert!((ev.re - 0.37).abs() <= 1e-4);
            assert!(ev.im.abs() <= 1e-4);
        }
    }

    #[test]
    fn divergence_free_detects_valid_and_invalid_drifts() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.25]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let a = pair.j().matrix() * s.matrix();
        assert!(check_divergence_free(&a, &s).divergence_free);
        assert!(!check_divergence_free(s.matrix(), &s).divergence_free);
        assert!(check_divergence_free(&Matrix::zeros(2, 2), &s).divergence_free);
    }

    #[test]
    fn prefactors_default_ladder() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.1, 0.01]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let c = prefactor_constants(&pair);
        assert_relative_eq!(c.kappa_q, 6.0 / 4.0, max_relative = 1e-12);
        assert!(c.cn1 < 2.0_f64.sqrt());
        // plug-in evaluation: 2^5 * 3 * sqrt(3/2) * (6/1)^2
        let expected_cn2 = 32.0 * 3.0 * (1.5_f64).sqrt() * 36.0;
        assert_relative_eq!(c.cn2, expected_cn2, max_relative = 1e-12);
        assert!(c.lower_bound_holds);
        assert!(c.frobenius_bound_holds);
        assert!(!c.scalar_case);
    }

    #[test]
    fn prefactors_flag_scalar_case() {
        let s = SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        let pair = build_optimal_pair(&s, None).unwrap();
        let c = prefactor_constants(&pair);
        assert!(c.scalar_case);
        assert_eq!(c.j_tilde_norm, 0.0);
        assert!(c.lower_bound_holds);
    }
}
