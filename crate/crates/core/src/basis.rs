//! Balanced orthonormal bases: every basis vector has the same Rayleigh
//! quotient `<psi, S psi> = Tr(S)/N`.
//!
//! The construction sweeps over positions, rotating the pair of remaining
//! vectors with the largest and smallest quotients until each position is
//! pinned at the target. The rotation angle comes from a closed-form
//! two-dimensional solve.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SpdMatrix, Vector};

/// Vectors already within this relative distance of the target are treated
/// as balanced and excluded from the max/min search, which keeps the
/// two-dimensional solve away from a vanishing denominator.
const AT_TARGET_REL_TOL: f64 = 1e-12;

/// Discriminant values this far below zero are clamped to zero; anything
/// lower is a genuine precondition violation.
const DISCRIMINANT_CLAMP: f64 = -1e-14;

/// Orthonormal basis with all Rayleigh quotients against `S` equal to
/// `Tr(S)/N`. Vectors are the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct BalancedBasis {
    vectors: Matrix,
    target: f64,
    rotations: usize,
}

impl BalancedBasis {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// The common Rayleigh quotient `Tr(S)/N`.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// Basis vectors as the columns of an orthogonal matrix.
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Vector {
        self.vectors.column(k).clone_owned()
    }

    /// Number of two-dimensional rotations the construction performed.
    pub fn rotations(&self) -> usize {
        self.rotations
    }

    pub fn rayleigh_quotients(&self, s: &SpdMatrix) -> Vec<f64> {
        let sm = s.matrix();
        (0..self.dim())
            .map(|k| {
                let psi = self.vectors.column(k);
                (sm * psi).dot(&psi)
            })
            .collect()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        (gram - Matrix::identity(self.dim(), self.dim()))
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest deviation `|<psi_k, S psi_k> - target|` over the basis.
    pub fn balance_defect(&self, s: &SpdMatrix) -> f64 {
        self.rayleigh_quotients(s)
            .iter()
            .fold(0.0_f64, |acc, r| acc.max((r - self.target).abs()))
    }
}

/// Rotation angle `t*` in `(0, pi/2)` such that the vector
/// `cos(t*) psi_0 + sin(t*) psi_1` has Rayleigh quotient `target`, where
/// `alpha0 < target` and `alpha1 > target` are the quotients of `psi_0`
/// and `psi_1` and `beta` is the cross term `<psi_0, S psi_1>`:
///
///   tan t* = (-beta + sqrt(beta^2 - (alpha1 - target)(alpha0 - target)))
///            / (alpha1 - target)
pub fn solve_tstar(alpha0: f64, alpha1: f64, beta: f64, target: f64) -> Result<f64> {
    if !(alpha0 < target && target < alpha1) {
        return Err(Error::TargetNotBracketed { alpha0, alpha1, target });
    }
    let d1 = alpha1 - target;
    let d0 = alpha0 - target;
    let mut disc = beta * beta - d1 * d0;
    let scale = beta * beta + d1.abs() * d0.abs();
    if disc < 0.0 {
        if disc >= DISCRIMINANT_CLAMP * (1.0 + scale) {
            disc = 0.0;
        } else {
            return Err(Error::NegativeDiscriminant { value: disc });
        }
    }
    let tan_t = (-beta + disc.sqrt()) / d1;
    Ok(tan_t.atan())
}

/// Build a balanced basis starting from the canonical basis.
///
/// Deterministic: ties in the max/min selection are broken by the smallest
/// index, and no randomization is involved.
pub fn build_balanced_basis(s: &SpdMatrix) -> BalancedBasis {
    let n = s.dim();
    build_balanced_basis_from(s, Matrix::identity(n, n))
}

/// Build a balanced basis starting from the given orthonormal columns.
/// Starting from an already balanced basis performs zero rotations.
pub fn build_balanced_basis_from(s: &SpdMatrix, start: Matrix) -> BalancedBasis {
    let n = s.dim();
    assert_eq!(start.nrows(), n, "start basis dimension mismatch");
    assert_eq!(start.ncols(), n, "start basis must be square");
    let sm = s.matrix();
    let target = s.rate();
    let at_target = AT_TARGET_REL_TOL * s.trace().abs();

    let mut psi = start;
    let mut rotations = 0usize;

    for position in 0..n.saturating_sub(1) {
        let quotients: Vec<f64> = (position..n)
            .map(|k| {
                let col = psi.column(k);
                (sm * col).dot(&col)
            })
            .collect();

        // Vectors already at the target are excluded from the search.
        let mut i_max: Option<usize> = None;
        let mut i_min: Option<usize> = None;
        for (offset, &r) in quotients.iter().enumerate() {
            if (r - target).abs() <= at_target {
                continue;
            }
            if i_max.is_none_or(|im| r > quotients[im - position]) {
                i_max = Some(position + offset);
            }
            if i_min.is_none_or(|im| r < quotients[im - position]) {
                i_min = Some(position + offset);
            }
        }
        let (i_max, i_min) = match (i_max, i_min) {
            (Some(a), Some(b)) if a != b => (a, b),
            // Everything left is balanced; trace conservation guarantees
            // this is the only way the search can come up empty.
            _ => break,
        };
        let r_max = quotients[i_max - position];
        let r_min = quotients[i_min - position];
        assert!(
            r_max > target && r_min < target,
            "balance sweep lost the bracket (r_max={r_max}, r_min={r_min}, target={target}); \
             this indicates a logic bug"
        );

        // Bring the extremal pair to the working positions.
        psi.swap_columns(position, i_max);
        let min_pos = if i_min == position { i_max } else { i_min };
        psi.swap_columns(position + 1, min_pos);

        let v_max = psi.column(position).clone_owned();
        let v_min = psi.column(position + 1).clone_owned();
        let beta = (sm * &v_max).dot(&v_min);

        // cos carries the below-target vector, per the closed form; the
        // resulting vector is the same as the max-cos parametrization with
        // the complementary angle.
        let t = solve_tstar(r_min, r_max, beta, target)
            .expect("bracketing was checked above");
        let rotated = &v_min * t.cos() + &v_max * t.sin();
        psi.set_column(position, &rotated);
        rotations += 1;

        // Only the discarded-min direction needs re-orthonormalization;
        // later columns are orthogonal to the rotated plane already.
        let mut w = v_min.clone();
        let proj = rotated.dot(&w);
        w -= &rotated * proj;
        let norm = w.norm();
        assert!(norm > 1e-12, "degenerate replacement vector in balance sweep");
        psi.set_column(position + 1, &(w / norm));

        if gram_residual(&psi) > 1e-12 {
            modified_gram_schmidt(&mut psi);
        }
    }

    let basis = BalancedBasis { vectors: psi, target, rotations };
    debug_assert!(basis.orthonormality_defect() <= 1e-10);
    debug_assert!(basis.balance_defect(s) <= 1e-9 * s.trace().abs().max(1.0));
    basis
}

fn gram_residual(psi: &Matrix) -> f64 {
    let n = psi.ncols();
    (psi.transpose() * psi - Matrix::identity(n, n)).norm()
}

fn modified_gram_schmidt(psi: &mut Matrix) {
    let n = psi.ncols();
    for k in 0..n {
        let mut v = psi.column(k).clone_owned();
        for j in 0..k {
            let q = psi.column(j);
            let proj = q.dot(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        assert!(norm > 1e-12, "rank collapse during re-orthonormalization");
        psi.set_column(k, &(v / norm));
    }
}
