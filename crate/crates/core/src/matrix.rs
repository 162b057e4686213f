//! Dense matrix types and decompositions shared by every other module:
//! SPD and antisymmetric matrix newtypes, the nonsymmetric eigensolver,
//! the matrix exponential, and the norms / condition numbers.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance for eigenvalue-sum vs trace consistency checks.
pub const SPEC_TOL: f64 = 1e-8;

/// Absolute symmetry tolerance scaled by the largest entry.
pub fn sym_tol(max_abs: f64) -> f64 {
    1e-10 * (1.0 + max_abs)
}

fn max_abs_entry(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Symmetric positive definite matrix (the precision `S`, the companion `Q`).
///
/// Construction validates symmetry up to [`sym_tol`], symmetrizes, and
/// checks that the smallest eigenvalue is strictly positive. The wrapped
/// matrix is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: Matrix,
}

impl SpdMatrix {
    /// Validate a square matrix as SPD (`validate_spd`).
    pub fn new(candidate: Matrix) -> Result<Self> {
        if candidate.nrows() != candidate.ncols() || candidate.nrows() == 0 {
            return Err(Error::Invalid(format!(
                "expected a nonempty square matrix, got {}x{}",
                candidate.nrows(),
                candidate.ncols()
            )));
        }
        if !all_finite(&candidate) {
            return Err(Error::NonFiniteInput);
        }
        let tol = sym_tol(max_abs_entry(&candidate));
        let mut deviation = 0.0_f64;
        for i in 0..candidate.nrows() {
            for j in 0..i {
                deviation = deviation.max((candidate[(i, j)] - candidate[(j, i)]).abs());
            }
        }
        if deviation > tol {
            return Err(Error::NotSymmetric { deviation });
        }
        let sym = (&candidate + candidate.transpose()) * 0.5;
        let eigs = sym.clone().symmetric_eigen().eigenvalues;
        let min_eigenvalue = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eigenvalue <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
        Ok(SpdMatrix { m: sym })
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_row_slice(values)))
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix { m: Matrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// The optimal spectral gap `Tr(S)/N`.
    pub fn rate(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    /// Eigenvalues (ascending) and matching orthonormal eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, Matrix) {
        let se = self.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let vectors = Matrix::from_columns(
            &order.iter().map(|&k| se.eigenvectors.column(k).clone_owned()).collect::<Vec<_>>(),
        );
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigen().0.last().unwrap()
    }

    /// `kappa(S)` = max eigenvalue / min eigenvalue.
    pub fn condition_number(&self) -> f64 {
        let eigs = self.eigen().0;
        eigs[eigs.len() - 1] / eigs[0]
    }

    fn power(&self, exponent: f64) -> Matrix {
        let (values, vectors) = self.eigen();
        let d = Matrix::from_diagonal(&Vector::from_iterator(
            values.len(),
            values.iter().map(|v| v.powf(exponent)),
        ));
        &vectors * d * vectors.transpose()
    }

    pub fn sqrt(&self) -> Matrix {
        self.power(0.5)
    }

    pub fn inv_sqrt(&self) -> Matrix {
        self.power(-0.5)
    }

    pub fn inverse(&self) -> Matrix {
        self.power(-1.0)
    }
}

/// Real antisymmetric matrix (`J`, `J_tilde`).
///
/// Construction validates antisymmetry up to [`sym_tol`] and then enforces
/// it exactly: the stored matrix is `(A - A^T)/2` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymMatrix {
    m: Matrix,
}

impl AntisymMatrix {
    pub fn new(candidate: Matrix) -> Result<Self> {
        if candidate.nrows() != candidate.ncols() || candidate.nrows() == 0 {
            return Err(Error::Invalid(format!(
                "expected a nonempty square matrix, got {}x{}",
                candidate.nrows(),
                candidate.ncols()
            )));
        }
        if !all_finite(&candidate) {
            return Err(Error::NonFiniteInput);
        }
        let tol = sym_tol(max_abs_entry(&candidate));
        let mut deviation = 0.0_f64;
        for i in 0..candidate.nrows() {
            for j in 0..=i {
                deviation = deviation.max((candidate[(i, j)] + candidate[(j, i)]).abs());
            }
        }
        if deviation > tol {
            return Err(Error::NotSymmetric { deviation });
        }
        let mut anti = (&candidate - candidate.transpose()) * 0.5;
        for i in 0..anti.nrows() {
            anti[(i, i)] = 0.0;
        }
        Ok(AntisymMatrix { m: anti })
    }

    pub fn zero(n: usize) -> Self {
        AntisymMatrix { m: Matrix::zeros(n, n) }
    }

    /// Antisymmetrize without a tolerance check, for matrices that are
    /// antisymmetric by algebra and only carry rounding noise.
    pub(crate) fn enforce(candidate: Matrix) -> Self {
        let mut anti = (&candidate - candidate.transpose()) * 0.5;
        for i in 0..anti.nrows() {
            anti[(i, i)] = 0.0;
        }
        AntisymMatrix { m: anti }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }
}

/// Eigenvalues of a real square matrix, with optional eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex<f64>>,
    pub eigenvectors: Option<Vec<DVector<Complex<f64>>>>,
}

impl Spectrum {
    pub fn min_re(&self) -> f64 {
        self.eigenvalues.iter().map(|c| c.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_re(&self) -> f64 {
        self.eigenvalues.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// All eigenvalues of a real (generally nonsymmetric) matrix via the real
/// Schur decomposition. Complex eigenvalues come in exactly conjugate pairs.
pub fn eig_general(m: &Matrix) -> Result<Spectrum> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Invalid(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::NonFiniteInput);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let values = schur.complex_eigenvalues();
    let eigenvalues: Vec<Complex<f64>> = values.iter().cloned().collect();

    let sum: Complex<f64> = eigenvalues.iter().sum();
    let trace = m.trace();
    let scale = 1.0 + trace.abs() + m.norm();
    let deviation = (sum - Complex::new(trace, 0.0)).norm() / scale;
    if deviation > SPEC_TOL {
        return Err(Error::SpectrumInconsistent { deviation });
    }
    Ok(Spectrum { eigenvalues, eigenvectors: None })
}

/// Like [`eig_general`] but also computes eigenvectors by shifted inverse
/// iteration. Intended for simple (well-separated) eigenvalues.
pub fn eig_general_with_vectors(m: &Matrix) -> Result<Spectrum> {
    let mut spectrum = eig_general(m)?;
    let n = m.nrows();
    let mc = m.map(|v| Complex::new(v, 0.0));
    let mut vectors = Vec::with_capacity(n);
    for lambda in &spectrum.eigenvalues {
        // Shift slightly off the eigenvalue so the system stays solvable.
        let shift = lambda + Complex::new(1e-10 * (1.0 + lambda.norm()), 0.0);
        let shifted = &mc - DMatrix::from_diagonal_element(n, n, shift);
        let lu = shifted.lu();
        let mut v = DVector::<Complex<f64>>::from_element(n, Complex::new(1.0, 0.0));
        for k in 0..n {
            v[k] = Complex::new(1.0 + 0.1 * k as f64, 0.05 * k as f64);
        }
        v /= Complex::new(v.norm(), 0.0);
        for _ in 0..3 {
            if let Some(next) = lu.solve(&v) {
                let norm = next.norm();
                if norm.is_finite() && norm > 0.0 {
                    v = next / Complex::new(norm, 0.0);
                }
            }
        }
        vectors.push(v);
    }
    spectrum.eigenvectors = Some(vectors);
    Ok(spectrum)
}

/// Matrix exponential by scaling-and-squaring with a Pade approximant.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Invalid(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::NonFiniteInput);
    }
    let e = m.exp();
    if !all_finite(&e) {
        return Err(Error::Overflow);
    }
    Ok(e)
}

/// Operator norm (largest singular value).
pub fn operator_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = m.clone().singular_values();
    sv.iter().cloned().fold(0.0_f64, f64::max)
}

/// Frobenius norm.
pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.norm()
}

/// `kappa(S)` for an SPD matrix.
pub fn condition_number(s: &SpdMatrix) -> f64 {
    s.condition_number()
}

/// Condition number of `Q^{-1} S` understood through the SPD pencil:
/// the ratio of the extreme (real, positive) eigenvalues of
/// `Q^{-1/2} S Q^{-1/2}`, which is what the semigroup estimates use via
/// `|S^{-1/2} Q^{1/2}| |Q^{-1/2} S^{1/2}|`.
pub fn kappa_pencil(q: &SpdMatrix, s: &SpdMatrix) -> f64 {
    let qis = q.inv_sqrt();
    let form = SpdMatrix::new(&qis * s.matrix() * &qis)
        .expect("Q^{-1/2} S Q^{-1/2} is SPD for SPD Q, S");
    form.condition_number()
}

/// Greedy nearest-neighbour pairing of two complex eigenvalue multisets.
/// Returns the largest pairing distance; `infinity` on length mismatch.
pub fn match_spectra(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let mut best = f64::INFINITY;
        let mut best_idx = usize::MAX;
        for (k, y) in b.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (x - y).norm();
            if d < best {
                best = d;
                best_idx = k;
            }
        }
        if best_idx == usize::MAX {
            return f64::INFINITY;
        }
        used[best_idx] = true;
        worst = worst.max(best);
    }
    worst
}

/// Dirichlet (truncated) tridiagonal Laplacian: 2 on the diagonal, -1 off.
///
/// The truncated variant is the SPD reading consistent with the reported
/// smallest eigenvalue `2 - 2 cos(pi/(n+1))`; the periodic variant has a
/// zero eigenvalue and is not positive definite.
pub fn make_laplacian(n: usize) -> SpdMatrix {
    assert!(n >= 2, "laplacian needs n >= 2");
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0;
        if i + 1 < n {
            m[(i, i + 1)] = -1.0;
            m[(i + 1, i)] = -1.0;
        }
    }
    SpdMatrix::new(m).expect("tridiagonal (2,-1) matrix is SPD")
}
