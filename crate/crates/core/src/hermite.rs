//! Finite-dimensional Wick quantization on tensor Hermite functions.
//!
//! The generator `a^{*,T} (S - J_tilde) a` preserves total degree, so its
//! matrix on the basis of Hermite functions of degree at most `K` is exact
//! (no truncation leakage) and block diagonal over the degree blocks. The
//! block spectra are integer combinations of the eigenvalues of
//! `S + J_tilde`, which this module verifies numerically.

use std::collections::HashMap;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::matrix::{eig_general, match_spectra, AntisymMatrix, Matrix, SpdMatrix};
use crate::perturbation::OptimalPair;

/// Multi-index basis of Hermite functions with total degree `<= max_degree`,
/// sorted by degree and then lexicographically.
#[derive(Debug, Clone)]
pub struct HermiteTruncation {
    dim: usize,
    max_degree: usize,
    indices: Vec<Vec<u32>>,
    block_offsets: Vec<usize>,
    lookup: HashMap<Vec<u32>, usize>,
}

fn multi_indices_of_degree(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(slots: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            let mut idx = prefix.clone();
            idx.push(remaining);
            out.push(idx);
            return;
        }
        for v in 0..=remaining {
            prefix.push(v);
            rec(slots - 1, remaining - v, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, degree as u32, &mut Vec::new(), &mut out);
    out.sort();
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

impl HermiteTruncation {
    pub fn new(dim: usize, max_degree: usize) -> Self {
        assert!(dim >= 1 && max_degree >= 1);
        let mut indices = Vec::new();
        let mut block_offsets = vec![0usize];
        for k in 0..=max_degree {
            let block = multi_indices_of_degree(dim, k);
            debug_assert_eq!(block.len(), binomial(dim + k - 1, k).max(1));
            indices.extend(block);
            block_offsets.push(indices.len());
        }
        let lookup =
            indices.iter().enumerate().map(|(pos, idx)| (idx.clone(), pos)).collect();
        HermiteTruncation { dim, max_degree, indices, block_offsets, lookup }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn total_dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn block_dim(&self, k: usize) -> usize {
        self.block_offsets[k + 1] - self.block_offsets[k]
    }

    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.block_offsets[k]..self.block_offsets[k + 1]
    }

    pub fn position(&self, index: &[u32]) -> Option<usize> {
        self.lookup.get(index).copied()
    }
}

/// Matrices of the annihilation operators `a_j` on the truncated basis
/// (`a_j phi_n = sqrt(n_j) phi_{n - e_j}`). The creation operators are the
/// transposes, truncated at the top degree.
pub fn ladder_matrices(trunc: &HermiteTruncation) -> Vec<Matrix> {
    let m = trunc.total_dim();
    let mut out = Vec::with_capacity(trunc.dim());
    for j in 0..trunc.dim() {
        let mut a = Matrix::zeros(m, m);
        for (col, idx) in trunc.indices().iter().enumerate() {
            if idx[j] == 0 {
                continue;
            }
            let mut lower = idx.clone();
            lower[j] -= 1;
            let row = trunc.position(&lower).expect("lowered index stays in truncation");
            a[(row, col)] = (idx[j] as f64).sqrt();
        }
        out.push(a);
    }
    out
}

/// Matrix of `a^{*,T} C a` for a coefficient matrix `C`, assembled entry by
/// entry: the operator is degree preserving, so off-block entries are
/// exactly zero.
fn wick_quadratic_matrix(trunc: &HermiteTruncation, c: &Matrix) -> Matrix {
    let m = trunc.total_dim();
    let n = trunc.dim();
    let mut out = Matrix::zeros(m, m);
    for (col, idx) in trunc.indices().iter().enumerate() {
        for j in 0..n {
            if idx[j] == 0 {
                continue;
            }
            let sqrt_nj = (idx[j] as f64).sqrt();
            for i in 0..n {
                let cij = c[(i, j)];
                if cij == 0.0 {
                    continue;
                }
                // a_i^* a_j phi_idx = sqrt(n_j) sqrt(n_i - delta_ij + 1) phi_{idx - e_j + e_i}
                let mut target = idx.clone();
                target[j] -= 1;
                let raise = target[i] + 1;
                target[i] = raise;
                let row = trunc.position(&target).expect("degree is preserved");
                out[(row, col)] += cij * sqrt_nj * (raise as f64).sqrt();
            }
        }
    }
    out
}

/// Matrix of the (sign-flipped) generator `a^{*,T} (S - J_tilde) a`.
pub fn generator_matrix(
    trunc: &HermiteTruncation,
    s: &SpdMatrix,
    j_tilde: &AntisymMatrix,
) -> Result<Matrix> {
    if s.dim() != trunc.dim() || j_tilde.dim() != trunc.dim() {
        return Err(Error::DimensionMismatch { expected: trunc.dim(), got: s.dim() });
    }
    Ok(wick_quadratic_matrix(trunc, &(s.matrix() - j_tilde.matrix())))
}

/// Matrix of `C_Q = a^{*,T} Q a`.
pub fn cq_matrix(trunc: &HermiteTruncation, q: &SpdMatrix) -> Result<Matrix> {
    if q.dim() != trunc.dim() {
        return Err(Error::DimensionMismatch { expected: trunc.dim(), got: q.dim() });
    }
    Ok(wick_quadratic_matrix(trunc, q.matrix()))
}

/// Comparison of each degree-block spectrum against the integer
/// combinations of `sigma(S + J_tilde)`.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub max_mismatch: f64,
    pub per_block: Vec<f64>,
}

/// Verify that block `k` of the generator has spectrum
/// `{ sum_i c_i mu_i : |c| = k }` where `mu` are the eigenvalues of
/// `S + J_tilde`, with one combination per multi-index `c`.
pub fn verify_spectrum(
    trunc: &HermiteTruncation,
    s: &SpdMatrix,
    j_tilde: &AntisymMatrix,
) -> Result<SpectrumReport> {
    if trunc.max_degree() > 12 {
        return Err(Error::Invalid(
            "degree truncations beyond K = 12 are combinatorially unreasonable".into(),
        ));
    }
    let generator = generator_matrix(trunc, s, j_tilde)?;
    let mu = eig_general(&(s.matrix() + j_tilde.matrix()))?.eigenvalues;

    let mut per_block = Vec::with_capacity(trunc.max_degree() + 1);
    let mut max_mismatch = 0.0_f64;
    for k in 0..=trunc.max_degree() {
        let range = trunc.block_range(k);
        let block = generator.view((range.start, range.start), (range.len(), range.len()));
        let computed = if k == 0 {
            vec![Complex::new(block[(0, 0)], 0.0)]
        } else {
            eig_general(&block.clone_owned())?.eigenvalues
        };
        let expected: Vec<Complex<f64>> = trunc.indices()[range]
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&mu)
                    .map(|(&ci, m)| m * ci as f64)
                    .fold(Complex::new(0.0, 0.0), |acc, v| acc + v)
            })
            .collect();
        let mismatch = match_spectra(&expected, &computed);
        per_block.push(mismatch);
        max_mismatch = max_mismatch.max(mismatch);
    }
    Ok(SpectrumReport { max_mismatch, per_block })
}

/// Largest eigenvalue-tolerance violation of the coercivity matrix
/// `M^T C_Q + C_Q M - (2 Tr(S)/N) C_Q` over the degree blocks `k >= 1`;
/// returns the smallest eigenvalue found (nonnegative up to rounding when
/// the pair satisfies the Lyapunov relation).
pub fn coercivity_min_eigenvalue(trunc: &HermiteTruncation, pair: &OptimalPair) -> Result<f64> {
    let m = generator_matrix(trunc, pair.s(), pair.j_tilde())?;
    let c = cq_matrix(trunc, pair.q())?;
    let h = m.transpose() * &c + &c * &m - &c * (2.0 * pair.rate());
    let h_sym = (&h + h.transpose()) * 0.5;
    let mut min_eig = f64::INFINITY;
    for k in 1..=trunc.max_degree() {
        let range = trunc.block_range(k);
        let block = h_sym.view((range.start, range.start), (range.len(), range.len()));
        let eigs = block.clone_owned().symmetric_eigen().eigenvalues;
        min_eig = eigs.iter().cloned().fold(min_eig, f64::min);
    }
    Ok(min_eig)
}

/// Largest ratio `|Im <u, M u>| / Re <u, M u>` over random complex probe
/// vectors; bounded by `|J_tilde| / min sigma(S)` (the sector constant).
pub fn sector_ratio(
    trunc: &HermiteTruncation,
    s: &SpdMatrix,
    j_tilde: &AntisymMatrix,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let m = generator_matrix(trunc, s, j_tilde)?;
    let mc = m.map(|v| Complex::new(v, 0.0));
    let total = trunc.total_dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = nalgebra::DVector::<Complex<f64>>::from_fn(total, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let mu = &mc * &u;
        let form = u.dotc(&mu);
        if form.re <= 0.0 {
            continue;
        }
        worst = worst.max(form.im.abs() / form.re);
    }
    Ok(worst)
}
