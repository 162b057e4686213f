//! Optimal non-reversible drift perturbations for Ornstein-Uhlenbeck
//! diffusions.
//!
//! For a quadratic potential with precision matrix `S`, adding the drift
//! `-J S x` with a well-chosen antisymmetric `J` moves every eigenvalue of
//! the drift matrix `B_J = (I + J) S` onto the vertical line
//! `Re = Tr(S)/N`, the best spectral gap any antisymmetric perturbation
//! can achieve. This crate builds such perturbations, quantifies the decay
//! of the associated matrix and Markov semigroups (including explicit
//! prefactor constants), propagates Gaussian laws exactly, verifies the
//! generator spectrum on Hermite degree blocks, and runs seeded
//! Euler-Maruyama experiments.

pub mod basis;
pub mod error;
pub mod gaussian;
pub mod hermite;
pub mod io;
pub mod matrix;
pub mod perturbation;
pub mod sde;
pub mod semigroup;

pub use basis::{build_balanced_basis, build_balanced_basis_from, solve_tstar, BalancedBasis};
pub use error::{Error, Result};
pub use gaussian::{
    evolve_covariance, evolve_mean, gaussian_density_bound, general_density_bound,
    l2_distance_to_equilibrium, t_alpha, threshold_t0, GaussianState, L2Distance,
};
pub use hermite::{
    cq_matrix, coercivity_min_eigenvalue, generator_matrix, ladder_matrices, sector_ratio,
    verify_spectrum, HermiteTruncation, SpectrumReport,
};
pub use matrix::{
    condition_number, eig_general, eig_general_with_vectors, expm, frobenius_norm, kappa_pencil,
    make_laplacian, match_spectra, operator_norm, AntisymMatrix, Matrix, SpdMatrix, Spectrum,
    Vector,
};
pub use perturbation::{
    build_jtilde, build_optimal_pair, build_triangular, check_divergence_free,
    min_re_spectrum, prefactor_constants, DivergenceFreeReport, EigenLadder, OptimalPair,
    PrefactorConstants, TriangularPerturbation,
};
pub use sde::{
    equilibrium_quadrature_2d, gradient_drift, simulate, DriftKind, GradientDrift, Observable,
    ObservableTrace, Potential, SdeConfig,
};
pub use semigroup::{
    decay_curve, fit_rate, qnorm_decay_check, two_dim_bj, two_dim_report, DecayCurve, RateFit,
    TwoDimReport, DEFAULT_TRANSIENT_FRACTION,
};
