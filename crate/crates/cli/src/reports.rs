//! Serializable report payloads emitted by the subcommands.

use nalgebra::Complex;
use nonrev_core::{OptimalPair, PrefactorConstants, TwoDimReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for ComplexJson {
    fn from(c: Complex<f64>) -> Self {
        ComplexJson { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsJson {
    pub cn1: f64,
    pub cn2: f64,
    pub kappa_q: f64,
    pub kappa_q_inv_s: f64,
    pub j_tilde_norm: f64,
    pub lower_bound_j: f64,
    pub scalar_case: bool,
    pub lower_bound_holds: bool,
    pub frobenius_bound_holds: bool,
}

impl From<&PrefactorConstants> for ConstantsJson {
    fn from(c: &PrefactorConstants) -> Self {
        ConstantsJson {
            cn1: c.cn1,
            cn2: c.cn2,
            kappa_q: c.kappa_q,
            kappa_q_inv_s: c.kappa_q_inv_s,
            j_tilde_norm: c.j_tilde_norm,
            lower_bound_j: c.lower_bound_j,
            scalar_case: c.scalar_case,
            lower_bound_holds: c.lower_bound_holds,
            frobenius_bound_holds: c.frobenius_bound_holds,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualsJson {
    pub lyapunov: f64,
    /// Largest `|Re(eigenvalue) - rate|` over the spectrum of `B_J`.
    pub max_re_deviation: f64,
    pub basis_balance: f64,
    pub basis_orthonormality: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub dim: usize,
    pub construction: String,
    pub flip_sign: bool,
    pub rate: f64,
    pub min_re: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualsJson>,
    pub spectrum: Vec<ComplexJson>,
    pub tolerance: f64,
}

pub fn optimize_report(
    pair: &OptimalPair,
    spectrum: &[Complex<f64>],
    flip_sign: bool,
    tolerance: f64,
) -> OptimizeReport {
    let constants = nonrev_core::prefactor_constants(pair);
    let max_re_dev = spectrum
        .iter()
        .map(|c| (c.re - pair.rate()).abs())
        .fold(0.0_f64, f64::max);
    OptimizeReport {
        dim: pair.dim(),
        construction: "popt".into(),
        flip_sign,
        rate: pair.rate(),
        min_re: spectrum.iter().map(|c| c.re).fold(f64::INFINITY, f64::min),
        ladder: Some(pair.ladder().values().to_vec()),
        constants: Some((&constants).into()),
        residuals: Some(ResidualsJson {
            lyapunov: pair.lyapunov_residual(),
            max_re_deviation: max_re_dev,
            basis_balance: pair.basis().balance_defect(pair.s()),
            basis_orthonormality: pair.basis().orthonormality_defect(),
        }),
        spectrum: spectrum.iter().map(|&c| c.into()).collect(),
        tolerance,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoDimJson {
    pub lambda: f64,
    pub a: f64,
    pub a_crit_squared: f64,
    pub mu_plus: ComplexJson,
    pub mu_minus: ComplexJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_norm_product: Option<f64>,
    pub jordan_case: bool,
}

impl From<&TwoDimReport> for TwoDimJson {
    fn from(r: &TwoDimReport) -> Self {
        TwoDimJson {
            lambda: r.lambda,
            a: r.a,
            a_crit_squared: r.a_crit_squared,
            mu_plus: r.mu_plus.into(),
            mu_minus: r.mu_minus.into(),
            p_norm_product: r.p_norm_product,
            jordan_case: r.jordan_case,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermiteJson {
    pub dim: usize,
    pub degree: usize,
    pub rate: f64,
    pub max_mismatch: f64,
    pub per_block: Vec<f64>,
    pub sector_ratio_measured: f64,
    pub sector_bound: f64,
    pub coercivity_min_eigenvalue: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub label: String,
    pub dim: usize,
    pub rate: f64,
    pub min_re_unperturbed: f64,
    pub min_re_optimal: f64,
    pub spectrum_optimal: Vec<ComplexJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileChecksum {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub preset: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub files: Vec<FileChecksum>,
}
