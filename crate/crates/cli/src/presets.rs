//! Reproducible experiment presets: each one regenerates the data behind a
//! figure-style experiment from (name, seed) alone and writes CSV/JSON
//! artifacts plus a checksummed manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nonrev_core::{
    build_optimal_pair, decay_curve, eig_general, equilibrium_quadrature_2d, gradient_drift,
    kappa_pencil, make_laplacian, simulate, two_dim_bj, AntisymMatrix, DriftKind, Matrix,
    Observable, Potential, SdeConfig, SpdMatrix,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::reports::{FileChecksum, Manifest, SpectrumJson};
use crate::{write_text, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig2TwoDim,
    Fig3ThreeDim,
    Fig4Random100,
    Fig5Laplacian100,
    Fig6DoubleWell,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Fig2TwoDim,
        PresetName::Fig3ThreeDim,
        PresetName::Fig4Random100,
        PresetName::Fig5Laplacian100,
        PresetName::Fig6DoubleWell,
    ];
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PresetName::Fig2TwoDim => "fig2-2d",
            PresetName::Fig3ThreeDim => "fig3-3d",
            PresetName::Fig4Random100 => "fig4-random100",
            PresetName::Fig5Laplacian100 => "fig5-laplacian100",
            PresetName::Fig6DoubleWell => "fig6-doublewell",
        };
        f.write_str(s)
    }
}

impl FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2-2d" => Ok(PresetName::Fig2TwoDim),
            "fig3-3d" => Ok(PresetName::Fig3ThreeDim),
            "fig4-random100" => Ok(PresetName::Fig4Random100),
            "fig5-laplacian100" => Ok(PresetName::Fig5Laplacian100),
            "fig6-doublewell" => Ok(PresetName::Fig6DoubleWell),
            other => Err(format!(
                "unknown preset {other:?}; expected one of fig2-2d, fig3-3d, fig4-random100, \
                 fig5-laplacian100, fig6-doublewell"
            )),
        }
    }
}

/// A fully reproducible experiment. `seed` drives every random choice;
/// the Monte-Carlo scale knobs exist so tests can shrink the double-well
/// run, and default to the full-scale experiment.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub seed: u64,
    pub decay_steps: usize,
    pub sde_dt: f64,
    pub sde_steps: usize,
    pub sde_paths: usize,
    pub sde_record_every: usize,
    pub beta: f64,
    pub deltas: (f64, f64),
}

impl ExperimentPreset {
    pub fn new(name: PresetName, seed: u64) -> Self {
        ExperimentPreset {
            name,
            seed,
            decay_steps: 200,
            sde_dt: 1e-3,
            sde_steps: 8000,
            sde_paths: 100_000,
            sde_record_every: 50,
            beta: 10.0,
            deltas: (0.0, 10.0),
        }
    }
}

fn checksum(path: &Path) -> Result<FileChecksum, CliError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(FileChecksum {
        name: path.file_name().unwrap().to_string_lossy().into_owned(),
        sha256: hex,
    })
}

fn decay_csv(
    out: &Path,
    s: &SpdMatrix,
    pair_b: &Matrix,
    bound_prefactor: f64,
    rate: f64,
    t_max: f64,
    steps: usize,
) -> Result<(), CliError> {
    let reversible = decay_curve(s.matrix(), t_max, steps, "reversible")?;
    let optimal = decay_curve(pair_b, t_max, steps, "optimal")?;
    let mut text = String::from("t,norm_reversible,norm_optimal,bound_optimal\n");
    for k in 0..reversible.times.len() {
        let t = reversible.times[k];
        let bound = bound_prefactor * (-rate * t).exp();
        text.push_str(&format!(
            "{},{},{},{}\n",
            nonrev_core::io::fmt_f64(t),
            nonrev_core::io::fmt_f64(reversible.norms[k]),
            nonrev_core::io::fmt_f64(optimal.norms[k]),
            nonrev_core::io::fmt_f64(bound)
        ));
    }
    write_text(out, &text)
}

fn spectrum_json(s: &SpdMatrix, label: &str) -> Result<SpectrumJson, CliError> {
    let pair = build_optimal_pair(s, None)?;
    let spec = eig_general(pair.b_j())?;
    Ok(SpectrumJson {
        label: label.to_string(),
        dim: s.dim(),
        rate: pair.rate(),
        min_re_unperturbed: s.min_eigenvalue(),
        min_re_optimal: spec.min_re(),
        spectrum_optimal: spec.eigenvalues.iter().map(|&c| c.into()).collect(),
    })
}

/// Run a preset, emitting its artifacts into `out_dir` and returning the
/// manifest (also written as `manifest.json`).
pub fn run_preset(preset: &ExperimentPreset, out_dir: &Path) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let mut files: Vec<PathBuf> = Vec::new();
    let parameters;
    let tolerances;

    match preset.name {
        PresetName::Fig2TwoDim => {
            let lambda = 0.1;
            let s = SpdMatrix::from_diagonal(&[1.0, lambda])?;
            let pair = build_optimal_pair(&s, None)?;
            let t_max = 10.0 / pair.rate();
            let prefactor = kappa_pencil(pair.q(), &s).sqrt();
            let decay_path = out_dir.join("decay.csv");
            decay_csv(
                &decay_path,
                &s,
                pair.b_j(),
                prefactor,
                pair.rate(),
                t_max,
                preset.decay_steps,
            )?;
            files.push(decay_path);

            // critical perturbation strength: eigenvalue coalescence
            let a_crit = (1.0 - lambda) / (2.0 * lambda.sqrt());
            let b_crit = two_dim_bj(lambda, a_crit);
            let critical = decay_curve(&b_crit, t_max, preset.decay_steps, "critical")?;
            let mut text = String::from("t,norm_critical\n");
            for (t, n) in critical.times.iter().zip(&critical.norms) {
                text.push_str(&format!(
                    "{},{}\n",
                    nonrev_core::io::fmt_f64(*t),
                    nonrev_core::io::fmt_f64(*n)
                ));
            }
            let crit_path = out_dir.join("decay_critical.csv");
            write_text(&crit_path, &text)?;
            files.push(crit_path);

            let spec_path = out_dir.join("spectrum.json");
            write_text(&spec_path, &serde_json::to_string_pretty(&spectrum_json(&s, "fig2-2d")?)?)?;
            files.push(spec_path);

            parameters = json!({"s": [1.0, lambda], "a_critical": a_crit, "t_max": t_max,
                                "decay_steps": preset.decay_steps});
            tolerances = json!({"rate": 0.55, "rate_tol_rel": 1e-7});
        }
        PresetName::Fig3ThreeDim => {
            let s = SpdMatrix::from_diagonal(&[1.0, 0.1, 0.01])?;
            let pair = build_optimal_pair(&s, None)?;
            let t_max = 10.0 / pair.rate();
            let prefactor = kappa_pencil(pair.q(), &s).sqrt();
            let decay_path = out_dir.join("decay.csv");
            decay_csv(
                &decay_path,
                &s,
                pair.b_j(),
                prefactor,
                pair.rate(),
                t_max,
                preset.decay_steps,
            )?;
            files.push(decay_path);

            let spec_path = out_dir.join("spectrum.json");
            write_text(&spec_path, &serde_json::to_string_pretty(&spectrum_json(&s, "fig3-3d")?)?)?;
            files.push(spec_path);

            parameters = json!({"s": [1.0, 0.1, 0.01], "t_max": t_max,
                                "decay_steps": preset.decay_steps});
            tolerances = json!({"min_re_optimal": 0.37, "tol_abs": 1e-9,
                                "min_re_unperturbed": 0.01});
        }
        PresetName::Fig4Random100 => {
            let n = 100;
            let mut rng = ChaCha8Rng::seed_from_u64(preset.seed);
            let mut diag = Vec::with_capacity(n);
            while diag.len() < n {
                let v: f64 = rng.random_range(0.0..1.0);
                // near-zero entries would make S effectively singular
                if v >= 1e-6 {
                    diag.push(v);
                }
            }
            let s = SpdMatrix::from_diagonal(&diag)?;
            let matrix_path = out_dir.join("matrix.txt");
            nonrev_core::io::write_matrix(&matrix_path, s.matrix())?;
            files.push(matrix_path);

            let pair = build_optimal_pair(&s, None)?;
            let t_max = 10.0 / pair.rate();
            let prefactor = kappa_pencil(pair.q(), &s).sqrt();
            let decay_path = out_dir.join("decay.csv");
            decay_csv(
                &decay_path,
                &s,
                pair.b_j(),
                prefactor,
                pair.rate(),
                t_max,
                preset.decay_steps,
            )?;
            files.push(decay_path);

            let spec_path = out_dir.join("spectrum.json");
            write_text(
                &spec_path,
                &serde_json::to_string_pretty(&spectrum_json(&s, "fig4-random100")?)?,
            )?;
            files.push(spec_path);

            parameters = json!({"n": n, "distribution": "uniform(0,1) diagonal, entries < 1e-6 resampled",
                                "t_max": t_max, "decay_steps": preset.decay_steps});
            tolerances = json!({"min_re_optimal": "Tr(S)/100 of the sampled instance",
                                "expected_mean_entry": 0.5});
        }
        PresetName::Fig5Laplacian100 => {
            let s = make_laplacian(100);
            let pair = build_optimal_pair(&s, None)?;
            let t_max = 10.0 / pair.rate();
            let prefactor = kappa_pencil(pair.q(), &s).sqrt();
            let decay_path = out_dir.join("decay.csv");
            decay_csv(
                &decay_path,
                &s,
                pair.b_j(),
                prefactor,
                pair.rate(),
                t_max,
                preset.decay_steps,
            )?;
            files.push(decay_path);

            let spec_path = out_dir.join("spectrum.json");
            write_text(
                &spec_path,
                &serde_json::to_string_pretty(&spectrum_json(&s, "fig5-laplacian100")?)?,
            )?;
            files.push(spec_path);

            parameters = json!({"n": 100, "matrix": "tridiagonal (2, -1), Dirichlet truncation",
                                "t_max": t_max, "decay_steps": preset.decay_steps});
            tolerances = json!({"min_re_unperturbed": 9.67e-4, "tol_rel": 0.01,
                                "min_re_optimal": 2.0, "tol_abs": 1e-6});
        }
        PresetName::Fig6DoubleWell => {
            let j = AntisymMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))?;
            let equilibrium = equilibrium_quadrature_2d(
                &Potential::DoubleWell,
                preset.beta,
                |x, y| x * x + y * y,
                3.0,
                400,
            )?;

            for (tag, delta) in [("delta0", preset.deltas.0), ("delta10", preset.deltas.1)] {
                let drift = gradient_drift(Potential::DoubleWell, delta, &j)?;
                let config = SdeConfig {
                    dim: 2,
                    drift: DriftKind::Gradient(drift),
                    beta: preset.beta,
                    dt: preset.sde_dt,
                    steps: preset.sde_steps,
                    n_paths: preset.sde_paths,
                    seed: preset.seed,
                    x0: vec![vec![0.0, 0.0]],
                    record_every: preset.sde_record_every,
                };
                let trace = simulate(&config, Observable::SecondMoment)?;
                let mut text = String::from("t,mean_obs,stderr\n");
                for k in 0..trace.times.len() {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        nonrev_core::io::fmt_f64(trace.times[k]),
                        nonrev_core::io::fmt_f64(trace.values[k]),
                        nonrev_core::io::fmt_f64(trace.stderr[k])
                    ));
                }
                let path = out_dir.join(format!("second_moment_{tag}.csv"));
                write_text(&path, &text)?;
                files.push(path);
            }

            let eq_path = out_dir.join("equilibrium.json");
            write_text(
                &eq_path,
                &serde_json::to_string_pretty(&json!({
                    "observable": "second_moment",
                    "beta": preset.beta,
                    "quadrature_value": equilibrium,
                    "box_half_width": 3.0,
                    "nodes": 400,
                }))?,
            )?;
            files.push(eq_path);

            parameters = json!({"potential": "double_well", "beta": preset.beta,
                                "deltas": [preset.deltas.0, preset.deltas.1],
                                "dt": preset.sde_dt, "steps": preset.sde_steps,
                                "n_paths": preset.sde_paths,
                                "record_every": preset.sde_record_every,
                                "x0": [0.0, 0.0]});
            tolerances = json!({"equilibrium_stderr_multiple": 3.0,
                                "settle_band_rel": 0.05});
        }
    }

    let manifest = Manifest {
        preset: preset.name.to_string(),
        seed: preset.seed,
        parameters,
        tolerances,
        files: files.iter().map(|p| checksum(p)).collect::<Result<_, _>>()?,
    };
    write_text(&out_dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
