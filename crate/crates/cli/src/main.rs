use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nonrev_cli::presets::{ExperimentPreset, PresetName};
use nonrev_cli::reports::{optimize_report, HermiteJson, OptimizeReport, TwoDimJson};
use nonrev_cli::{write_text, CliError, SimulateConfigJson};
use nonrev_core::io::{fmt_f64, read_matrix, read_vector, write_matrix};
use nonrev_core::{
    build_balanced_basis, build_optimal_pair, build_triangular, coercivity_min_eigenvalue,
    decay_curve, eig_general, evolve_covariance, evolve_mean, gaussian_density_bound,
    kappa_pencil, l2_distance_to_equilibrium, operator_norm, sector_ratio, simulate, threshold_t0,
    two_dim_report, verify_spectrum, EigenLadder, GaussianState, HermiteTruncation, L2Distance,
    Matrix, SpdMatrix,
};

#[derive(Parser)]
#[command(
    name = "nonrev",
    version,
    about = "Optimal non-reversible drift perturbations for Ornstein-Uhlenbeck diffusions"
)]
struct Cli {
    /// Seed for randomized presets.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Reporting tolerance recorded in JSON reports.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,

    /// Output format override for reports. Defaults per command: tables
    /// (simulate) emit csv, reports (twodim, hermite-check) emit json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    Popt,
    Triangular,
}

#[derive(Subcommand)]
enum Command {
    /// Build the balanced orthonormal basis for S and report its balance.
    Basis {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "nonrev-out")]
        out: PathBuf,
    },
    /// Construct the optimal perturbation J and companion matrices.
    Optimize {
        #[arg(long)]
        matrix: PathBuf,
        /// "default" or "csv:FILE" with one ladder value per line.
        #[arg(long, default_value = "default")]
        ladder: String,
        #[arg(long, value_enum, default_value_t = Construction::Popt)]
        construction: Construction,
        /// Emit -J instead of J (the Fokker-Planck direction uses J = -J_opt;
        /// either sign achieves the same spectral gap for the sampling SDE).
        #[arg(long)]
        flip_sign: bool,
        #[arg(long, default_value = "nonrev-out")]
        out: PathBuf,
    },
    /// Norm-vs-time decay curves for exp(-tS) and exp(-tB_J).
    Decay {
        #[arg(long)]
        matrix: PathBuf,
        /// Also compute the optimal-perturbation curve and its bound.
        #[arg(long)]
        optimal: bool,
        /// Time horizon; 0 means 10 / rate.
        #[arg(long, default_value_t = 0.0)]
        tmax: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form two-dimensional report for S = diag(1, lambda).
    Twodim {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a Gaussian law and track its distance to equilibrium.
    Gaussflow {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        x0: PathBuf,
        #[arg(long)]
        sigma0: PathBuf,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Euler-Maruyama Monte Carlo from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the generator spectrum on Hermite degree blocks.
    HermiteCheck {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named reproducible experiment preset.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "nonrev-out")]
        out: PathBuf,
    },
    /// List available presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_spd(path: &std::path::Path) -> Result<SpdMatrix, CliError> {
    Ok(SpdMatrix::new(read_matrix(path)?)?)
}

fn parse_ladder(choice: &str, n: usize) -> Result<Option<EigenLadder>, CliError> {
    if choice == "default" {
        return Ok(None);
    }
    if let Some(path) = choice.strip_prefix("csv:") {
        let text = std::fs::read_to_string(path)?;
        let values: Result<Vec<f64>, _> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse::<f64>)
            .collect();
        let values =
            values.map_err(|e| CliError::Usage(format!("bad ladder value: {e}")))?;
        if values.len() != n {
            return Err(CliError::Usage(format!(
                "ladder has {} values, matrix dimension is {n}",
                values.len()
            )));
        }
        return Ok(Some(EigenLadder::new(values)?));
    }
    Err(CliError::Usage(format!(
        "unrecognized --ladder {choice:?}; expected \"default\" or \"csv:<file>\""
    )))
}

fn print_or_write(report: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    use std::io::Write;
    match out {
        Some(path) => write_text(path, report),
        None => {
            // a closed pipe (e.g. | head) is not an error worth reporting
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{report}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
                other => other?,
            }
            Ok(())
        }
    }
}

/// Flatten a JSON report into `key,value` CSV lines (arrays indexed,
/// objects dotted) for the `--format csv` output mode.
fn json_to_csv(value: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut String) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, inner) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, inner, out);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, inner) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), inner, out);
                }
            }
            other => {
                out.push_str(prefix);
                out.push(',');
                out.push_str(&other.to_string());
                out.push('\n');
            }
        }
    }
    let mut out = String::from("key,value\n");
    walk("", value, &mut out);
    out
}

fn render_report<T: serde::Serialize>(report: &T, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)?),
        Format::Csv => Ok(json_to_csv(&serde_json::to_value(report)?)),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Basis { matrix, out } => {
            let s = load_spd(&matrix)?;
            let basis = build_balanced_basis(&s);
            std::fs::create_dir_all(&out)?;
            // rows of the emitted matrix are the basis vectors
            write_matrix(&out.join("basis.txt"), &basis.vectors().transpose())?;
            let mut csv = String::from("index,rayleigh,deviation\n");
            for (k, r) in basis.rayleigh_quotients(&s).iter().enumerate() {
                csv.push_str(&format!(
                    "{k},{},{}\n",
                    fmt_f64(*r),
                    fmt_f64(r - basis.target())
                ));
            }
            write_text(&out.join("balance.csv"), &csv)?;
            println!(
                "balanced basis: target {}, max deviation {:.3e}, orthonormality defect {:.3e}",
                fmt_f64(basis.target()),
                basis.balance_defect(&s),
                basis.orthonormality_defect()
            );
            Ok(())
        }

        Command::Optimize { matrix, ladder, construction, flip_sign, out } => {
            let s = load_spd(&matrix)?;
            std::fs::create_dir_all(&out)?;
            let report = match construction {
                Construction::Popt => {
                    let ladder = parse_ladder(&ladder, s.dim())?;
                    let pair = build_optimal_pair(&s, ladder)?;
                    let sign = if flip_sign { -1.0 } else { 1.0 };
                    let j = pair.j().matrix() * sign;
                    let j_tilde = pair.j_tilde().matrix() * sign;
                    let b_j = (Matrix::identity(s.dim(), s.dim()) + &j) * s.matrix();
                    write_matrix(&out.join("J.txt"), &j)?;
                    write_matrix(&out.join("Jtilde.txt"), &j_tilde)?;
                    write_matrix(&out.join("Q.txt"), pair.q().matrix())?;
                    write_matrix(&out.join("BJ.txt"), &b_j)?;
                    let spectrum = eig_general(&b_j)?.eigenvalues;
                    optimize_report(&pair, &spectrum, flip_sign, cli.tol)
                }
                Construction::Triangular => {
                    let tri = build_triangular(&s);
                    let sign = if flip_sign { -1.0 } else { 1.0 };
                    let j = tri.j.matrix() * sign;
                    let j_tilde = tri.j_tilde.matrix() * sign;
                    let b_j = (Matrix::identity(s.dim(), s.dim()) + &j) * s.matrix();
                    write_matrix(&out.join("J.txt"), &j)?;
                    write_matrix(&out.join("Jtilde.txt"), &j_tilde)?;
                    write_matrix(&out.join("BJ.txt"), &b_j)?;
                    let spectrum = eig_general(&b_j)?.eigenvalues;
                    OptimizeReport {
                        dim: s.dim(),
                        construction: "triangular".into(),
                        flip_sign,
                        rate: s.rate(),
                        min_re: spectrum.iter().map(|c| c.re).fold(f64::INFINITY, f64::min),
                        ladder: None,
                        constants: None,
                        residuals: None,
                        spectrum: spectrum.iter().map(|&c| c.into()).collect(),
                        tolerance: cli.tol,
                    }
                }
            };
            write_text(&out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
            println!(
                "rate {} achieved min Re {} ({})",
                fmt_f64(report.rate),
                fmt_f64(report.min_re),
                report.construction
            );
            Ok(())
        }

        Command::Decay { matrix, optimal, tmax, steps, out } => {
            let s = load_spd(&matrix)?;
            let rate = s.rate();
            let t_max = if tmax > 0.0 { tmax } else { 10.0 / rate };
            let reversible = decay_curve(s.matrix(), t_max, steps, "reversible")?;
            let optimal_data = if optimal {
                let pair = build_optimal_pair(&s, None)?;
                let prefactor = kappa_pencil(pair.q(), &s).sqrt();
                let curve = decay_curve(pair.b_j(), t_max, steps, "optimal")?;
                Some((curve, prefactor))
            } else {
                None
            };
            let mut text = String::from("t,norm_reversible,norm_optimal,bound_optimal\n");
            for k in 0..reversible.times.len() {
                let t = reversible.times[k];
                let (n_opt, bound) = match &optimal_data {
                    Some((curve, prefactor)) => (
                        fmt_f64(curve.norms[k]),
                        fmt_f64(prefactor * (-rate * t).exp()),
                    ),
                    None => ("nan".to_string(), "nan".to_string()),
                };
                text.push_str(&format!(
                    "{},{},{n_opt},{bound}\n",
                    fmt_f64(t),
                    fmt_f64(reversible.norms[k])
                ));
            }
            write_text(&out, &text)?;
            println!("wrote {} grid points to {}", reversible.times.len(), out.display());
            Ok(())
        }

        Command::Twodim { lambda, a, out } => {
            let report = two_dim_report(lambda, a)?;
            let rendered = render_report(&TwoDimJson::from(&report), cli.format.unwrap_or(Format::Json))?;
            print_or_write(&rendered, out.as_ref())
        }

        Command::Gaussflow { matrix, x0, sigma0, tmax, steps, out } => {
            let s = load_spd(&matrix)?;
            let x0 = read_vector(&x0)?;
            let sigma0 = read_matrix(&sigma0)?;
            if x0.len() != s.dim() || sigma0.nrows() != s.dim() {
                return Err(CliError::Usage(
                    "x0 and sigma0 must match the matrix dimension".into(),
                ));
            }
            let pair = build_optimal_pair(&s, None)?;
            let t0 = threshold_t0(&pair, &sigma0);
            let s_inv = s.inverse();
            let mut text = String::from("t,mean_norm,cov_dev_norm,l2_distance,bound\n");
            for k in 0..=steps {
                let t = tmax * k as f64 / steps as f64;
                let mean = evolve_mean(pair.b_j(), &x0, t)?;
                let cov = evolve_covariance(pair.b_j(), &s, &sigma0, t)?;
                let state = GaussianState::new(mean.clone(), cov.clone())?;
                let dist = match l2_distance_to_equilibrium(&state, &s)? {
                    L2Distance::Finite(d) => fmt_f64(d),
                    L2Distance::Divergent => "inf".to_string(),
                };
                let bound = if t >= t0 {
                    fmt_f64(gaussian_density_bound(&pair, x0.norm(), t0, t).sqrt())
                } else {
                    "nan".to_string()
                };
                text.push_str(&format!(
                    "{},{},{},{dist},{bound}\n",
                    fmt_f64(t),
                    fmt_f64(mean.norm()),
                    fmt_f64(operator_norm(&(cov - &s_inv)))
                ));
            }
            write_text(&out, &text)?;
            println!("wrote gaussian flow (t0 = {}) to {}", fmt_f64(t0), out.display());
            Ok(())
        }

        Command::Simulate { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let parsed: SimulateConfigJson = serde_json::from_str(&text)?;
            let (sde_config, observable) = parsed.build()?;
            if let Some(warning) = sde_config.stability_warning() {
                eprintln!("warning: {warning}");
            }
            let trace = simulate(&sde_config, observable)?;
            let rendered = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut csv = String::from("t,mean_obs,stderr\n");
                    for k in 0..trace.times.len() {
                        csv.push_str(&format!(
                            "{},{},{}\n",
                            fmt_f64(trace.times[k]),
                            fmt_f64(trace.values[k]),
                            fmt_f64(trace.stderr[k])
                        ));
                    }
                    csv
                }
                Format::Json => serde_json::to_string_pretty(&serde_json::json!({
                    "t": trace.times,
                    "mean_obs": trace.values,
                    "stderr": trace.stderr,
                }))?,
            };
            print_or_write(&rendered, out.as_ref())
        }

        Command::HermiteCheck { matrix, degree, out } => {
            let s = load_spd(&matrix)?;
            if degree > 12 {
                return Err(CliError::Usage("degree must be at most 12".into()));
            }
            if degree >= 6 && s.dim() > 6 {
                return Err(CliError::Usage(
                    "dimension > 6 at degree >= 6 blows up combinatorially; reduce one".into(),
                ));
            }
            let pair = build_optimal_pair(&s, None)?;
            let trunc = HermiteTruncation::new(s.dim(), degree);
            let spectrum_report = verify_spectrum(&trunc, &s, pair.j_tilde())?;
            let measured = sector_ratio(&trunc, &s, pair.j_tilde(), 64, cli.seed ^ 0x5ec7)?;
            let report = HermiteJson {
                dim: s.dim(),
                degree,
                rate: pair.rate(),
                max_mismatch: spectrum_report.max_mismatch,
                per_block: spectrum_report.per_block.clone(),
                sector_ratio_measured: measured,
                sector_bound: operator_norm(pair.j_tilde().matrix()) / s.min_eigenvalue(),
                coercivity_min_eigenvalue: coercivity_min_eigenvalue(&trunc, &pair)?,
                tolerance: cli.tol,
            };
            let rendered = render_report(&report, cli.format.unwrap_or(Format::Json))?;
            print_or_write(&rendered, out.as_ref())
        }

        Command::Preset { name, out } => {
            let name: PresetName =
                name.parse().map_err(CliError::Usage)?;
            let preset = ExperimentPreset::new(name, cli.seed);
            let manifest = nonrev_cli::presets::run_preset(&preset, &out)?;
            println!(
                "preset {} wrote {} files to {}",
                manifest.preset,
                manifest.files.len() + 1,
                out.display()
            );
            Ok(())
        }

        Command::Presets => {
            for p in PresetName::ALL {
                println!("{p}");
            }
            Ok(())
        }
    }
}
