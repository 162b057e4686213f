//! Library half of the `nonrev` command-line tool: experiment presets,
//! report payloads, and the simulate-config schema. The binary in
//! `main.rs` is a thin clap wrapper over these.

pub mod presets;
pub mod reports;

use std::path::Path;

use nonrev_core::{AntisymMatrix, DriftKind, Matrix, Observable, Potential, SdeConfig, SpdMatrix};
use serde::{Deserialize, Serialize};

/// Error wrapper deciding the process exit code:
/// 1 validation, 2 numerical, 3 I/O.
#[derive(Debug)]
pub enum CliError {
    Core(nonrev_core::Error),
    Json(serde_json::Error),
    Io(std::io::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "config error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nonrev_core::Error> for CliError {
    fn from(e: nonrev_core::Error) -> Self {
        match e {
            nonrev_core::Error::Io(io) => CliError::Io(io),
            other => CliError::Core(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Json(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// JSON schema of `nonrev simulate --config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfigJson {
    pub dim: usize,
    pub drift: DriftJson,
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub x0: Vec<Vec<f64>>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub observable: ObservableJson,
}

fn default_record_every() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DriftJson {
    /// `dX = -B X dt + ...`
    Linear { matrix: Vec<Vec<f64>> },
    Gradient {
        potential: PotentialJson,
        delta: f64,
        /// Rows of the antisymmetric matrix J; defaults to the standard
        /// 2x2 rotation when omitted.
        #[serde(default)]
        j: Option<Vec<Vec<f64>>>,
        /// Precision matrix for the quadratic potential.
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PotentialJson {
    DoubleWell,
    Quadratic,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservableJson {
    #[default]
    SecondMoment,
    Component(usize),
    Product(usize, usize),
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(CliError::Usage("matrix rows must be nonempty and rectangular".into()));
    }
    Ok(Matrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
}

impl SimulateConfigJson {
    pub fn build(&self) -> Result<(SdeConfig, Observable), CliError> {
        let drift = match &self.drift {
            DriftJson::Linear { matrix } => DriftKind::Linear { b: rows_to_matrix(matrix)? },
            DriftJson::Gradient { potential, delta, j, matrix } => {
                let potential = match potential {
                    PotentialJson::DoubleWell => Potential::DoubleWell,
                    PotentialJson::Quadratic => {
                        let rows = matrix.as_ref().ok_or_else(|| {
                            CliError::Usage(
                                "quadratic potential requires a \"matrix\" field".into(),
                            )
                        })?;
                        Potential::Quadratic(SpdMatrix::new(rows_to_matrix(rows)?)?)
                    }
                };
                let j_mat = match j {
                    Some(rows) => AntisymMatrix::new(rows_to_matrix(rows)?)?,
                    None => {
                        if potential.dim() != 2 {
                            return Err(CliError::Usage(
                                "default J is 2x2; supply \"j\" for other dimensions".into(),
                            ));
                        }
                        AntisymMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))?
                    }
                };
                DriftKind::Gradient(nonrev_core::gradient_drift(potential, *delta, &j_mat)?)
            }
        };
        let config = SdeConfig {
            dim: self.dim,
            drift,
            beta: self.beta,
            dt: self.dt,
            steps: self.steps,
            n_paths: self.n_paths,
            seed: self.seed,
            x0: self.x0.clone(),
            record_every: self.record_every,
        };
        let observable = match self.observable {
            ObservableJson::SecondMoment => Observable::SecondMoment,
            ObservableJson::Component(i) => Observable::Component(i),
            ObservableJson::Product(i, j) => Observable::Product(i, j),
        };
        Ok((config, observable))
    }
}
