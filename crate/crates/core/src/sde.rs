//! Euler-Maruyama Monte Carlo for the linear drift `-B x` and for gradient
//! drifts `(-I + delta J) grad V` with additive noise `sqrt(2/beta) dW`.
//!
//! Reproducibility contract: each path owns the RNG stream
//! `(seed, path index)`, and partial sums are reduced in fixed block order,
//! so results are bit-identical regardless of how many worker threads run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{operator_norm, AntisymMatrix, Matrix, SpdMatrix};

const PATH_BLOCK: usize = 2048;

/// Potentials available to the gradient drift.
#[derive(Debug, Clone)]
pub enum Potential {
    /// `V(x, y) = (x^2 - 1)^2 / 4 + y^2 / 2`
    DoubleWell,
    /// `V(x) = x^T S x / 2`
    Quadratic(SpdMatrix),
}

impl Potential {
    pub fn dim(&self) -> usize {
        match self {
            Potential::DoubleWell => 2,
            Potential::Quadratic(s) => s.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::DoubleWell => {
                let q = x[0] * x[0] - 1.0;
                0.25 * q * q + 0.5 * x[1] * x[1]
            }
            Potential::Quadratic(s) => {
                let m = s.matrix();
                let mut acc = 0.0;
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        acc += x[i] * m[(i, j)] * x[j];
                    }
                }
                0.5 * acc
            }
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Potential::DoubleWell => {
                out[0] = x[0] * x[0] * x[0] - x[0];
                out[1] = x[1];
            }
            Potential::Quadratic(s) => {
                let m = s.matrix();
                for i in 0..x.len() {
                    let mut acc = 0.0;
                    for j in 0..x.len() {
                        acc += m[(i, j)] * x[j];
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

/// Drift `x -> (-I + delta J) grad V(x)`.
///
/// Construction cross-checks the analytic gradient against central finite
/// differences on a fixed set of probe points.
#[derive(Debug, Clone)]
pub struct GradientDrift {
    potential: Potential,
    delta: f64,
    /// `-I + delta J`, applied to the gradient.
    map: Matrix,
}

pub fn gradient_drift(potential: Potential, delta: f64, j: &AntisymMatrix) -> Result<GradientDrift> {
    let n = potential.dim();
    if j.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: j.dim() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x67726164);
    let h = 1e-5;
    let mut max_rel = 0.0_f64;
    let mut grad = vec![0.0; n];
    for _ in 0..10 {
        let x: Vec<f64> =
            (0..n).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect();
        potential.gradient(&x, &mut grad);
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (potential.value(&xp) - potential.value(&xm)) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / (1.0 + grad[i].abs().max(fd.abs()));
            max_rel = max_rel.max(rel);
        }
    }
    if max_rel > 1e-6 {
        return Err(Error::GradientMismatch { max_rel });
    }

    let map = j.matrix() * delta - Matrix::identity(n, n);
    Ok(GradientDrift { potential, delta, map })
}

impl GradientDrift {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn eval(&self, x: &[f64], grad_buf: &mut [f64], out: &mut [f64]) {
        self.potential.gradient(x, grad_buf);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, g) in grad_buf.iter().enumerate() {
                acc += self.map[(i, j)] * g;
            }
            *o = acc;
        }
    }
}

#[derive(Debug, Clone)]
pub enum DriftKind {
    /// `dX = -B X dt + ...`
    Linear { b: Matrix },
    Gradient(GradientDrift),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `|x|^2`
    SecondMoment,
    Component(usize),
    /// `x_i * x_j`
    Product(usize, usize),
}

impl Observable {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Observable::SecondMoment => x.iter().map(|v| v * v).sum(),
            Observable::Component(i) => x[*i],
            Observable::Product(i, j) => x[*i] * x[*j],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdeConfig {
    pub dim: usize,
    pub drift: DriftKind,
    /// Inverse temperature; the noise is `sqrt(2 / beta) dW`.
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Initial points; path `p` starts at `x0[p % x0.len()]`.
    pub x0: Vec<Vec<f64>>,
    /// Record the observable every this many steps.
    pub record_every: usize,
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dt <= 0.0 || self.beta <= 0.0 {
            return Err(Error::Invalid("dim, dt and beta must be positive".into()));
        }
        if self.steps == 0 || self.n_paths == 0 || self.record_every == 0 {
            return Err(Error::Invalid("steps, n_paths and record_every must be >= 1".into()));
        }
        if self.x0.is_empty() || self.x0.iter().any(|p| p.len() != self.dim) {
            return Err(Error::Invalid("x0 must hold points of the configured dimension".into()));
        }
        match &self.drift {
            DriftKind::Linear { b } => {
                if b.nrows() != self.dim || b.ncols() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: b.nrows() });
                }
            }
            DriftKind::Gradient(g) => {
                if g.potential.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: g.potential.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Explicit-Euler stability heuristic `dt * L < 2`; returns a warning
    /// string when violated instead of failing.
    pub fn stability_warning(&self) -> Option<String> {
        let lipschitz = match &self.drift {
            DriftKind::Linear { b } => operator_norm(b),
            DriftKind::Gradient(g) => {
                let curvature = match &g.potential {
                    // max |V''| = 3 x^2 - 1 over the |x| <= 3 bulk
                    Potential::DoubleWell => 26.0,
                    Potential::Quadratic(s) => s.max_eigenvalue(),
                };
                operator_norm(&g.map) * curvature
            }
        };
        if self.dt * lipschitz >= 2.0 {
            Some(format!(
                "dt * Lipschitz estimate = {:.3} >= 2; explicit Euler may be unstable",
                self.dt * lipschitz
            ))
        } else {
            None
        }
    }

    fn recorded_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> =
            (0..=self.steps).filter(|s| s % self.record_every == 0).collect();
        if *steps.last().unwrap() != self.steps {
            steps.push(self.steps);
        }
        steps
    }
}

/// Monte Carlo means of an observable along the flow, with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

struct BlockSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

fn run_block(
    config: &SdeConfig,
    observable: Observable,
    rec_steps: &[usize],
    path_range: std::ops::Range<usize>,
) -> Result<BlockSums> {
    let n = config.dim;
    let n_rec = rec_steps.len();
    let mut sums = BlockSums { sum: vec![0.0; n_rec], sum_sq: vec![0.0; n_rec] };
    let noise_scale = (2.0 * config.dt / config.beta).sqrt();

    let mut x = vec![0.0; n];
    let mut drift = vec![0.0; n];
    let mut grad = vec![0.0; n];

    for path in path_range {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(path as u64);
        x.copy_from_slice(&config.x0[path % config.x0.len()]);

        let mut rec_idx = 0;
        if rec_steps[0] == 0 {
            let o = observable.eval(&x);
            sums.sum[0] += o;
            sums.sum_sq[0] += o * o;
            rec_idx = 1;
        }

        for step in 1..=config.steps {
            match &config.drift {
                DriftKind::Linear { b } => {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += b[(i, j)] * x[j];
                        }
                        drift[i] = -acc;
                    }
                }
                DriftKind::Gradient(g) => g.eval(&x, &mut grad, &mut drift),
            }
            let mut finite = true;
            for i in 0..n {
                let xi: f64 = <StandardNormal as Distribution<f64>>::sample(
                    &StandardNormal,
                    &mut rng,
                );
                x[i] += drift[i] * config.dt + noise_scale * xi;
                finite &= x[i].is_finite();
            }
            if !finite {
                return Err(Error::NonFinite { path, step });
            }
            if rec_idx < n_rec && rec_steps[rec_idx] == step {
                let o = observable.eval(&x);
                sums.sum[rec_idx] += o;
                sums.sum_sq[rec_idx] += o * o;
                rec_idx += 1;
            }
        }
    }
    Ok(sums)
}

/// Run the Monte Carlo experiment. Identical `(config, seed)` produce
/// bit-identical traces regardless of the worker count.
pub fn simulate(config: &SdeConfig, observable: Observable) -> Result<ObservableTrace> {
    config.validate()?;
    let rec_steps = config.recorded_steps();
    let n_rec = rec_steps.len();

    let blocks: Vec<std::ops::Range<usize>> = (0..config.n_paths)
        .step_by(PATH_BLOCK)
        .map(|start| start..(start + PATH_BLOCK).min(config.n_paths))
        .collect();

    let partials: Vec<Result<BlockSums>> = blocks
        .par_iter()
        .map(|range| run_block(config, observable, &rec_steps, range.clone()))
        .collect();

    // Fixed-order reduction over path-index blocks.
    let mut sum = vec![0.0; n_rec];
    let mut sum_sq = vec![0.0; n_rec];
    for partial in partials {
        let p = partial?;
        for k in 0..n_rec {
            sum[k] += p.sum[k];
            sum_sq[k] += p.sum_sq[k];
        }
    }

    let n = config.n_paths as f64;
    let times: Vec<f64> = rec_steps.iter().map(|&s| s as f64 * config.dt).collect();
    let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr: Vec<f64> = (0..n_rec)
        .map(|k| {
            if config.n_paths < 2 {
                0.0
            } else {
                let var = (sum_sq[k] - sum[k] * sum[k] / n) / (n - 1.0);
                (var.max(0.0) / n).sqrt()
            }
        })
        .collect();
    Ok(ObservableTrace { times, values, stderr })
}

/// Tensor-grid Simpson quadrature of
/// `integral obs(x, y) exp(-beta V) / integral exp(-beta V)` over
/// `[-half_width, half_width]^2`.
///
/// Fails with `BoxTooSmall` when the boundary still carries more than
/// 1e-12 of the peak density.
pub fn equilibrium_quadrature_2d<F>(
    potential: &Potential,
    beta: f64,
    observable: F,
    half_width: f64,
    nodes: usize,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if potential.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: potential.dim() });
    }
    if !(beta > 0.0 && half_width > 0.0) {
        return Err(Error::Invalid("beta and half_width must be positive".into()));
    }
    let intervals = nodes.max(8) & !1; // even interval count for Simpson
    let npts = intervals + 1;
    let h = 2.0 * half_width / intervals as f64;
    let grid: Vec<f64> = (0..npts).map(|i| -half_width + i as f64 * h).collect();

    // log-densities first, shifted by the max for conditioning
    let mut log_rho = vec![0.0f64; npts * npts];
    let mut max_log = f64::NEG_INFINITY;
    for (iy, &y) in grid.iter().enumerate() {
        for (ix, &x) in grid.iter().enumerate() {
            let l = -beta * potential.value(&[x, y]);
            log_rho[iy * npts + ix] = l;
            max_log = max_log.max(l);
        }
    }
    let mut boundary_max = f64::NEG_INFINITY;
    for i in 0..npts {
        for &(ix, iy) in &[(i, 0), (i, npts - 1), (0, i), (npts - 1, i)] {
            boundary_max = boundary_max.max(log_rho[iy * npts + ix]);
        }
    }
    let boundary_ratio = (boundary_max - max_log).exp();
    if boundary_ratio > 1e-12 {
        return Err(Error::BoxTooSmall { boundary_ratio });
    }

    let w1 = |i: usize| -> f64 {
        if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut z = 0.0;
    let mut integral = 0.0;
    for (iy, &y) in grid.iter().enumerate() {
        for (ix, &x) in grid.iter().enumerate() {
            let w = w1(ix) * w1(iy);
            let rho = (log_rho[iy * npts + ix] - max_log).exp();
            z += w * rho;
            integral += w * observable(x, y) * rho;
        }
    }
    Ok(integral / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn standard_j2() -> AntisymMatrix {
        AntisymMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap()
    }

    #[test]
    fn gradient_drift_double_well_formula() {
        let g = gradient_drift(Potential::DoubleWell, 0.0, &standard_j2()).unwrap();
        let mut grad = vec![0.0; 2];
        let mut out = vec![0.0; 2];
        g.eval(&[2.0, -1.5], &mut grad, &mut out);
        // grad V = (x^3 - x, y); delta = 0 gives -grad V
        assert_relative_eq!(grad[0], 6.0, max_relative = 1e-14);
        assert_relative_eq!(grad[1], -1.5, max_relative = 1e-14);
        assert_relative_eq!(out[0], -6.0, max_relative = 1e-14);
        assert_relative_eq!(out[1], 1.5, max_relative = 1e-14);
    }

    #[test]
    fn gradient_drift_quadratic_matches_algebra() {
        let s = SpdMatrix::from_diagonal(&[1.0, 0.1]).unwrap();
        let g = gradient_drift(Potential::Quadratic(s.clone()), 1.0, &standard_j2()).unwrap();
        let x = [0.7, -0.2];
        let mut grad = vec![0.0; 2];
        let mut out = vec![0.0; 2];
        g.eval(&x, &mut grad, &mut out);
        // (-I + J) S x
        let expected = (standard_j2().matrix() - Matrix::identity(2, 2))
            * s.matrix()
            * crate::matrix::Vector::from_row_slice(&x);
        assert_relative_eq!(out[0], expected[0], max_relative = 1e-14);
        assert_relative_eq!(out[1], expected[1], max_relative = 1e-14);
    }

    #[test]
    fn simulate_is_deterministic_across_pool_sizes() {
        let config = SdeConfig {
            dim: 2,
            drift: DriftKind::Linear { b: Matrix::identity(2, 2) },
            beta: 1.0,
            dt: 1e-2,
            steps: 50,
            n_paths: 3000,
            seed: 99,
            x0: vec![vec![0.0, 0.0]],
            record_every: 10,
        };
        let base = simulate(&config, Observable::SecondMoment).unwrap();
        for threads in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let run = pool.install(|| simulate(&config, Observable::SecondMoment).unwrap());
            assert!(base
                .values
                .iter()
                .zip(&run.values)
                .all(|(a, b)| a.to_bits() == b.to_bits()));
            assert!(base
                .stderr
                .iter()
                .zip(&run.stderr)
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn scalar_ou_second_moment_matches_theory() {
        // B = I, beta = 1, x0 = 0: E|X_t|^2 = N (1 - e^{-2t})
        let config = SdeConfig {
            dim: 2,
            drift: DriftKind::Linear { b: Matrix::identity(2, 2) },
            beta: 1.0,
            dt: 1e-3,
            steps: 2000,
            n_paths: 20_000,
            seed: 4242,
            x0: vec![vec![0.0, 0.0]],
            record_every: 500,
        };
        let trace = simulate(&config, Observable::SecondMoment).unwrap();
        for (k, &t) in trace.times.iter().enumerate() {
            if t == 0.0 {
                assert_eq!(trace.values[k], 0.0);
                continue;
            }
            let theory = 2.0 * (1.0 - (-2.0 * t).exp());
            let dev = (trace.values[k] - theory).abs();
            assert!(
                dev <= 3.0 * trace.stderr[k],
                "t={t}: dev {dev} > 3 stderr {}",
                3.0 * trace.stderr[k]
            );
        }
    }

    #[test]
    fn blowup_is_reported_with_path_and_step() {
        // Strongly unstable explicit Euler: dt * lambda >> 2
        let config = SdeConfig {
            dim: 1,
            drift: DriftKind::Linear { b: Matrix::from_row_slice(1, 1, &[-1.0]) },
            beta: 1e6,
            dt: 1e3,
            steps: 4000,
            n_paths: 2,
            seed: 1,
            x0: vec![vec![1.0]],
            record_every: 1000,
        };
        assert!(config.stability_warning().is_some());
        match simulate(&config, Observable::SecondMoment) {
            Err(Error::NonFinite { .. }) => {}
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_standard_gaussian() {
        let s = SpdMatrix::identity(2);
        let v = equilibrium_quadrature_2d(
            &Potential::Quadratic(s),
            1.0,
            |x, y| x * x + y * y,
            12.0,
            600,
        )
        .unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn quadrature_normalization_is_exact() {
        let v = equilibrium_quadrature_2d(&Potential::DoubleWell, 10.0, |_, _| 1.0, 3.0, 200)
            .unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_detects_small_box() {
        let s = SpdMatrix::identity(2);
        match equilibrium_quadrature_2d(&Potential::Quadratic(s), 1.0, |_, _| 1.0, 2.0, 100) {
            Err(Error::BoxTooSmall { .. }) => {}
            other => panic!("expected BoxTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_converges_under_node_doubling() {
        let a = equilibrium_quadrature_2d(&Potential::DoubleWell, 10.0, |x, y| x * x + y * y, 3.0, 400)
            .unwrap();
        let b = equilibrium_quadrature_2d(&Potential::DoubleWell, 10.0, |x, y| x * x + y * y, 3.0, 800)
            .unwrap();
        assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
    }
}
