use nalgebra::DMatrix;
use nonrev_core::{Matrix, SpdMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random SPD matrix with condition number `kappa`: random orthogonal
/// frame, eigenvalues log-spaced in `[1/kappa, 1]`.
pub fn random_spd(n: usize, kappa: f64, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let q = random_orthogonal(n, rng);
    let eigs: Vec<f64> = (0..n)
        .map(|k| {
            if n == 1 {
                1.0
            } else {
                let t = k as f64 / (n - 1) as f64;
                kappa.powf(-(1.0 - t))
            }
        })
        .collect();
    let d = Matrix::from_diagonal(&nalgebra::DVector::from_row_slice(&eigs));
    let m = &q * d * q.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).expect("random SPD construction")
}

pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let qr = g.qr();
    qr.q()
}

pub fn random_antisymmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = rng.random_range(-scale..scale);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    m
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
