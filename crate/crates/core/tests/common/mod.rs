//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use fpopt_core::{
    make_pair_from_j, AntisymmetricMatrix, CoefficientPair, Covariance, DMatrix, DVector, Schedule, SymmetricMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, n, n).qr().q()
}

/// SPD covariance with eigenvalues log-uniform in `[0.2, 20]`.
pub fn random_covariance(rng: &mut impl Rng, n: usize) -> Covariance {
    let values: Vec<f64> = (0..n).map(|_| (rng.random_range(0.2f64.ln()..20f64.ln())).exp()).collect();
    Covariance::from_eigen(&values, random_orthogonal(rng, n)).unwrap()
}

/// Random PSD matrix of rank at most `rank`, scaled to the given trace.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize, trace: f64) -> SymmetricMatrix {
    let g = gaussian_matrix(rng, n, rank);
    let m = &g * g.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let scale = trace / m.trace();
    SymmetricMatrix::new(m * scale).unwrap()
}

pub fn random_antisymmetric(rng: &mut impl Rng, n: usize, scale: f64) -> AntisymmetricMatrix {
    let g = gaussian_matrix(rng, n, n) * scale;
    AntisymmetricMatrix::new((&g - g.transpose()) * 0.5).unwrap()
}

/// Admissible pair with `Tr D ≤ d`, random rank and random rotation.
pub fn random_pair(rng: &mut impl Rng, cov: &Covariance) -> CoefficientPair {
    let n = cov.dim();
    let rank = rng.random_range(1..=n);
    let trace = n as f64 * rng.random_range(0.05..=1.0);
    let d = random_psd(rng, n, rank, trace);
    let scale = rng.random_range(0.0..5.0);
    let j = random_antisymmetric(rng, n, scale);
    make_pair_from_j(cov, &d, &j).unwrap()
}

/// `J̃Q − QJ̃ + QD̃ + D̃Q − 2λQ` written out term by term.
pub fn lyapunov_residual(pair: &CoefficientPair, q: &DMatrix<f64>, rate: f64) -> f64 {
    let j = pair.rotation_tilde();
    let d = pair.diffusion_tilde();
    (j * q - q * j + q * d + d * q - q * (2.0 * rate)).norm()
}

/// Spectral norm via power iteration on `AᵀA`.
pub fn power_norm(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    let mut x = DVector::from_element(a.ncols(), 1.0);
    x[0] += 0.3;
    let mut est = 0.0;
    for _ in 0..500 {
        let y = &ata * &x;
        let n = y.norm();
        if n == 0.0 {
            return 0.0;
        }
        x = y / n;
        est = n;
    }
    est.sqrt()
}

/// Dormand–Prince 5(4) integration of `Ẋ = −A X` from `X(0) = x0` over
/// `[0, t]` with adaptive steps.
pub fn dopri5(a: &DMatrix<f64>, x0: &DMatrix<f64>, t: f64, rtol: f64, atol: f64) -> DMatrix<f64> {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let f = |x: &DMatrix<f64>| -(a * x);
    let mut x = x0.clone();
    let mut s = 0.0;
    let mut h = (t / 100.0).clamp(1e-6, 0.01);
    if t <= 0.0 {
        return x;
    }
    while s < t {
        h = h.min(t - s);
        let mut k: Vec<DMatrix<f64>> = vec![f(&x)];
        for row in C.iter() {
            let mut stage = x.clone();
            for (kj, &c) in k.iter().zip(row.iter()) {
                if c != 0.0 {
                    stage += kj * (h * c);
                }
            }
            k.push(f(&stage));
        }
        let mut x5 = x.clone();
        let mut x4 = x.clone();
        for i in 0..7 {
            x5 += &k[i] * (h * B5[i]);
            x4 += &k[i] * (h * B4[i]);
        }
        let err =
            (&x5 - &x4).iter().zip(x5.iter()).map(|(e, v)| (e / (atol + rtol * v.abs())).powi(2)).sum::<f64>().sqrt()
                / (x5.len() as f64).sqrt();
        if err <= 1.0 {
            s += h;
            x = x5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    x
}

/// ODE oracle for `T(t₂, t₁)` of a schedule: integrate piece by piece,
/// restarting at every breakpoint.
pub fn ode_oracle(schedule: &Schedule, t1: f64, t2: f64) -> DMatrix<f64> {
    let n = schedule.covariance().dim();
    let mut x = DMatrix::<f64>::identity(n, n);
    let mut starts = vec![0.0];
    starts.extend_from_slice(schedule.breakpoints());
    for (i, pair) in schedule.pairs().iter().enumerate() {
        let lo = starts[i].max(t1);
        let hi = starts.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t2);
        if hi > lo {
            x = dopri5(pair.drift_tilde(), &x, hi - lo, 1e-13, 1e-15);
        }
    }
    x
}

/// Pair with `C̃ = [[0, −μ], [μ, 2]]`, admissible for `K = diag(1/ε, 1)`.
pub fn rotating_pair(cov: &Covariance, mu: f64) -> CoefficientPair {
    let d = SymmetricMatrix::from_diagonal(&[0.0, 2.0]).unwrap();
    let j_tilde = DMatrix::from_row_slice(2, 2, &[0.0, -mu, mu, 0.0]);
    let j = AntisymmetricMatrix::new(cov.uncongruence(&j_tilde)).unwrap();
    let d_raw = SymmetricMatrix::new(cov.uncongruence(d.as_matrix())).unwrap();
    make_pair_from_j(cov, &d_raw, &j).unwrap()
}

/// Pair with prescribed diagonal `D̃` and no rotation.
pub fn diagonal_tilde_pair(cov: &Covariance, diag: &[f64]) -> CoefficientPair {
    let d_tilde = DMatrix::from_diagonal(&DVector::from_row_slice(diag));
    let d = SymmetricMatrix::new(cov.uncongruence(&d_tilde)).unwrap();
    make_pair_from_j(cov, &d, &AntisymmetricMatrix::zeros(cov.dim())).unwrap()
}

pub fn epsilon_covariance() -> Covariance {
    Covariance::from_diagonal(&[20.0, 1.0]).unwrap()
}

/// `μ = (c² + 1)/(c² − 1)` for `c = √((μ + 1)/(μ − 1))`.
pub fn mu_for(c: f64) -> f64 {
    (c * c + 1.0) / (c * c - 1.0)
}

/// Candidate pair on `[0, t₀)`, then the `μ = 7` rotating pair.
pub fn fp_schedule(cov: &Covariance, first: CoefficientPair, t0: f64) -> Schedule {
    Schedule::piecewise(cov.clone(), vec![(first, t0)], rotating_pair(cov, 7.0)).unwrap()
}

pub fn fp_candidates(cov: &Covariance) -> Vec<(String, CoefficientPair)> {
    let eps = 0.05;
    vec![
        ("FP1".into(), rotating_pair(cov, 7.0)),
        ("FP2".into(), diagonal_tilde_pair(cov, &[eps, 1.0])),
        ("FP3".into(), diagonal_tilde_pair(cov, &[2.0 * eps / (1.0 + eps); 2])),
        ("FP4".into(), rotating_pair(cov, 3.0)),
        ("FP5".into(), rotating_pair(cov, 11.0)),
    ]
}

/// Least-squares fit `y ≈ a + b t + c t²`, returned as `(a, b, c)`.
pub fn quadratic_fit(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = DMatrix::from_fn(ts.len(), 3, |i, j| ts[i].powi(j as i32));
    let y = DVector::from_row_slice(ys);
    let sol = (m.transpose() * &m).lu().solve(&(m.transpose() * y)).unwrap();
    (sol[0], sol[1], sol[2])
}
