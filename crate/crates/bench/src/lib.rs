//! Benchmark fixtures shared by the criterion targets.

use fpopt_core::{construct_optimal, CoefficientPair, Covariance, Schedule, Variant};

/// `diag(1/ε, 1)` with ε = 0.05.
pub fn anisotropic_2d() -> Covariance {
    Covariance::from_diagonal(&[20.0, 1.0]).expect("positive diagonal")
}

/// Covariance `diag(1, 2, …, 2)` of dimension `d`.
pub fn family(d: usize) -> Covariance {
    fpopt_core::growth_family(d).expect("positive diagonal")
}

/// Constant schedule running the optimal pair for budget `c`.
pub fn optimal_schedule(cov: &Covariance, c: f64) -> Schedule {
    let cert = construct_optimal(cov, c, Variant::Standard).expect("valid budget");
    Schedule::constant(cov.clone(), cert.pair).expect("admissible pair")
}

pub fn optimal_pair(cov: &Covariance, c: f64) -> CoefficientPair {
    construct_optimal(cov, c, Variant::Standard).expect("valid budget").pair
}
