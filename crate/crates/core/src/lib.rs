//! Fastest-decaying linear Fokker–Planck dynamics for a prescribed Gaussian
//! equilibrium.
//!
//! Given a covariance `K`, the crate constructs admissible coefficient pairs
//! `(C, D)` whose evolution converges at the maximal rate `max σ(K⁻¹)` with a
//! multiplicative constant `c > 1` chosen by the caller, certifies them with
//! an explicit Lyapunov matrix, and measures exact propagator norms (and
//! their sharp exponential envelopes) for constant or piecewise-constant
//! coefficients through the `d`-dimensional drift ODE.
//!
//! ```
//! use fpopt_core::{construct_optimal, Covariance, Variant};
//!
//! let k = Covariance::from_diagonal(&[1.0, 2.0]).unwrap();
//! let cert = construct_optimal(&k, 2.0, Variant::Standard).unwrap();
//! assert!((cert.lambda_opt - 1.0).abs() < 1e-15);
//! assert!(cert.lyapunov_residual() < 1e-12);
//! ```

pub mod error;
pub mod kernel;
pub mod optimal;
pub mod pairs;
pub mod propagator;

pub use error::{Error, Result};
pub use kernel::{AntisymmetricMatrix, SymmetricMatrix};
pub use optimal::{
    build_jhat, construct_optimal, construct_with_schedule, default_schedule, equidistribute_basis, frobenius_bound,
    growth_family, growth_study, loglog_slope, EquidistributingBasis, GrowthRow, LambdaSchedule, OptimalCertificate,
    Variant,
};
pub use pairs::{
    gm_envelope, make_pair_from_j, spectral_gap, validate_pair, CoefficientPair, Covariance, ValidationReport,
};
pub use propagator::{
    best_constant_2d, compare_schedules, envelope_curve, envelope_scan, initial_decay_rate, max_initial_decay,
    norm_curve, norm_curve_with_rate, ode_propagator, sharp_constant, sharp_constant_default, tangency_time,
    tangency_times, EnvelopeScan, NormCurve, RankingRow, Schedule,
};

pub use nalgebra::{self, DMatrix, DVector};
