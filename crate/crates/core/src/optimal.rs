//! Construction of the fastest-decaying admissible pair for a given
//! covariance, together with its Lyapunov certificate.
//!
//! The diffusion is rank one, `D = d (v ⊗ v)` with `v` the top eigenvector of
//! `K⁻¹`, so `D̃ = d λ_opt (v ⊗ v)`. In an orthonormal basis `Ψ` in which the
//! diagonal of `D̃` is constant, the antisymmetric matrix
//!
//! ```text
//! Ĵ_jk = (λ_j + λ_k) / (λ_j − λ_k) · ⟨ψ_j, D̃ ψ_k⟩
//! ```
//!
//! makes `Q = Ψ Λ Ψᵀ` satisfy `J̃Q − QJ̃ + QD̃ + D̃Q = 2 λ_opt Q`, so that
//! `‖x(t)‖_P` with `P = Q⁻¹` decays exactly like `e^{−λ_opt t}`. The
//! Euclidean constant is then `√κ(Q) = √(λ_d/λ_1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{AntisymmetricMatrix, SymmetricMatrix};
use crate::pairs::{make_pair_from_j, CoefficientPair, Covariance};

/// Orthonormal basis in which a symmetric matrix has constant diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EquidistributingBasis {
    psi: DMatrix<f64>,
    target: f64,
}

impl EquidistributingBasis {
    /// Columns `ψ_1, …, ψ_d`.
    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// Common diagonal value `Tr(D̃) / d`.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// Largest deviation `|ψ_kᵀ M ψ_k − target|`.
    pub fn max_deviation(&self, m: &DMatrix<f64>) -> f64 {
        let projected = self.psi.transpose() * m * &self.psi;
        projected.diagonal().iter().map(|x| (x - self.target).abs()).fold(0.0, f64::max)
    }
}

fn rotation_angle(a: f64, b: f64, r: f64) -> f64 {
    // solve a cos φ + b sin φ = r, then θ = φ/2 folded into (−π/2, π/2]
    let radius = a.hypot(b);
    let phase = b.atan2(a);
    let spread = (r / radius).clamp(-1.0, 1.0).acos();
    let fold = |phi: f64| {
        let mut theta = phi / 2.0;
        while theta > FRAC_PI_2 {
            theta -= PI;
        }
        while theta <= -FRAC_PI_2 {
            theta += PI;
        }
        theta
    };
    let t1 = fold(phase + spread);
    let t2 = fold(phase - spread);
    if (t1.abs() - t2.abs()).abs() <= 1e-12 {
        t1.max(t2)
    } else if t1.abs() < t2.abs() {
        t1
    } else {
        t2
    }
}

/// Givens sweep: repeatedly rotate a coordinate below the mean diagonal value
/// against one above it until every diagonal entry equals `Tr(D̃)/d`.
/// Each rotation pins one coordinate for good, so at most `d − 1` rotations
/// are applied.
pub fn equidistribute_basis(d_tilde: &SymmetricMatrix) -> Result<EquidistributingBasis> {
    let n = d_tilde.dim();
    let min = d_tilde.min_eigenvalue();
    if min < -1e-12 * d_tilde.as_matrix().norm().max(1.0) {
        return Err(Error::NotPsd(min));
    }
    let target = d_tilde.trace() / n as f64;
    let mut a = d_tilde.as_matrix().clone();
    let mut psi = DMatrix::<f64>::identity(n, n);
    let scale = a.diagonal().iter().fold(target.abs(), |m, x| m.max(x.abs()));
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);

    for _ in 0..n {
        let low = (0..n).find(|&k| a[(k, k)] < target - tol);
        let high = (0..n).find(|&k| a[(k, k)] > target + tol);
        let (Some(i), Some(j)) = (low, high) else {
            break;
        };
        let (p, q) = (i.min(j), i.max(j));
        let half_diff = (a[(i, i)] - a[(j, j)]) / 2.0;
        let cross = if i == p { a[(p, q)] } else { -a[(p, q)] };
        let rhs = target - (a[(p, p)] + a[(q, q)]) / 2.0;
        let theta = rotation_angle(half_diff, cross, rhs);
        let (s, c) = theta.sin_cos();

        let mut g = DMatrix::<f64>::identity(n, n);
        g[(p, p)] = c;
        g[(q, q)] = c;
        g[(q, p)] = s;
        g[(p, q)] = -s;
        psi = &psi * &g;
        a = g.transpose() * &a * &g;
        a = (&a + a.transpose()) * 0.5;
    }
    Ok(EquidistributingBasis { psi, target })
}

/// Positive, strictly increasing weights `λ_1 < … < λ_d` of the certificate
/// `Q = Ψ diag(λ) Ψᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSchedule {
    values: Vec<f64>,
}

impl LambdaSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let ok = values.len() >= 2
            && values.iter().all(|x| x.is_finite() && *x > 0.0)
            && values.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(Self { values })
        } else {
            Err(Error::DegenerateSchedule)
        }
    }

    /// `λ_k = (d − 1)/(c² − 1) + k − 1`, for which `λ_d / λ_1 = c²`.
    pub fn default_for(d: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 1.0) {
            return Err(Error::InvalidConstant(c));
        }
        if d < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {d}")));
        }
        let offset = (d as f64 - 1.0) / (c * c - 1.0);
        Self::new((1..=d).map(|k| offset + (k - 1) as f64).collect())
    }

    /// The older choice `λ_k = d + k`.
    pub fn shifted_integers(d: usize) -> Result<Self> {
        Self::new((1..=d).map(|k| (d + k) as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `λ_d / λ_1`.
    pub fn ratio(&self) -> f64 {
        self.values[self.values.len() - 1] / self.values[0]
    }

    /// Multiplicative constant `√(λ_d / λ_1)` certified by this schedule.
    pub fn constant(&self) -> f64 {
        self.ratio().sqrt()
    }
}

pub fn default_schedule(d: usize, c: f64) -> Result<LambdaSchedule> {
    LambdaSchedule::default_for(d, c)
}

/// `Ĵ_jk = (λ_j + λ_k)/(λ_j − λ_k) ⟨ψ_j, D̃ ψ_k⟩` for `j ≠ k`, zero diagonal.
pub fn build_jhat(
    basis: &EquidistributingBasis,
    schedule: &LambdaSchedule,
    d_tilde: &SymmetricMatrix,
) -> Result<AntisymmetricMatrix> {
    let n = d_tilde.dim();
    if basis.psi.nrows() != n || schedule.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if basis.psi.nrows() != n { basis.psi.nrows() } else { schedule.len() },
        });
    }
    let lam = schedule.values();
    if lam.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateSchedule);
    }
    let projected = basis.psi.transpose() * d_tilde.as_matrix() * &basis.psi;
    let mut jhat = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let value = (lam[j] + lam[k]) / (lam[j] - lam[k]) * projected[(j, k)];
            jhat[(j, k)] = value;
            jhat[(k, j)] = -value;
        }
    }
    AntisymmetricMatrix::new(jhat)
}

/// Which of the two mirror-image optimal constructions to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Standard,
    /// Uses `J̃ᵀ` and certifies decay in the `Q`-norm instead of the `P`-norm.
    Transpose,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Transpose => "transpose",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "transpose" => Ok(Variant::Transpose),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

/// An optimal pair with its Lyapunov certificate.
///
/// `lyapunov` and `norm_weight` are the variant's own matrices: for the
/// standard variant `lyapunov = Ψ Λ Ψᵀ` and `norm_weight = Ψ Λ⁻¹ Ψᵀ`, for the
/// transpose variant the two are swapped. In both cases
/// `J̃ L − L J̃ + L D̃ + D̃ L = 2 λ_opt L` with `L = lyapunov`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalCertificate {
    pub pair: CoefficientPair,
    pub direction: DVector<f64>,
    pub basis: EquidistributingBasis,
    /// `None` for isotropic covariances, where the reversible pair is optimal.
    pub schedule: Option<LambdaSchedule>,
    pub lyapunov: DMatrix<f64>,
    pub norm_weight: DMatrix<f64>,
    /// Certified constant `√κ(P)`; equals the requested budget `c` (or 1).
    pub constant: f64,
    pub lambda_opt: f64,
    pub variant: Variant,
}

impl OptimalCertificate {
    /// Frobenius norm of `J̃Q − QJ̃ + QD̃ + D̃Q − 2 λ_opt Q`.
    pub fn lyapunov_residual(&self) -> f64 {
        let j = self.pair.rotation_tilde();
        let d = self.pair.diffusion_tilde();
        let q = &self.lyapunov;
        (j * q - q * j + q * d + d * q - q * (2.0 * self.lambda_opt)).norm()
    }

    /// `‖x‖_P = √(xᵀ P x)`.
    pub fn weighted_norm(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.norm_weight * x)).sqrt()
    }

    /// Condition number of the norm weight (`= constant²`).
    pub fn weight_condition(&self) -> f64 {
        let (values, _) = crate::kernel::sym_eigen(&crate::kernel::symmetric_part(&self.norm_weight))
            .expect("norm weight is symmetric");
        values[values.len() - 1] / values[0]
    }
}

/// Optimal pair for `K` with multiplicative constant `c > 1`.
pub fn construct_optimal(cov: &Covariance, c: f64, variant: Variant) -> Result<OptimalCertificate> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::InvalidConstant(c));
    }
    if cov.is_isotropic() {
        return Ok(isotropic_certificate(cov, variant));
    }
    let schedule = LambdaSchedule::default_for(cov.dim(), c)?;
    construct_with_schedule(cov, &schedule, variant)
}

/// Same construction as [`construct_optimal`], with an explicit weight schedule.
pub fn construct_with_schedule(
    cov: &Covariance,
    schedule: &LambdaSchedule,
    variant: Variant,
) -> Result<OptimalCertificate> {
    let n = cov.dim();
    if schedule.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: schedule.len() });
    }
    let lambda_opt = cov.lambda_opt();
    let v = cov.optimal_direction();
    let d_opt = SymmetricMatrix::new(&v * v.transpose() * n as f64)?;
    let d_tilde = SymmetricMatrix::new(cov.congruence(d_opt.as_matrix()))?;
    let basis = equidistribute_basis(&d_tilde)?;
    let jhat = build_jhat(&basis, schedule, &d_tilde)?;
    let psi = basis.psi();
    let mut j_tilde = AntisymmetricMatrix::new(psi * jhat.as_matrix() * psi.transpose())?;

    let lam = DVector::from_row_slice(schedule.values());
    let mut lyapunov = psi * DMatrix::from_diagonal(&lam) * psi.transpose();
    let mut norm_weight = psi * DMatrix::from_diagonal(&lam.map(|x| 1.0 / x)) * psi.transpose();
    if variant == Variant::Transpose {
        j_tilde = j_tilde.transpose();
        std::mem::swap(&mut lyapunov, &mut norm_weight);
    }
    let j = AntisymmetricMatrix::new(cov.uncongruence(j_tilde.as_matrix()))?;
    let pair = make_pair_from_j(cov, &d_opt, &j)?;

    Ok(OptimalCertificate {
        pair,
        direction: v,
        basis,
        schedule: Some(schedule.clone()),
        lyapunov: crate::kernel::symmetric_part(&lyapunov),
        norm_weight: crate::kernel::symmetric_part(&norm_weight),
        constant: schedule.constant(),
        lambda_opt,
        variant,
    })
}

fn isotropic_certificate(cov: &Covariance, variant: Variant) -> OptimalCertificate {
    let n = cov.dim();
    let ident = DMatrix::<f64>::identity(n, n);
    OptimalCertificate {
        pair: CoefficientPair::reversible(cov),
        direction: cov.optimal_direction(),
        basis: EquidistributingBasis { psi: ident.clone(), target: cov.lambda_opt() },
        schedule: None,
        lyapunov: ident.clone(),
        norm_weight: ident,
        constant: 1.0,
        lambda_opt: cov.lambda_opt(),
        variant,
    }
}

/// Upper bounds `(‖C_opt‖_F, ‖D_opt‖_F)` for the default-schedule construction:
/// `λ_opt [d + √κ(K) · 2πc² / (√3 (c² − 1)) · √d (d − 1)]` and `d`.
pub fn frobenius_bound(cov: &Covariance, c: f64) -> Result<(f64, f64)> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::InvalidConstant(c));
    }
    let d = cov.dim() as f64;
    let c2 = c * c;
    let beta = 2.0 * PI * c2 / (3f64.sqrt() * (c2 - 1.0));
    let bound_c = cov.lambda_opt() * (d + cov.condition_number().sqrt() * beta * d.sqrt() * (d - 1.0));
    Ok((bound_c, d))
}

/// One row of the dimension-scaling study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub dim: usize,
    pub actual: f64,
    pub bound: f64,
}

/// Test covariance `diag(1, 2, …, 2)`: fixed condition number 2 for every `d`.
pub fn growth_family(d: usize) -> Result<Covariance> {
    let mut diag = vec![2.0; d];
    if let Some(first) = diag.first_mut() {
        *first = 1.0;
    }
    Covariance::from_diagonal(&diag)
}

/// Actual `‖C_opt‖_F` against its bound over the `diag(1, 2, …, 2)` family.
pub fn growth_study(c: f64, dims: &[usize]) -> Result<Vec<GrowthRow>> {
    dims.iter()
        .map(|&d| {
            if d < 2 {
                return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {d}")));
            }
            let cov = growth_family(d)?;
            let cert = construct_optimal(&cov, c, Variant::Standard)?;
            let (bound, _) = frobenius_bound(&cov, c)?;
            Ok(GrowthRow { dim: d, actual: cert.pair.drift_frobenius(), bound })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn identity_needs_no_rotation() {
        let b = equidistribute_basis(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(b.psi(), &DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn two_dimensional_basis_is_diagonal_rotation() {
        for diag in [[2.0, 0.0], [0.0, 2.0]] {
            let d = SymmetricMatrix::from_diagonal(&diag).unwrap();
            let b = equidistribute_basis(&d).unwrap();
            let h = std::f64::consts::FRAC_1_SQRT_2;
            assert!((b.psi() - dmatrix![h, -h; h, h]).norm() < 1e-15, "{}", b.psi());
            assert!(b.max_deviation(d.as_matrix()) < 1e-15);
        }
    }

    #[test]
    fn schedule_formula() {
        let s = default_schedule(2, 2f64.sqrt()).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-15 && (s.values()[1] - 2.0).abs() < 1e-15);
        let s = default_schedule(5, 2.0).unwrap();
        assert!((s.values()[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.values()[4] - 16.0 / 3.0).abs() < 1e-14);
        assert!((s.ratio() - 4.0).abs() < 1e-12);
        assert!(matches!(default_schedule(3, 1.0), Err(Error::InvalidConstant(_))));
        assert!(matches!(LambdaSchedule::new(vec![1.0, 1.0]), Err(Error::DegenerateSchedule)));
        let gm = LambdaSchedule::shifted_integers(2).unwrap();
        assert_eq!(gm.values(), &[3.0, 4.0]);
    }

    #[test]
    fn jhat_vanishes_for_scalar_diffusion() {
        let d = SymmetricMatrix::new(DMatrix::identity(3, 3) * 0.7).unwrap();
        let b = equidistribute_basis(&d).unwrap();
        let j = build_jhat(&b, &default_schedule(3, 2.0).unwrap(), &d).unwrap();
        assert_eq!(j.as_matrix().norm(), 0.0);
    }

    #[test]
    fn isotropic_covariance_gives_reversible_pair() {
        let cov = Covariance::from_diagonal(&[1.0, 1.0, 1.0]).unwrap();
        let cert = construct_optimal(&cov, 2.0, Variant::Standard).unwrap();
        assert!((cert.pair.drift() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
        assert!((cert.pair.diffusion().as_matrix() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
        assert_eq!(cert.pair.rotation().norm(), 0.0);
        assert_eq!(cert.constant, 1.0);
    }

    #[test]
    fn rejects_small_budget() {
        let cov = Covariance::from_diagonal(&[1.0, 2.0]).unwrap();
        assert!(matches!(construct_optimal(&cov, 0.9, Variant::Standard), Err(Error::InvalidConstant(_))));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.5))).collect();
        assert!((loglog_slope(&pts) - 1.5).abs() < 1e-12);
    }
}
