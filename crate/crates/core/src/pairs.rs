//! Gaussian equilibria and the admissible coefficient pairs that preserve them.
//!
//! A pair `(C, D)` keeps the centred Gaussian with covariance `K` stationary
//! iff `D ⪰ 0`, `Tr D ≤ d` and `C = (D + J) K⁻¹` for some antisymmetric `J`.
//! Every pair also carries its symmetrized form `C̃ = K^{-1/2} C K^{1/2}`,
//! whose symmetric part is `D̃ = K^{-1/2} D K^{-1/2}`; the drift ODE
//! `ẋ = −C̃ x` has the same propagator norm as the Fokker–Planck evolution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{
    self, antisymmetric_part, ensure_finite, ensure_square, spectral_function, AntisymmetricMatrix, SymmetricMatrix,
    RANK_TOL,
};

/// Absolute slack on the trace budget `Tr D ≤ d`.
pub const TRACE_TOL: f64 = 1e-12;
/// Relative tolerance on the stationarity residual `‖CK + KCᵀ − 2D‖_F`.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;
/// Relative spread of `σ(K)` below which `K` is treated as isotropic.
pub const ISOTROPY_TOL: f64 = 1e-12;

/// Covariance of the target Gaussian, with its spectral data cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    k: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    inverse: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl Covariance {
    /// Accepts a full symmetric positive definite matrix.
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        let k = SymmetricMatrix::new(k)?.into_matrix();
        let (eigenvalues, eigenvectors) = kernel::sym_eigen(&k)?;
        if eigenvalues[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite(eigenvalues[0]));
        }
        let inverse = spectral_function(&eigenvalues, &eigenvectors, |x| 1.0 / x);
        let sqrt = spectral_function(&eigenvalues, &eigenvectors, f64::sqrt);
        let inv_sqrt = spectral_function(&eigenvalues, &eigenvectors, |x| 1.0 / x.sqrt());
        Ok(Self {
            k,
            eigenvalues,
            eigenvectors,
            inverse: kernel::symmetric_part(&inverse),
            sqrt: kernel::symmetric_part(&sqrt),
            inv_sqrt: kernel::symmetric_part(&inv_sqrt),
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidMatrix("empty diagonal".into()));
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// Builds `K = V diag(values) Vᵀ` from eigenvalues and an orthogonal matrix
    /// whose columns are the eigenvectors.
    pub fn from_eigen(values: &[f64], vectors: DMatrix<f64>) -> Result<Self> {
        let d = ensure_square(&vectors)?;
        ensure_finite(&vectors)?;
        if values.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: values.len() });
        }
        let orth = (vectors.transpose() * &vectors - DMatrix::<f64>::identity(d, d)).norm();
        if orth > 1e-10 {
            return Err(Error::InvalidMatrix(format!(
                "eigenvector matrix is not orthogonal (‖VᵀV − I‖_F = {orth:.3e})"
            )));
        }
        let vals = DVector::from_row_slice(values);
        Self::new(kernel::symmetric_part(&spectral_function(&vals, &vectors, |x| x)))
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `K^{1/2}`.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    /// `K^{-1/2}`.
    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    /// Eigenvalues of `K`, ascending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.k.trace()
    }

    pub fn condition_number(&self) -> f64 {
        self.eigenvalues[self.dim() - 1] / self.eigenvalues[0]
    }

    /// Largest achievable decay rate `max σ(K⁻¹) = 1 / min σ(K)`.
    pub fn lambda_opt(&self) -> f64 {
        1.0 / self.eigenvalues[0]
    }

    pub fn is_isotropic(&self) -> bool {
        let lo = self.eigenvalues[0];
        let hi = self.eigenvalues[self.dim() - 1];
        (hi - lo) <= ISOTROPY_TOL * hi
    }

    /// Unit eigenvector of `K⁻¹` for its largest eigenvalue, signed so that its
    /// first non-negligible component is positive.
    pub fn optimal_direction(&self) -> DVector<f64> {
        let (_, vectors) = kernel::sym_eigen(&self.inverse).expect("K⁻¹ is symmetric");
        let mut v: DVector<f64> = vectors.column(self.dim() - 1).into_owned();
        v /= v.norm();
        if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                v = -v;
            }
        }
        v
    }

    /// Entrywise closeness of two covariances, relative to `‖K‖_F`.
    pub fn approx_eq(&self, other: &Covariance, rel_tol: f64) -> bool {
        self.dim() == other.dim() && (&self.k - &other.k).norm() <= rel_tol * self.k.norm()
    }

    /// `K^{-1/2} M K^{-1/2}`.
    pub fn congruence(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.inv_sqrt * m * &self.inv_sqrt
    }

    /// `K^{1/2} M K^{1/2}`, inverse of [`Covariance::congruence`].
    pub fn uncongruence(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.sqrt * m * &self.sqrt
    }
}

/// Fokker–Planck data `(C, D)` together with the derived `J = CK − D` and the
/// symmetrized matrices `C̃`, `D̃`, `J̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPair {
    c: DMatrix<f64>,
    d: SymmetricMatrix,
    j: DMatrix<f64>,
    c_tilde: DMatrix<f64>,
    d_tilde: DMatrix<f64>,
    j_tilde: DMatrix<f64>,
}

impl CoefficientPair {
    /// Wraps an explicit drift/diffusion pair. Only shapes, finiteness and the
    /// symmetry of `D` are checked here; use [`validate_pair`] for admissibility.
    pub fn from_drift(cov: &Covariance, c: DMatrix<f64>, d: SymmetricMatrix) -> Result<Self> {
        let n = ensure_square(&c)?;
        ensure_finite(&c)?;
        if n != cov.dim() {
            return Err(Error::DimensionMismatch { expected: cov.dim(), found: n });
        }
        if d.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
        }
        let j = &c * cov.matrix() - d.as_matrix();
        let c_tilde = cov.inv_sqrt() * &c * cov.sqrt();
        let d_tilde = kernel::symmetric_part(&cov.congruence(d.as_matrix()));
        let j_tilde = cov.congruence(&j);
        Ok(Self { c, d, j, c_tilde, d_tilde, j_tilde })
    }

    /// The reversible pair `(K⁻¹, I)`.
    pub fn reversible(cov: &Covariance) -> Self {
        make_pair_from_j(cov, &SymmetricMatrix::identity(cov.dim()), &AntisymmetricMatrix::zeros(cov.dim()))
            .expect("identity diffusion is admissible")
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn diffusion(&self) -> &SymmetricMatrix {
        &self.d
    }

    /// `J = CK − D`; antisymmetric exactly when the pair is admissible.
    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn drift_tilde(&self) -> &DMatrix<f64> {
        &self.c_tilde
    }

    pub fn diffusion_tilde(&self) -> &DMatrix<f64> {
        &self.d_tilde
    }

    pub fn rotation_tilde(&self) -> &DMatrix<f64> {
        &self.j_tilde
    }

    pub fn drift_frobenius(&self) -> f64 {
        self.c.norm()
    }
}

fn check_diffusion(d: &SymmetricMatrix) -> Result<()> {
    let n = d.dim() as f64;
    let trace = d.trace();
    if trace > n + TRACE_TOL {
        return Err(Error::TraceBudgetExceeded { trace, budget: n });
    }
    let min = d.min_eigenvalue();
    if min < -TRACE_TOL * d.as_matrix().norm().max(1.0) {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// `C = (D + J) K⁻¹` for `D ⪰ 0` with `Tr D ≤ d` and antisymmetric `J`.
pub fn make_pair_from_j(cov: &Covariance, d: &SymmetricMatrix, j: &AntisymmetricMatrix) -> Result<CoefficientPair> {
    let n = cov.dim();
    for found in [d.dim(), j.dim()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    check_diffusion(d)?;
    let c = (d.as_matrix() + j.as_matrix()) * cov.inverse();
    let d_tilde = kernel::symmetric_part(&cov.congruence(d.as_matrix()));
    let j_tilde = antisymmetric_part(&cov.congruence(j.as_matrix()));
    let c_tilde = &d_tilde + &j_tilde;
    Ok(CoefficientPair { c, d: d.clone(), j: j.as_matrix().clone(), c_tilde, d_tilde, j_tilde })
}

/// Quantitative admissibility and uniqueness diagnostics for a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `‖CK + KCᵀ − 2D‖_F`.
    pub lyapunov_residual: f64,
    /// Threshold the residual was compared against.
    pub lyapunov_tolerance: f64,
    pub trace: f64,
    pub trace_ok: bool,
    pub min_eigenvalue_d: f64,
    pub psd: bool,
    pub rank_d: usize,
    pub admissible: bool,
    /// `min Re σ(C)`; `None` when the eigenvalue iteration failed.
    pub spectral_gap: Option<f64>,
    pub positive_stable: bool,
    pub hypoelliptic: bool,
    pub steady_state_unique: bool,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.admissible && self.steady_state_unique
    }
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.norm() == 0.0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

pub fn validate_pair(cov: &Covariance, pair: &CoefficientPair) -> ValidationReport {
    let k = cov.matrix();
    let c = pair.drift();
    let d = pair.diffusion().as_matrix();
    let n = cov.dim() as f64;

    let residual = (c * k + k * c.transpose() - d * 2.0).norm();
    let tolerance = ADMISSIBILITY_TOL * (c.norm() * k.norm() + d.norm());
    let trace = d.trace();
    let trace_ok = trace <= n + TRACE_TOL;
    let min_eigenvalue_d = pair.diffusion().min_eigenvalue();
    let psd = min_eigenvalue_d >= -TRACE_TOL * d.norm().max(1.0);
    let admissible = residual <= tolerance && trace_ok && psd;

    let spectral_gap = kernel::spectral_abscissa_min(c).ok();
    let positive_stable = spectral_gap.is_some_and(|g| g > 0.0);
    let hypoelliptic = kernel::kalman_rank(c, d);

    ValidationReport {
        lyapunov_residual: residual,
        lyapunov_tolerance: tolerance,
        trace,
        trace_ok,
        min_eigenvalue_d,
        psd,
        rank_d: numerical_rank(d),
        admissible,
        spectral_gap,
        positive_stable,
        hypoelliptic,
        steady_state_unique: positive_stable && hypoelliptic,
    }
}

/// `ρ(C) = min Re σ(C)`, the sharp asymptotic decay rate.
pub fn spectral_gap(pair: &CoefficientPair) -> Result<f64> {
    kernel::spectral_abscissa_min(pair.drift())
}

/// Norm-level version of the baseline estimate for the split evolution that
/// runs the reversible dynamics up to `t₀ = min σ(K) / 2`:
/// `1` for `t ≤ t₀`, otherwise `min{1, √(c̃ κ(K)) e^{(1 − 2λ_opt t)/2}}`.
pub fn gm_envelope(cov: &Covariance, c_tilde: f64, t: f64) -> Result<f64> {
    if !(c_tilde.is_finite() && c_tilde > 1.0) {
        return Err(Error::InvalidConstant(c_tilde));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let t0 = cov.eigenvalues()[0] / 2.0;
    if t <= t0 {
        return Ok(1.0);
    }
    let bound = (c_tilde * cov.condition_number()).sqrt() * ((1.0 - 2.0 * cov.lambda_opt() * t) / 2.0).exp();
    Ok(bound.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn sym(m: DMatrix<f64>) -> SymmetricMatrix {
        SymmetricMatrix::new(m).unwrap()
    }

    fn anti(m: DMatrix<f64>) -> AntisymmetricMatrix {
        AntisymmetricMatrix::new(m).unwrap()
    }

    #[test]
    fn covariance_cache() {
        let k = Covariance::new(dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap();
        assert!((k.sqrt() * k.sqrt() - k.matrix()).norm() < 1e-14);
        assert!((k.inverse() * k.matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
        let min = k.eigenvalues()[0];
        assert!((k.lambda_opt() - 1.0 / min).abs() < 1e-15);
    }

    #[test]
    fn covariance_input_forms_agree() {
        let full = Covariance::new(dmatrix![3.0, 0.0; 0.0, 0.5]).unwrap();
        let diag = Covariance::from_diagonal(&[3.0, 0.5]).unwrap();
        let eig = Covariance::from_eigen(&[0.5, 3.0], dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert!(full.approx_eq(&diag, 1e-15));
        assert!(full.approx_eq(&eig, 1e-15));
        assert!((full.condition_number() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn covariance_rejects_indefinite() {
        assert!(matches!(Covariance::from_diagonal(&[1.0, -1.0]), Err(Error::NotPositiveDefinite(_))));
        assert!(Covariance::from_eigen(&[1.0, 2.0], dmatrix![1.0, 1.0; 0.0, 1.0]).is_err());
    }

    #[test]
    fn optimal_direction_sign() {
        let k = Covariance::new(dmatrix![2.0, 0.0; 0.0, 1.0]).unwrap();
        let v = k.optimal_direction();
        assert_eq!(v.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn reversible_pair_is_inverse_covariance() {
        let k = Covariance::from_diagonal(&[1.0, 2.0]).unwrap();
        let p = make_pair_from_j(&k, &SymmetricMatrix::identity(2), &AntisymmetricMatrix::zeros(2)).unwrap();
        assert!((p.drift() - dmatrix![1.0, 0.0; 0.0, 0.5]).norm() < 1e-15);
        let report = validate_pair(&k, &p);
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.rank_d, 2);
    }

    #[test]
    fn rotating_pair_matches_closed_form() {
        let k = Covariance::from_diagonal(&[1.0, 2.0]).unwrap();
        let mu = 5.0 / 3.0;
        let r2 = 2f64.sqrt();
        // J = K^{1/2} J~ K^{1/2} with J~ = [[0, μ], [-μ, 0]]
        let j = anti(dmatrix![0.0, r2 * mu; -r2 * mu, 0.0]);
        let p = make_pair_from_j(&k, &sym(dmatrix![2.0, 0.0; 0.0, 0.0]), &j).unwrap();
        let expected = dmatrix![2.0, mu / r2; -r2 * mu, 0.0];
        assert!((p.drift() - expected).abs().max() < 1e-14);
        assert!((p.rotation_tilde() - dmatrix![0.0, mu; -mu, 0.0]).abs().max() < 1e-14);
    }

    #[test]
    fn trace_budget_and_psd_enforced() {
        let k = Covariance::from_diagonal(&[1.0, 2.0]).unwrap();
        let j = AntisymmetricMatrix::zeros(2);
        assert!(matches!(
            make_pair_from_j(&k, &sym(dmatrix![2.0, 0.0; 0.0, 0.5]), &j),
            Err(Error::TraceBudgetExceeded { .. })
        ));
        assert!(matches!(make_pair_from_j(&k, &sym(dmatrix![2.5, 0.0; 0.0, -0.5]), &j), Err(Error::NotPsd(_))));
    }

    #[test]
    fn degenerate_pair_is_not_hypoelliptic() {
        let k = Covariance::from_diagonal(&[1.0, 1.0]).unwrap();
        let m = dmatrix![1.0, 0.0; 0.0, 0.0];
        let p = CoefficientPair::from_drift(&k, m.clone(), sym(m)).unwrap();
        let report = validate_pair(&k, &p);
        assert!(report.admissible);
        assert!(!report.hypoelliptic);
        assert!(!report.positive_stable);
        assert!(!report.all_pass());
    }

    #[test]
    fn non_admissible_drift_reported() {
        let k = Covariance::from_diagonal(&[1.0, 2.0]).unwrap();
        let p = CoefficientPair::from_drift(&k, DMatrix::identity(2, 2), SymmetricMatrix::identity(2)).unwrap();
        let report = validate_pair(&k, &p);
        assert!(!report.admissible);
        assert!(report.lyapunov_residual > 1.0);
    }

    #[test]
    fn gap_of_diagonal_drift() {
        let k = Covariance::from_diagonal(&[1.0, 1.0 / 3.0]).unwrap();
        let p = CoefficientPair::reversible(&k);
        assert!((spectral_gap(&p).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gm_envelope_shape() {
        let k = Covariance::from_diagonal(&[20.0, 1.0]).unwrap();
        assert_eq!(gm_envelope(&k, 2.0, 0.0).unwrap(), 1.0);
        assert!(matches!(gm_envelope(&k, 1.0, 1.0), Err(Error::InvalidConstant(_))));
        let t: f64 = 30.0;
        let expected = (2.0 * 20.0 * 1f64.exp()).sqrt() * (-t).exp();
        assert!((gm_envelope(&k, 2.0, t).unwrap() - expected).abs() < 1e-12 * expected);
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let v = gm_envelope(&k, 2.0, i as f64 * 0.05).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }
}
