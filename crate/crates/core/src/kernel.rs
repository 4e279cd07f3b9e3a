//! Dense matrix primitives: exponential, spectral norm, eigen-decompositions,
//! the continuous Lyapunov solve and the Kalman rank test.
//!
//! Matrices are plain `nalgebra::DMatrix<f64>`. Symmetric and antisymmetric
//! inputs are wrapped in checked newtypes so that the structural tolerance is
//! applied once, at the boundary.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry / antisymmetry checks.
pub const SYM_TOL: f64 = 1e-12;
/// Relative (to the largest singular value) rank cut-off.
pub const RANK_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 10_000;

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

pub fn ensure_square(a: &DMatrix<f64>) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::InvalidMatrix(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    Ok(a.nrows())
}

pub fn ensure_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix("non-finite entry".into()))
    }
}

fn ensure_square_finite(a: &DMatrix<f64>) -> Result<usize> {
    let d = ensure_square(a)?;
    ensure_finite(a)?;
    Ok(d)
}

/// `‖A − Aᵀ‖_F / ‖A‖_F`, or 0 for the zero matrix.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.norm();
    if scale == 0.0 {
        0.0
    } else {
        (a - a.transpose()).norm() / scale
    }
}

/// `‖A + Aᵀ‖_F / ‖A‖_F`, or 0 for the zero matrix.
pub fn relative_symmetric_part(a: &DMatrix<f64>) -> f64 {
    let scale = a.norm();
    if scale == 0.0 {
        0.0
    } else {
        (a + a.transpose()).norm() / scale
    }
}

pub fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn antisymmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// A square matrix symmetric to within [`SYM_TOL`]; stored exactly symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        ensure_square_finite(&a)?;
        let asym = relative_asymmetry(&a);
        if asym > SYM_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self(symmetric_part(&a)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (values, _) = sym_eigen_unchecked(&self.0);
        values[0]
    }
}

/// A square matrix antisymmetric to within [`SYM_TOL`]; stored exactly antisymmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricMatrix(DMatrix<f64>);

impl AntisymmetricMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        ensure_square_finite(&a)?;
        let sym = relative_symmetric_part(&a);
        if sym > SYM_TOL {
            return Err(Error::NotAntisymmetric(sym));
        }
        Ok(Self(antisymmetric_part(&a)))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

// Padé coefficients b_0..b_m of the diagonal [m/m] approximant of exp.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152e0;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn pade_solve(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let num = v + u;
    let den = v - u;
    den.lu().solve(&num).expect("Padé denominator is nonsingular within the theta bounds")
}

fn pade_low_order(a: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    // even powers A^0, A^2, A^4, ...
    let mut even = vec![ident];
    for k in 1..b.len().div_ceil(2) {
        let next = &even[k - 1] * &a2;
        even.push(next);
    }
    let mut u_inner = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (k, &bk) in b.iter().enumerate() {
        if k % 2 == 1 {
            u_inner += &even[k / 2] * bk;
        } else {
            v += &even[k / 2] * bk;
        }
    }
    let u = a * u_inner;
    pade_solve(&u, &v)
}

fn pade13(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u_inner = u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = a * u_inner;
    let v_hi = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    pade_solve(&u, &v)
}

/// Matrix exponential `e^{M}` by scaling and squaring with Padé approximants
/// of degree 3 to 13.
pub fn exp(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square_finite(m)?;
    let norm = norm1(m);
    for (order, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match order {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return Ok(pade_low_order(m, coeffs));
        }
    }
    let squarings = if norm > THETA_13 { (norm / THETA_13).log2().ceil().max(0.0) as i32 } else { 0 };
    let scaled = m * 2f64.powi(-squarings);
    let mut r = pade13(&scaled);
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().all(|x| x.is_finite()) {
        Ok(r)
    } else {
        Err(Error::InvalidMatrix("matrix exponential overflowed".into()))
    }
}

/// The decay propagator `e^{-tA}` of the linear ODE `ẋ = -A x`.
pub fn expm(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    exp(&(a * (-t)))
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    ensure_finite(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.singular_values().max())
}

fn sym_eigen_unchecked(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetric_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// as columns.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    ensure_square_finite(a)?;
    let asym = relative_asymmetry(a);
    if asym > SYM_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(sym_eigen_unchecked(a))
}

/// Spectrum of a general real matrix via the real Schur form, sorted by real
/// then imaginary part.
pub fn general_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    ensure_square_finite(a)?;
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenFailure)?;
    let mut values: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::EigenFailure);
    }
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(values)
}

/// `min Re σ(A)`.
pub fn spectral_abscissa_min(a: &DMatrix<f64>) -> Result<f64> {
    Ok(general_eigenvalues(a)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// Solves `C Q + Q Cᵀ = 2 D` for positive stable `C` through the vectorized
/// `d² × d²` system `(I ⊗ C + C ⊗ I) vec(Q) = 2 vec(D)`.
pub fn solve_continuous_lyapunov(c: &DMatrix<f64>, d: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let n = ensure_square_finite(c)?;
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
    }
    let gap = spectral_abscissa_min(c)?;
    if gap <= 0.0 {
        return Err(Error::NotPositiveStable(gap));
    }
    let ident = DMatrix::<f64>::identity(n, n);
    let system = ident.kronecker(c) + c.kronecker(&ident);
    let rhs = DVector::from_column_slice((d.as_matrix() * 2.0).as_slice());
    let solution = system.lu().solve(&rhs).ok_or(Error::NotPositiveStable(gap))?;
    let q = DMatrix::from_column_slice(n, n, solution.as_slice());
    Ok(SymmetricMatrix(symmetric_part(&q)))
}

fn orthonormal_range(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 || m.norm() == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut cols: Vec<(usize, f64)> =
        svd.singular_values.iter().copied().enumerate().filter(|&(_, s)| s > RANK_TOL * smax).collect();
    cols.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut basis = DMatrix::zeros(n, cols.len());
    for (dst, &(src, _)) in cols.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

/// Kalman rank test: `rank [D, CD, …, C^{d-1}D] = d`.
///
/// The Krylov blocks are accumulated as an orthonormal basis of the reachable
/// subspace, which has the same rank as the block matrix but avoids the
/// growth of `C^k`.
pub fn kalman_rank(c: &DMatrix<f64>, d: &DMatrix<f64>) -> bool {
    let n = c.nrows();
    if !c.is_square() || d.shape() != (n, n) || ensure_finite(c).is_err() || ensure_finite(d).is_err() {
        return false;
    }
    let c_scale = c.norm();
    let c = if c_scale > 0.0 { c / c_scale } else { c.clone() };
    let mut basis = orthonormal_range(d);
    for _ in 1..n {
        if basis.ncols() == n {
            break;
        }
        let image = &c * &basis;
        let stacked = DMatrix::from_fn(n, 2 * basis.ncols(), |i, j| {
            if j < basis.ncols() {
                basis[(i, j)]
            } else {
                image[(i, j - basis.ncols())]
            }
        });
        let next = orthonormal_range(&stacked);
        if next.ncols() == basis.ncols() {
            break;
        }
        basis = next;
    }
    basis.ncols() == n
}

/// `V diag(f(λ)) Vᵀ` for a symmetric matrix given by its eigen-decomposition.
pub(crate) fn spectral_function(values: &DVector<f64>, vectors: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let scaled = DMatrix::from_diagonal(&values.map(f));
    vectors * scaled * vectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(expm(&z, 5.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn exp_of_diagonal() {
        let a = dmatrix![1.0, 0.0; 0.0, 2.0];
        let e = expm(&a, 1.0).unwrap();
        assert!((e[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn exp_rotation_generator() {
        let a = dmatrix![0.0, -3.0; 3.0, 0.0];
        for &t in &[0.01, 0.3, 2.0, 17.0] {
            let e = expm(&a, t).unwrap();
            let (c, s) = ((3.0 * t).cos(), (3.0 * t).sin());
            let expected = dmatrix![c, s; -s, c];
            assert!((e - expected).norm() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn exp_rejects_nan() {
        let a = dmatrix![f64::NAN, 0.0; 0.0, 1.0];
        assert!(matches!(expm(&a, 1.0), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn spectral_norm_simple() {
        assert!((spectral_norm(&DMatrix::identity(4, 4)).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_norm(&dmatrix![1.0, 0.0; 0.0, -3.0]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn sym_eigen_sorted() {
        let (vals, vecs) = sym_eigen(&dmatrix![2.0, 0.0; 0.0, 1.0]).unwrap();
        assert_eq!(vals.as_slice(), &[1.0, 2.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((vecs[(0, 1)].abs() - 1.0).abs() < 1e-15);
        let (vals, _) = sym_eigen(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sym_eigen_rejects_asymmetric() {
        assert!(matches!(sym_eigen(&dmatrix![1.0, 2.0; 0.0, 1.0]), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eigenvalues_of_diagonal_and_companion() {
        let ev = general_eigenvalues(&dmatrix![3.0, 0.0; 0.0, 5.0]).unwrap();
        assert!((ev[0].re - 3.0).abs() < 1e-14 && (ev[1].re - 5.0).abs() < 1e-14);
        // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let companion = dmatrix![0.0, 0.0, 6.0; 1.0, 0.0, -11.0; 0.0, 1.0, 6.0];
        let ev = general_eigenvalues(&companion).unwrap();
        for (z, root) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((z.re - root).abs() < 1e-9 && z.im.abs() < 1e-9, "{z}");
        }
    }

    #[test]
    fn eigenvalues_of_rotating_drift() {
        let mu: f64 = 3.0;
        let r2 = 2f64.sqrt();
        let c = dmatrix![2.0, mu / r2; -r2 * mu, 0.0];
        let ev = general_eigenvalues(&c).unwrap();
        let w = (mu * mu - 1.0).sqrt();
        assert!((ev[0].re - 1.0).abs() < 1e-12 && (ev[0].im + w).abs() < 1e-12);
        assert!((ev[1].re - 1.0).abs() < 1e-12 && (ev[1].im - w).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_identity_case() {
        let q = solve_continuous_lyapunov(&DMatrix::identity(3, 3), &SymmetricMatrix::identity(3)).unwrap();
        assert!((q.as_matrix() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let c = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            solve_continuous_lyapunov(&c, &SymmetricMatrix::identity(2)),
            Err(Error::NotPositiveStable(_))
        ));
    }

    #[test]
    fn kalman_examples() {
        let p = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert!(!kalman_rank(&p, &p));
        let c = dmatrix![0.3, -1.0; 4.0, 0.1];
        assert!(kalman_rank(&c, &DMatrix::identity(2, 2)));
        let eps: f64 = 0.05;
        let c = dmatrix![0.0, -7.0 / eps.sqrt(); 7.0 * eps.sqrt(), 2.0];
        let d = dmatrix![0.0, 0.0; 0.0, 2.0];
        assert!(kalman_rank(&c, &d));
        // explicit [D, CD] has rank 2 iff its 2x2 minor from columns (2, 3) is nonzero
        let cd = &c * &d;
        let minor = d[(0, 1)] * cd[(1, 1)] - d[(1, 1)] * cd[(0, 1)];
        assert!(minor.abs() > 1.0);
    }

    #[test]
    fn checked_newtypes() {
        assert!(SymmetricMatrix::new(dmatrix![1.0, 2.0; 2.0, 1.0]).is_ok());
        assert!(SymmetricMatrix::new(dmatrix![1.0, 2.0; 2.1, 1.0]).is_err());
        assert!(AntisymmetricMatrix::new(dmatrix![0.0, 2.0; -2.0, 0.0]).is_ok());
        assert!(AntisymmetricMatrix::new(dmatrix![1.0, 2.0; -2.0, 0.0]).is_err());
        assert!(SymmetricMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }
}
