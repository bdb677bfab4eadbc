//! Dense complex linear algebra: products, commutators, structural predicates
//! and exponentials of (anti-)Hermitian matrices by eigendecomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default entrywise Hermiticity tolerance.
pub const HERM_TOL: f64 = 1e-12;
/// Default unitarity tolerance.
pub const UNIT_TOL: f64 = 1e-10;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Outcome of a structural predicate: the flag and the measured defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub ok: bool,
    pub defect: f64,
}

fn square_dim(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

fn same_dim(a: &CMatrix, b: &CMatrix) -> Result<usize> {
    let da = square_dim(a)?;
    let db = square_dim(b)?;
    if da != db {
        return Err(Error::DimensionMismatch(da, db));
    }
    Ok(da)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_real_diag(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(d.len(), d.iter().map(|&x| r(x))))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    same_dim(a, b)?;
    Ok(a * b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    same_dim(a, b)?;
    Ok(a * b - b * a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    same_dim(a, b)?;
    Ok(a * b + b * a)
}

/// Max entry of |M − M†|.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> Check {
    if m.nrows() != m.ncols() {
        return Check { ok: false, defect: f64::INFINITY };
    }
    let defect = hermitian_defect(m);
    Check { ok: defect <= tol, defect }
}

/// Max entry of |M†M − I|.
pub fn is_unitary(m: &CMatrix, tol: f64) -> Check {
    if m.nrows() != m.ncols() {
        return Check { ok: false, defect: f64::INFINITY };
    }
    let defect = max_abs(&(m.adjoint() * m - identity(m.nrows())));
    Check { ok: defect <= tol, defect }
}

/// conj(u)·v
pub fn inner(u: &CVector, v: &CVector) -> Result<Complex64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    Ok(u.dotc(v))
}

/// |‖v‖ − 1|
pub fn norm_defect(v: &CVector) -> f64 {
    (v.norm() - 1.0).abs()
}

/// (M + M†)/2
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * r(0.5)
}

/// Eigendecomposition of a Hermitian matrix, reusable for many exponentials.
#[derive(Debug, Clone)]
pub struct HermEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermEigen {
    /// Decompose `h` after checking Hermiticity against `tol·max(1, max|h_ij|)`.
    pub fn new(h: &CMatrix, tol: f64) -> Result<Self> {
        square_dim(h)?;
        if !is_finite(h) {
            return Err(Error::NonFinite("hermitian eigendecomposition input"));
        }
        let defect = hermitian_defect(h);
        if defect > tol * max_abs(h).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let eig = hermitian_part(h)
            .try_symmetric_eigen(f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Eigensolver("no convergence".into()))?;
        if !eig.eigenvalues.iter().all(|x| x.is_finite()) {
            return Err(Error::Eigensolver("non-finite eigenvalue".into()));
        }
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    /// exp(scale·h) = V diag(exp(scale·λ)) V†
    pub fn exp(&self, scale: Complex64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let f = (scale * lam).exp();
            for z in scaled.column_mut(j).iter_mut() {
                *z *= f;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// exp(scale·h) for Hermitian `h`.
pub fn herm_expm(h: &CMatrix, scale: Complex64) -> Result<CMatrix> {
    if !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::NonFinite("exponential scale"));
    }
    Ok(HermEigen::new(h, HERM_TOL)?.exp(scale))
}

/// exp(g) for anti-Hermitian `g`, via the Hermitian matrix i·g.
pub fn antiherm_expm(g: &CMatrix) -> Result<CMatrix> {
    square_dim(g)?;
    let defect = max_abs(&(g + g.adjoint()));
    if defect > HERM_TOL * max_abs(g).max(1.0) {
        return Err(Error::NotAntiHermitian(defect));
    }
    let k = g * I;
    herm_expm(&k, -I)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{pauli, Axis};
    use approx::assert_abs_diff_eq;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) {
        assert!(max_abs(&(a - b)) <= tol, "diff {:e}\n{a}\n{b}", max_abs(&(a - b)));
    }

    #[test]
    fn pauli_products() {
        let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
        close(&matmul(&identity(2), &x).unwrap(), &x, 0.0);
        close(&matmul(&x, &x).unwrap(), &identity(2), 0.0);
        close(&commutator(&x, &z).unwrap(), &(y.clone() * c(0.0, -2.0)), 0.0);
        let ps = [x, y, z];
        for (l, pl) in ps.iter().enumerate() {
            for (m, pm) in ps.iter().enumerate() {
                let expect = if l == m { identity(2) * r(2.0) } else { CMatrix::zeros(2, 2) };
                close(&anticommutator(pl, pm).unwrap(), &expect, 0.0);
            }
        }
    }

    #[test]
    fn ladder_commutator_block() {
        let d = 5;
        let mut a = CMatrix::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = r((n as f64).sqrt());
        }
        let ad = a.adjoint();
        let comm = matmul(&a, &ad).unwrap() - matmul(&ad, &a).unwrap();
        close(&comm.view((0, 0), (d - 1, d - 1)).into_owned(), &identity(d - 1), 1e-14);
        assert_abs_diff_eq!(comm[(d - 1, d - 1)].re, -((d - 1) as f64), epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = matmul(&identity(2), &identity(3)).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(2, 3)));
        assert!(inner(&CVector::zeros(2), &CVector::zeros(3)).is_err());
    }

    #[test]
    fn pauli_exponential() {
        let x = pauli(Axis::X);
        for &th in &[0.0, 0.3, 1.7, -2.9] {
            let u = herm_expm(&x, c(0.0, -th)).unwrap();
            let expect = identity(2) * r(f64::cos(th)) - x.clone() * c(0.0, f64::sin(th));
            close(&u, &expect, 1e-15);
        }
    }

    #[test]
    fn diagonal_exponential() {
        let d = [0.5, -1.0, 2.0];
        let s = c(0.2, -0.7);
        let u = herm_expm(&from_real_diag(&d), s).unwrap();
        for (i, &di) in d.iter().enumerate() {
            assert!((u[(i, i)] - (s * di).exp()).norm() < 1e-15);
        }
    }

    #[test]
    fn anti_hermitian_exponential() {
        close(&antiherm_expm(&CMatrix::zeros(3, 3)).unwrap(), &identity(3), 0.0);
        let th = 0.8;
        let u = antiherm_expm(&(pauli(Axis::Z) * c(0.0, th))).unwrap();
        assert!((u[(0, 0)] - c(0.0, th).exp()).norm() < 1e-15);
        assert!((u[(1, 1)] - c(0.0, -th).exp()).norm() < 1e-15);
        assert!(antiherm_expm(&pauli(Axis::X)).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = pauli(Axis::X);
        m[(0, 1)] = r(2.0);
        assert!(matches!(herm_expm(&m, -I), Err(Error::NotHermitian(_))));
        let nan = CMatrix::from_element(2, 2, r(f64::NAN));
        assert!(herm_expm(&nan, -I).is_err());
    }

    #[test]
    fn predicates_and_inner() {
        let plus = CVector::from_vec(vec![r(0.5f64.sqrt()), r(0.5f64.sqrt())]);
        assert_abs_diff_eq!(inner(&plus, &plus).unwrap().re, 1.0, epsilon = 1e-15);
        let e0 = CVector::from_vec(vec![r(1.0), r(0.0)]);
        let e1 = CVector::from_vec(vec![r(0.0), r(1.0)]);
        assert_eq!(inner(&e0, &e1).unwrap(), r(0.0));
        assert!(is_hermitian(&pauli(Axis::Y), HERM_TOL).ok);
        assert!(!is_hermitian(&(pauli(Axis::Y) * I), HERM_TOL).ok);
        assert!(is_unitary(&pauli(Axis::Y), UNIT_TOL).ok);
        assert!(!is_unitary(&(identity(2) * r(2.0)), UNIT_TOL).ok);
    }
}
