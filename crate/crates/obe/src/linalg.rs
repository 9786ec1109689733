//! Dense complex linear algebra helpers used throughout the crate.
//!
//! Everything here works on dynamically sized matrices over `Complex64`.
//! Covariance-like inputs are expected to be Hermitian; routines that rely
//! on that assumption say so in their docs.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Real scalar promoted to `Complex64`.
#[inline]
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Identity matrix of order `m`.
pub fn ceye(m: usize) -> CMat {
    CMat::identity(m, m)
}

/// Symmetrized copy `(A + A^H) / 2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * cr(0.5)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Trace of the product `tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Matrix trace.
pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().sum()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-major stacking of the matrix into a vector.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_of`]: reshape a vector into a `rows x cols` matrix.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Result<CMat> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            context: "unvec",
            expected: rows * cols,
            got: v.len(),
        });
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

/// Unitary DFT matrix with `[F]_{r,c} = exp(j 2π r c / m) / sqrt(m)`.
///
/// Circulant matrices built in this crate satisfy `C = F diag(f) F^H`.
pub fn dft_matrix(m: usize) -> CMat {
    let scale = 1.0 / (m as f64).sqrt();
    CMat::from_fn(m, m, |r, c| {
        let phase = 2.0 * std::f64::consts::PI * ((r * c) % m) as f64 / m as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// Reusable factorization of a Hermitian positive definite matrix.
///
/// Uses Cholesky and falls back to LU when the input is only numerically
/// semidefinite. Construction fails if the matrix is singular for both.
pub struct HermSolver {
    chol: Option<Cholesky<Complex64, Dyn>>,
    lu: Option<LU<Complex64, Dyn, Dyn>>,
    dim: usize,
}

impl HermSolver {
    pub fn new(a: &CMat) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: "HermSolver",
                expected: dim,
                got: a.ncols(),
            });
        }
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Ok(Self {
                chol: Some(chol),
                lu: None,
                dim,
            });
        }
        let lu = a.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::Singular(
                "Hermitian system is numerically singular".into(),
            ));
        }
        Ok(Self {
            chol: None,
            lu: Some(lu),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        match (&self.chol, &self.lu) {
            (Some(c), _) => c.solve(b),
            (None, Some(lu)) => lu.solve(b).expect("checked invertible at construction"),
            _ => unreachable!(),
        }
    }

    pub fn solve_vec(&self, b: &CVec) -> CVec {
        match (&self.chol, &self.lu) {
            (Some(c), _) => c.solve(b),
            (None, Some(lu)) => lu.solve(b).expect("checked invertible at construction"),
            _ => unreachable!(),
        }
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = a
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Hermitian square root `B` with `B B^H = A`, clipping slightly negative
/// eigenvalues to zero.
///
/// Eigenvalues below `-neg_tol` are treated as a genuine violation of
/// positive semidefiniteness and produce an error.
pub fn hermitian_sqrt(a: &CMat, neg_tol: f64) -> Result<CMat> {
    let eig = a.clone().symmetric_eigen();
    let min_eig = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -neg_tol {
        return Err(Error::NotPositiveSemidefinite {
            min_eig,
            tol: neg_tol,
        });
    }
    let m = a.nrows();
    let mut b = eig.eigenvectors.clone();
    for c in 0..m {
        let s = cr(eig.eigenvalues[c].max(0.0).sqrt());
        for r in 0..m {
            b[(r, c)] *= s;
        }
    }
    Ok(&b * eig.eigenvectors.adjoint())
}

/// Spectral norm of a Hermitian positive semidefinite matrix via power
/// iteration with a fixed deterministic start.
pub fn psd_spectral_norm(a: &CMat) -> f64 {
    let m = a.nrows();
    if m == 0 {
        return 0.0;
    }
    let mut v = CVec::from_fn(m, |i, _| cr(1.0 + (i as f64) / (m as f64 + 1.0)));
    v /= cr(v.norm());
    let mut lambda = 0.0f64;
    for _ in 0..200 {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = (v.dotc(&w)).re.abs();
        v = w / cr(norm);
        if (next - lambda).abs() <= 1e-12 * next.max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Condition number estimate of a Hermitian matrix from its eigenvalue
/// spread. Returns `f64::INFINITY` when the smallest magnitude is zero.
pub fn hermitian_condition(a: &CMat) -> f64 {
    let ev = hermitian_eigenvalues(a);
    let max = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = ev.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
