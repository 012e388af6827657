//! Dense symmetric matrices and definiteness tests.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Absolute tolerance under which an input is accepted as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A real symmetric `n x n` matrix. Storage is always exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    inner: DMatrix<f64>,
}

impl SymMat {
    /// Builds from row-major entries, symmetrizing as `(M + Mᵀ)/2`.
    ///
    /// Fails when `n == 0`, when the entry count is not `n * n`, or when some
    /// pair `(i, j)` differs from `(j, i)` by more than [`SYMMETRY_TOL`].
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("matrix dimension must be at least 1"));
        }
        if entries.len() != n * n {
            return Err(Error::input(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "entry ({},{}) is not finite",
                bad / n + 1,
                bad % n + 1
            )));
        }
        let m = DMatrix::from_row_slice(n, n, entries);
        Self::from_matrix(m)
    }

    /// Builds from a square nalgebra matrix with the same tolerance rules as
    /// [`SymMat::from_row_major`].
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::input(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > SYMMETRY_TOL {
                    return Err(Error::input(format!(
                        "entries ({},{}) and ({},{}) differ by {gap:e}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// `(M + Mᵀ)/2` of an arbitrary square matrix, without tolerance checks.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetrize needs a square matrix");
        let t = m.transpose();
        Self {
            inner: (m + t) * 0.5,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            inner: DMatrix::from_element(1, 1, value),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut inner = DMatrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            inner[(i, i)] = *v;
        }
        Self { inner }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            inner: &self.inner * alpha,
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &SymMat) {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.inner += &other.inner * alpha;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.amax()
    }

    /// Spectral norm, `max |λ|`.
    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.eigen_range();
        lo.abs().max(hi.abs())
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self.dim() {
            1 => vec![self.inner[(0, 0)]],
            2 => eig2(&self.inner).to_vec(),
            _ => self
                .inner
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn eigen_range(&self) -> (f64, f64) {
        let ev = self.eigenvalues();
        (ev[0], ev[ev.len() - 1])
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen_range().1
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen_range().0
    }

    /// True iff every eigenvalue is below `-tol`.
    pub fn is_negative_definite(&self, tol: f64) -> bool {
        self.max_eigenvalue() < -tol
    }

    /// True iff every eigenvalue is above `tol`.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        self.min_eigenvalue() > tol
    }

    /// `true` when `other` equals `self` entrywise within `tol` (absolute).
    pub fn approx_eq(&self, other: &SymMat, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .inner
                .iter()
                .zip(other.inner.iter())
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

// Closed form for 2x2; the general path goes through nalgebra's
// tridiagonalization + implicit symmetric QR.
fn eig2(m: &DMatrix<f64>) -> [f64; 2] {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let radius = half_diff.hypot(b);
    [mean - radius, mean + radius]
}

pub fn max_eigenvalue(m: &SymMat) -> f64 {
    m.max_eigenvalue()
}

pub fn is_negative_definite(m: &SymMat, tol: f64) -> bool {
    m.is_negative_definite(tol)
}

impl Add for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        SymMat {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        SymMat {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Neg for &SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        SymMat {
            inner: -&self.inner,
        }
    }
}

impl Mul<&SymMat> for f64 {
    type Output = SymMat;
    fn mul(self, rhs: &SymMat) -> SymMat {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: usize, v: &[f64]) -> SymMat {
        SymMat::from_row_major(n, v).unwrap()
    }

    #[test]
    fn max_eigenvalue_examples() {
        assert_eq!(sym(1, &[-2.0]).max_eigenvalue(), -2.0);
        assert_eq!(SymMat::diagonal(&[-1.0, -3.0]).max_eigenvalue(), -1.0);
        assert!((sym(2, &[0.0, 1.0, 1.0, 0.0]).max_eigenvalue() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_definite_examples() {
        assert!(sym(1, &[-2.0]).is_negative_definite(1e-9));
        assert!(!sym(1, &[0.0]).is_negative_definite(1e-9));
        // eigenvalues -3 and 1
        assert!(!sym(2, &[-1.0, 2.0, 2.0, -1.0]).is_negative_definite(1e-9));
    }

    #[test]
    fn three_by_three_uses_symmetric_solver() {
        // eigenvalues of the path-graph Laplacian: 0, 1, 3
        let l = sym(3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let ev = l.eigenvalues();
        for (got, want) in ev.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn near_symmetric_input_is_symmetrized() {
        let m = sym(2, &[1.0, 2.0, 2.0 + 5e-11, 3.0]);
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let err = SymMat::from_row_major(2, &[1.0, 2.0, 2.001, 3.0]).unwrap_err();
        assert!(err.to_string().contains("(1,2)"), "{err}");
    }

    #[test]
    fn bad_shapes_are_rejected() {
        assert!(SymMat::from_row_major(0, &[]).is_err());
        assert!(SymMat::from_row_major(2, &[1.0, 2.0, 3.0]).is_err());
        assert!(SymMat::from_row_major(1, &[f64::NAN]).is_err());
    }
}
