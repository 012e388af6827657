use std::ops::Add;

use crate::error::{Error, Result};
use crate::matrix::SymMat;

/// `c0 + Σ_k x_k · coeff[k]` with symmetric coefficient matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSymExpr {
    c0: SymMat,
    coeff: Vec<SymMat>,
}

impl AffineSymExpr {
    pub fn new(c0: SymMat, coeff: Vec<SymMat>) -> Result<Self> {
        let n = c0.dim();
        if let Some(k) = coeff.iter().position(|c| c.dim() != n) {
            return Err(Error::input(format!(
                "coefficient of x_{} is {}x{}, constant term is {n}x{n}",
                k + 1,
                coeff[k].dim(),
                coeff[k].dim()
            )));
        }
        Ok(Self { c0, coeff })
    }

    pub fn constant(c0: SymMat) -> Self {
        Self { c0, coeff: Vec::new() }
    }

    pub fn zeros(n: usize, num_vars: usize) -> Self {
        Self {
            c0: SymMat::zeros(n),
            coeff: vec![SymMat::zeros(n); num_vars],
        }
    }

    pub fn dim(&self) -> usize {
        self.c0.dim()
    }

    pub fn num_vars(&self) -> usize {
        self.coeff.len()
    }

    pub fn constant_term(&self) -> &SymMat {
        &self.c0
    }

    pub fn coefficients(&self) -> &[SymMat] {
        &self.coeff
    }

    pub fn is_constant(&self) -> bool {
        self.coeff.is_empty()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<SymMat> {
        if x.len() != self.num_vars() {
            return Err(Error::input(format!(
                "decision vector has length {}, expression has {} variables",
                x.len(),
                self.num_vars()
            )));
        }
        let mut out = self.c0.clone();
        for (xk, ck) in x.iter().zip(&self.coeff) {
            if *xk != 0.0 {
                out.add_scaled(*xk, ck);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            c0: self.c0.scale(alpha),
            coeff: self.coeff.iter().map(|c| c.scale(alpha)).collect(),
        }
    }

    /// `self += alpha * other`; both must share dimension and variable count.
    pub fn add_scaled(&mut self, alpha: f64, other: &AffineSymExpr) {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        assert_eq!(self.num_vars(), other.num_vars(), "variable count mismatch");
        self.c0.add_scaled(alpha, &other.c0);
        for (a, b) in self.coeff.iter_mut().zip(&other.coeff) {
            a.add_scaled(alpha, b);
        }
    }

    /// Largest absolute entry over the constant term and all coefficients.
    pub fn max_abs(&self) -> f64 {
        self.coeff
            .iter()
            .map(SymMat::max_abs)
            .fold(self.c0.max_abs(), f64::max)
    }

    /// Entrywise comparison, absolute tolerance.
    pub fn approx_eq(&self, other: &AffineSymExpr, tol: f64) -> bool {
        self.num_vars() == other.num_vars()
            && self.c0.approx_eq(&other.c0, tol)
            && self
                .coeff
                .iter()
                .zip(&other.coeff)
                .all(|(a, b)| a.approx_eq(b, tol))
    }
}

impl Add for &AffineSymExpr {
    type Output = AffineSymExpr;
    fn add(self, rhs: &AffineSymExpr) -> AffineSymExpr {
        let mut out = self.clone();
        out.add_scaled(1.0, rhs);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_at_zero_is_constant_term() {
        let c0 = SymMat::from_row_major(2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let e = AffineSymExpr::new(c0.clone(), vec![SymMat::identity(2); 3]).unwrap();
        assert_eq!(e.evaluate(&[0.0; 3]).unwrap(), c0);
    }

    #[test]
    fn evaluate_single_identity_variable() {
        let e = AffineSymExpr::new(SymMat::zeros(2), vec![SymMat::identity(2)]).unwrap();
        assert_eq!(e.evaluate(&[3.0]).unwrap(), SymMat::identity(2).scale(3.0));
    }

    #[test]
    fn evaluate_two_variables_entrywise() {
        let c0 = SymMat::from_row_major(2, &[1.0, -1.0, -1.0, 0.5]).unwrap();
        let c1 = SymMat::from_row_major(2, &[0.0, 2.0, 2.0, 1.0]).unwrap();
        let c2 = SymMat::from_row_major(2, &[-3.0, 0.25, 0.25, 4.0]).unwrap();
        let e = AffineSymExpr::new(c0, vec![c1, c2]).unwrap();
        let v = e.evaluate(&[1.0, 1.0]).unwrap();
        assert_eq!(v.to_row_major(), vec![-2.0, 1.25, 1.25, 5.5]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let e = AffineSymExpr::zeros(2, 2);
        assert!(e.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        assert!(AffineSymExpr::new(SymMat::zeros(2), vec![SymMat::zeros(3)]).is_err());
    }
}
