//! Double convex-sum PLMI instances `Φ(h) = Σ_i Σ_j h_i h_j Φ_ij`.
//!
//! Rule indices in the Rust API are zero-based. Everything rendered as text
//! (labels, error messages, the instance file locations) is one-based.

use std::borrow::Cow;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::SymMat;
use crate::sdp::AffineSymExpr;

/// Tolerance on `Σ h_i = 1` for a membership vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A membership vector on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::input("membership vector is empty"));
        }
        if let Some(i) = h.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input(format!(
                "membership h_{} = {} is not a non-negative number",
                i + 1,
                h[i]
            )));
        }
        let sum: f64 = h.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::input(format!("memberships sum to {sum}, not 1")));
        }
        Ok(Self(h))
    }

    /// The vertex `e_i` of the `r`-simplex.
    pub fn vertex(r: usize, i: usize) -> Self {
        assert!(i < r, "vertex index out of range");
        let mut h = vec![0.0; r];
        h[i] = 1.0;
        Self(h)
    }

    pub fn uniform(r: usize) -> Self {
        Self(vec![1.0 / r as f64; r])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Unchecked constructor for callers that normalize themselves.
    pub(crate) fn from_normalized(h: Vec<f64>) -> Self {
        Self(h)
    }
}

fn check_rules(r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::input(format!(
            "rule count r = {r} is not supported; at least 2 rules are required"
        )));
    }
    Ok(())
}

/// A PLMI whose blocks `Φ_ij` are fixed symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPlmi {
    n: usize,
    phi: Vec<Vec<SymMat>>,
}

impl ConstantPlmi {
    /// `phi[i][j]` is `Φ_(i+1)(j+1)`.
    pub fn new(phi: Vec<Vec<SymMat>>) -> Result<Self> {
        let r = phi.len();
        check_rules(r)?;
        let n = phi[0].first().map(SymMat::dim).unwrap_or(0);
        for (i, row) in phi.iter().enumerate() {
            if row.len() != r {
                return Err(Error::input(format!(
                    "row {} of the block grid has {} entries, expected {r}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, m) in row.iter().enumerate() {
                if m.dim() != n {
                    return Err(Error::input(format!(
                        "Φ({},{}) is {}x{}, expected {n}x{n}",
                        i + 1,
                        j + 1,
                        m.dim(),
                        m.dim()
                    )));
                }
            }
        }
        Ok(Self { n, phi })
    }

    /// Scalar (`n = 1`) instance from an `r x r` table of values.
    pub fn from_scalars(values: &[&[f64]]) -> Result<Self> {
        let phi = values
            .iter()
            .map(|row| row.iter().map(|v| SymMat::scalar(*v)).collect())
            .collect();
        Self::new(phi)
    }

    pub fn rules(&self) -> usize {
        self.phi.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn phi(&self, i: usize, j: usize) -> &SymMat {
        &self.phi[i][j]
    }

    pub fn blocks(&self) -> &[Vec<SymMat>] {
        &self.phi
    }

    /// `Σ_i Σ_j h_i h_j Φ_ij`.
    pub fn evaluate(&self, h: &SimplexPoint) -> Result<SymMat> {
        let r = self.rules();
        if h.len() != r {
            return Err(Error::input(format!(
                "membership vector has length {}, instance has r = {r}",
                h.len()
            )));
        }
        let h = h.as_slice();
        let mut acc = SymMat::zeros(self.n);
        for i in 0..r {
            if h[i] == 0.0 {
                continue;
            }
            for j in 0..r {
                let w = h[i] * h[j];
                if w != 0.0 {
                    acc.add_scaled(w, &self.phi[i][j]);
                }
            }
        }
        Ok(acc)
    }

    /// `Φ_ij + Φ_ji` for `i != j`.
    pub fn symmetric_pair(&self, i: usize, j: usize) -> Result<SymMat> {
        let r = self.rules();
        if i >= r || j >= r {
            return Err(Error::input(format!(
                "pair ({},{}) is out of range for r = {r}",
                i + 1,
                j + 1
            )));
        }
        if i == j {
            return Err(Error::input(format!(
                "pair ({},{}) is diagonal; diagonal blocks are handled separately",
                i + 1,
                j + 1
            )));
        }
        Ok(&self.phi[i][j] + &self.phi[j][i])
    }

    /// Exchanges every `Φ_ij` with `Φ_ji`.
    pub fn transpose_swapped(&self) -> Self {
        let r = self.rules();
        let phi = (0..r)
            .map(|i| (0..r).map(|j| self.phi[j][i].clone()).collect())
            .collect();
        Self { n: self.n, phi }
    }

    /// Blockwise sum of two instances of equal shape.
    pub fn try_add(&self, other: &ConstantPlmi) -> Result<Self> {
        if self.rules() != other.rules() || self.dim() != other.dim() {
            return Err(Error::input("instances differ in shape"));
        }
        let phi = self
            .phi
            .iter()
            .zip(&other.phi)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self { n: self.n, phi })
    }

    /// Random instance: entries uniform in `[-1, 1]`, each block symmetrized.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, r: usize, n: usize) -> Result<Self> {
        check_rules(r)?;
        if n == 0 {
            return Err(Error::input("matrix dimension must be at least 1"));
        }
        let phi = (0..r)
            .map(|_| (0..r).map(|_| random_sym(rng, n)).collect())
            .collect();
        Ok(Self { n, phi })
    }

    /// The r = 3 scalar instance on which the binary-pattern relaxation is
    /// feasible while the Tuan relaxation is not.
    pub fn counterexample() -> Self {
        Self::from_scalars(&[&[-2.0, 0.0, 2.0], &[0.0, -1.0, -1.0], &[0.0, 0.0, -2.0]])
            .expect("embedded counterexample is well-formed")
    }
}

pub(crate) fn random_sym<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymMat {
    let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    SymMat::symmetrize(nalgebra::DMatrix::from_row_slice(n, n, &entries))
}

/// A PLMI whose blocks are affine in a shared decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePlmi {
    n: usize,
    num_vars: usize,
    phi: Vec<Vec<AffineSymExpr>>,
}

impl AffinePlmi {
    pub fn new(phi: Vec<Vec<AffineSymExpr>>) -> Result<Self> {
        let r = phi.len();
        check_rules(r)?;
        let first = phi[0]
            .first()
            .ok_or_else(|| Error::input("block grid row 1 is empty"))?;
        let (n, num_vars) = (first.dim(), first.num_vars());
        for (i, row) in phi.iter().enumerate() {
            if row.len() != r {
                return Err(Error::input(format!(
                    "row {} of the block grid has {} entries, expected {r}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, e) in row.iter().enumerate() {
                if e.dim() != n || e.num_vars() != num_vars {
                    return Err(Error::input(format!(
                        "Φ({},{}) has shape {}x{} over {} variables, expected {n}x{n} over {num_vars}",
                        i + 1,
                        j + 1,
                        e.dim(),
                        e.dim(),
                        e.num_vars()
                    )));
                }
            }
        }
        Ok(Self { n, num_vars, phi })
    }

    pub fn rules(&self) -> usize {
        self.phi.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn phi(&self, i: usize, j: usize) -> &AffineSymExpr {
        &self.phi[i][j]
    }

    /// Fixes the decision vector, giving a constant instance.
    pub fn at(&self, x: &[f64]) -> Result<ConstantPlmi> {
        let phi = self
            .phi
            .iter()
            .map(|row| row.iter().map(|e| e.evaluate(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        ConstantPlmi::new(phi)
    }
}

impl From<&ConstantPlmi> for AffinePlmi {
    fn from(p: &ConstantPlmi) -> Self {
        let phi = p
            .phi
            .iter()
            .map(|row| row.iter().map(|m| AffineSymExpr::constant(m.clone())).collect())
            .collect();
        Self {
            n: p.n,
            num_vars: 0,
            phi,
        }
    }
}

/// Anything the relaxation generators can read blocks from.
pub trait PlmiBlocks {
    fn as_affine(&self) -> Cow<'_, AffinePlmi>;
}

impl PlmiBlocks for AffinePlmi {
    fn as_affine(&self) -> Cow<'_, AffinePlmi> {
        Cow::Borrowed(self)
    }
}

impl PlmiBlocks for ConstantPlmi {
    fn as_affine(&self) -> Cow<'_, AffinePlmi> {
        Cow::Owned(AffinePlmi::from(self))
    }
}
