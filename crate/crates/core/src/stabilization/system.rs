use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::SymMat;
use crate::plmi::AffinePlmi;
use crate::sdp::AffineSymExpr;

/// Local linear models `(A_i, B_i)` of a fuzzy plant.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySystem {
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
}

impl FuzzySystem {
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::input(format!("need at least 2 rules, got {}", a.len())));
        }
        if a.len() != b.len() {
            return Err(Error::input(format!(
                "{} state matrices but {} input matrices",
                a.len(),
                b.len()
            )));
        }
        let nx = a[0].nrows();
        let nu = b[0].ncols();
        if nx == 0 || nu == 0 {
            return Err(Error::input("state and input dimensions must be positive"));
        }
        for (i, (ai, bi)) in a.iter().zip(&b).enumerate() {
            if ai.shape() != (nx, nx) || bi.shape() != (nx, nu) {
                return Err(Error::input(format!(
                    "rule {} has A {:?} and B {:?}, expected ({nx}, {nx}) and ({nx}, {nu})",
                    i + 1,
                    ai.shape(),
                    bi.shape()
                )));
            }
        }
        Ok(Self { a, b })
    }

    pub fn rules(&self) -> usize {
        self.a.len()
    }

    pub fn state_dim(&self) -> usize {
        self.a[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn a(&self, i: usize) -> &DMatrix<f64> {
        &self.a[i]
    }

    pub fn b(&self, i: usize) -> &DMatrix<f64> {
        &self.b[i]
    }

    pub fn layout(&self) -> DecisionLayout {
        DecisionLayout {
            nx: self.state_dim(),
            nu: self.input_dim(),
            rules: self.rules(),
        }
    }
}

/// The three-rule plant with the `(a, b)`-dependent third rule.
pub fn example_system(a: f64, b: f64) -> FuzzySystem {
    let m = |r: usize, c: usize, v: &[f64]| DMatrix::from_row_slice(r, c, v);
    FuzzySystem::new(
        vec![
            m(2, 2, &[1.59, -7.29, 0.01, 0.0]),
            m(2, 2, &[0.02, -4.64, 0.35, 0.21]),
            m(2, 2, &[-a, -4.33, 0.0, 0.0]),
        ],
        vec![
            m(2, 1, &[1.0, 0.0]),
            m(2, 1, &[8.0, 0.0]),
            m(2, 1, &[-b + 6.0, -1.0]),
        ],
    )
    .expect("example plant is well-formed")
}

/// Decision vector layout: the upper triangle of `Q` row-major, then
/// `F_1, ..., F_r`, each row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionLayout {
    pub nx: usize,
    pub nu: usize,
    pub rules: usize,
}

impl DecisionLayout {
    pub fn q_vars(&self) -> usize {
        self.nx * (self.nx + 1) / 2
    }

    pub fn f_vars(&self) -> usize {
        self.nu * self.nx
    }

    pub fn num_vars(&self) -> usize {
        self.q_vars() + self.rules * self.f_vars()
    }

    /// Index of `Q[p][q]` for `p <= q`.
    pub fn q_index(&self, p: usize, q: usize) -> usize {
        debug_assert!(p <= q && q < self.nx);
        p * self.nx - p * p.saturating_sub(1) / 2 + (q - p)
    }

    pub fn f_index(&self, j: usize, row: usize, col: usize) -> usize {
        self.q_vars() + j * self.f_vars() + row * self.nx + col
    }

    pub fn unpack_q(&self, x: &[f64]) -> SymMat {
        let mut m = DMatrix::zeros(self.nx, self.nx);
        let mut k = 0;
        for p in 0..self.nx {
            for q in p..self.nx {
                m[(p, q)] = x[k];
                m[(q, p)] = x[k];
                k += 1;
            }
        }
        SymMat::symmetrize(m)
    }

    pub fn unpack_f(&self, x: &[f64], j: usize) -> DMatrix<f64> {
        let start = self.q_vars() + j * self.f_vars();
        DMatrix::from_row_slice(self.nu, self.nx, &x[start..start + self.f_vars()])
    }

    /// Inverse of the unpacking; `f` must hold one matrix per rule.
    pub fn pack(&self, q: &SymMat, f: &[DMatrix<f64>]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.num_vars());
        for p in 0..self.nx {
            for c in p..self.nx {
                x.push(q.get(p, c));
            }
        }
        for fj in f {
            for row in 0..self.nu {
                for col in 0..self.nx {
                    x.push(fj[(row, col)]);
                }
            }
        }
        x
    }

    /// Affine expression of `Q` over the decision vector.
    pub fn q_expr(&self) -> AffineSymExpr {
        let coeff = q_basis(self.nx).into_iter().map(SymMat::symmetrize).collect();
        let mut coeff_full: Vec<SymMat> = coeff;
        coeff_full.resize(self.num_vars(), SymMat::zeros(self.nx));
        AffineSymExpr::new(SymMat::zeros(self.nx), coeff_full).expect("consistent dimensions")
    }
}

fn q_basis(nx: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(nx * (nx + 1) / 2);
    for p in 0..nx {
        for q in p..nx {
            let mut e = DMatrix::zeros(nx, nx);
            e[(p, q)] = 1.0;
            e[(q, p)] = 1.0;
            out.push(e);
        }
    }
    out
}

fn sym2(m: DMatrix<f64>) -> SymMat {
    let t = m.transpose();
    SymMat::symmetrize(m + t)
}

/// Blocks `Φ_ij = (A_i Q + B_i F_j)ᵀ + A_i Q + B_i F_j`, affine in the packed
/// decision vector with zero constant term.
pub fn build_phi(sys: &FuzzySystem) -> AffinePlmi {
    let layout = sys.layout();
    let (nx, nu, r) = (layout.nx, layout.nu, layout.rules);
    let nv = layout.num_vars();
    let qb = q_basis(nx);
    let mut grid = Vec::with_capacity(r);
    for i in 0..r {
        let q_part: Vec<SymMat> = qb.iter().map(|e| sym2(sys.a(i) * e)).collect();
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            let mut coeff = q_part.clone();
            coeff.resize(nv, SymMat::zeros(nx));
            for a in 0..nu {
                for c in 0..nx {
                    let mut e = DMatrix::zeros(nu, nx);
                    e[(a, c)] = 1.0;
                    coeff[layout.f_index(j, a, c)] = sym2(sys.b(i) * e);
                }
            }
            row.push(AffineSymExpr::new(SymMat::zeros(nx), coeff).expect("consistent dimensions"));
        }
        grid.push(row);
    }
    AffinePlmi::new(grid).expect("fuzzy systems have at least two rules")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_system_substitution() {
        let s = example_system(0.0, 0.0);
        assert_eq!(s.a(2), &DMatrix::from_row_slice(2, 2, &[0.0, -4.33, 0.0, 0.0]));
        assert_eq!(s.b(2), &DMatrix::from_row_slice(2, 1, &[6.0, -1.0]));
        assert_eq!(example_system(1.0, 6.0).b(2)[(0, 0)], 0.0);
        let s = example_system(2.0, 3.0);
        assert_eq!(s.a(2)[(0, 0)], -2.0);
        assert_eq!(s.b(2)[(0, 0)], 3.0);
        assert_eq!((s.rules(), s.state_dim(), s.input_dim()), (3, 2, 1));
    }

    #[test]
    fn layout_round_trip() {
        let layout = DecisionLayout { nx: 3, nu: 2, rules: 3 };
        assert_eq!(layout.num_vars(), 6 + 18);
        let x: Vec<f64> = (0..layout.num_vars()).map(|k| k as f64).collect();
        let q = layout.unpack_q(&x);
        assert_eq!(q.get(0, 2), 2.0);
        assert_eq!(q.get(1, 1), 3.0);
        assert_eq!(q.get(2, 1), 4.0);
        let f: Vec<_> = (0..3).map(|j| layout.unpack_f(&x, j)).collect();
        assert_eq!(f[1][(1, 0)], (6 + 6 + 3) as f64);
        assert_eq!(layout.pack(&q, &f), x);
        assert_eq!(layout.q_index(0, 2), 2);
        assert_eq!(layout.q_index(1, 1), 3);
        assert_eq!(layout.q_index(2, 2), 5);
    }

    #[test]
    fn phi_at_identity_q_and_zero_gain() {
        let s = example_system(0.0, 0.0);
        let layout = s.layout();
        let x = layout.pack(&SymMat::identity(2), &vec![DMatrix::zeros(1, 2); 3]);
        let phi = build_phi(&s).at(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = SymMat::symmetrize(s.a(i) + s.a(i).transpose());
                assert!(phi.phi(i, j).approx_eq(&want, 1e-15));
            }
        }
        let want = SymMat::from_row_major(2, &[3.18, -7.28, -7.28, 0.0]).unwrap();
        assert!(phi.phi(0, 0).approx_eq(&want, 1e-12));
    }

    #[test]
    fn phi_is_homogeneous() {
        let s = example_system(1.0, 2.0);
        let phi = build_phi(&s);
        let zero = phi.at(&[0.0; 9]).unwrap();
        assert!(zero.blocks().iter().flatten().all(|m| m.max_abs() == 0.0));
    }

    #[test]
    fn phi_matches_direct_formula() {
        let s = example_system(0.7, 2.5);
        let layout = s.layout();
        let q = SymMat::from_row_major(2, &[2.0, 0.3, 0.3, 1.5]).unwrap();
        let f = vec![
            DMatrix::from_row_slice(1, 2, &[0.1, -0.4]),
            DMatrix::from_row_slice(1, 2, &[1.2, 0.0]),
            DMatrix::from_row_slice(1, 2, &[-0.5, 0.8]),
        ];
        let phi = build_phi(&s).at(&layout.pack(&q, &f)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let m = s.a(i) * q.as_matrix() + s.b(i) * &f[j];
                let want = SymMat::symmetrize(&m + m.transpose());
                assert!(phi.phi(i, j).approx_eq(&want, 1e-12), "({i},{j})");
            }
        }
    }

    #[test]
    fn q_expr_unpacks_q() {
        let layout = DecisionLayout { nx: 2, nu: 1, rules: 3 };
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(layout.q_expr().evaluate(&x).unwrap(), layout.unpack_q(&x));
    }

    #[test]
    fn mismatched_rules_are_rejected() {
        let a = vec![DMatrix::zeros(2, 2); 2];
        let b = vec![DMatrix::zeros(2, 1); 3];
        assert!(FuzzySystem::new(a.clone(), b).is_err());
        assert!(FuzzySystem::new(a, vec![DMatrix::zeros(3, 1); 2]).is_err());
    }
}
