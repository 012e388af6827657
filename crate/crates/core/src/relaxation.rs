//! Finite LMI families that imply the double-sum PLMI.
//!
//! Three families are generated from the same block grid:
//!
//! * `naive`: `Φ_ij ≺ 0` for every ordered pair.
//! * `tuan`: `Φ_ii ≺ 0` and `(2/(r-1))Φ_ii + Φ_ij + Φ_ji ≺ 0` for `i ≠ j`.
//! * `thm1`: `Φ_ii + ½ Σ_{j≠i} s_{k,l(i,j)} (Φ_ij + Φ_ji) ≺ 0` for every row
//!   `k` of the binary pattern table.
//!
//! All generators act on affine blocks; constant instances are the special
//! case with no decision variables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plmi::PlmiBlocks;
use crate::sdp::{AffineSymExpr, SdpProblem};

/// Largest rule count accepted by [`binary_table`].
pub const MAX_PATTERN_RULES: usize = 16;

/// Default absolute tolerance on the largest eigenvalue.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relaxation {
    Naive,
    Tuan,
    #[serde(rename = "thm1")]
    Theorem1,
}

impl Relaxation {
    pub const ALL: [Relaxation; 3] = [Relaxation::Naive, Relaxation::Tuan, Relaxation::Theorem1];

    pub fn as_str(self) -> &'static str {
        match self {
            Relaxation::Naive => "naive",
            Relaxation::Tuan => "tuan",
            Relaxation::Theorem1 => "thm1",
        }
    }

    pub fn generate<P: PlmiBlocks + ?Sized>(self, p: &P) -> LmiSet {
        match self {
            Relaxation::Naive => generate_naive(p),
            Relaxation::Tuan => generate_tuan(p),
            Relaxation::Theorem1 => generate_theorem1(p),
        }
    }

    /// Number of constraints produced for `r` rules.
    pub fn constraint_count(self, r: usize) -> usize {
        match self {
            Relaxation::Naive | Relaxation::Tuan => r * r,
            Relaxation::Theorem1 => r << (r - 1),
        }
    }
}

impl fmt::Display for Relaxation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relaxation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(Relaxation::Naive),
            "tuan" | "lemma1" => Ok(Relaxation::Tuan),
            "thm1" | "theorem1" => Ok(Relaxation::Theorem1),
            other => Err(Error::input(format!(
                "unknown relaxation {other:?}; expected naive, tuan or thm1"
            ))),
        }
    }
}

/// The `2^(r-1) x (r-1)` table of all binary rows, ascending, most
/// significant bit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTable {
    r: usize,
    rows: Vec<Vec<u8>>,
}

impl PatternTable {
    pub fn rules(&self) -> usize {
        self.r
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `s_kl` with zero-based `k` and `l`.
    pub fn entry(&self, k: usize, l: usize) -> u8 {
        self.rows[k][l]
    }
}

pub fn binary_table(r: usize) -> Result<PatternTable> {
    if !(2..=MAX_PATTERN_RULES).contains(&r) {
        return Err(Error::input(format!(
            "binary pattern table needs 2 <= r <= {MAX_PATTERN_RULES}; it has 2^(r-1) rows, \
             which is {} for r = {r}",
            if r == 0 {
                "undefined".to_string()
            } else if r - 1 < 64 {
                (1u64 << (r - 1)).to_string()
            } else {
                format!("2^{}", r - 1)
            }
        )));
    }
    let width = r - 1;
    let rows = (0..1usize << width)
        .map(|k| {
            (0..width)
                .map(|l| ((k >> (width - 1 - l)) & 1) as u8)
                .collect()
        })
        .collect();
    Ok(PatternTable { r, rows })
}

/// Column of the pattern table used for the pair `(i, j)`, all zero-based:
/// `j` when `j < i`, otherwise `j - 1`.
pub fn col_index(i: usize, j: usize) -> Result<usize> {
    match j.cmp(&i) {
        std::cmp::Ordering::Less => Ok(j),
        std::cmp::Ordering::Greater => Ok(j - 1),
        std::cmp::Ordering::Equal => Err(Error::input(format!(
            "col_index is undefined on the diagonal ({},{})",
            i + 1,
            j + 1
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiConstraint {
    pub label: String,
    pub expr: AffineSymExpr,
}

/// An ordered family of expressions, each required to be negative definite.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiSet {
    kind: Relaxation,
    constraints: Vec<LmiConstraint>,
}

impl LmiSet {
    pub fn kind(&self) -> Relaxation {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[LmiConstraint] {
        &self.constraints
    }

    pub fn get(&self, label: &str) -> Option<&AffineSymExpr> {
        self.constraints
            .iter()
            .find(|c| c.label == label)
            .map(|c| &c.expr)
    }

    pub fn num_vars(&self) -> usize {
        self.constraints.first().map_or(0, |c| c.expr.num_vars())
    }

    /// Loads every constraint into a fresh SDP as a negativity constraint.
    pub fn to_problem(&self) -> SdpProblem {
        let mut p = SdpProblem::new(self.num_vars());
        for c in &self.constraints {
            p.add_negative(c.label.clone(), c.expr.clone())
                .expect("constraints of one set share a variable count");
        }
        p
    }
}

fn label(kind: Relaxation, a: usize, b: usize) -> String {
    format!("{kind}({},{})", a + 1, b + 1)
}

pub fn generate_naive<P: PlmiBlocks + ?Sized>(p: &P) -> LmiSet {
    let p = p.as_affine();
    let r = p.rules();
    let mut constraints = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            constraints.push(LmiConstraint {
                label: label(Relaxation::Naive, i, j),
                expr: p.phi(i, j).clone(),
            });
        }
    }
    LmiSet {
        kind: Relaxation::Naive,
        constraints,
    }
}

pub fn generate_tuan<P: PlmiBlocks + ?Sized>(p: &P) -> LmiSet {
    let p = p.as_affine();
    let r = p.rules();
    let diag_weight = 2.0 / (r as f64 - 1.0);
    let mut constraints = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let expr = if i == j {
                p.phi(i, i).clone()
            } else {
                let mut e = p.phi(i, i).scale(diag_weight);
                e.add_scaled(1.0, p.phi(i, j));
                e.add_scaled(1.0, p.phi(j, i));
                e
            };
            constraints.push(LmiConstraint {
                label: label(Relaxation::Tuan, i, j),
                expr,
            });
        }
    }
    LmiSet {
        kind: Relaxation::Tuan,
        constraints,
    }
}

pub fn generate_theorem1<P: PlmiBlocks + ?Sized>(p: &P) -> LmiSet {
    let p = p.as_affine();
    let r = p.rules();
    let table = binary_table(r).expect("instances with more than 16 rules are not supported");
    let mut constraints = Vec::with_capacity(r * table.len());
    for i in 0..r {
        for k in 0..table.len() {
            let mut e = p.phi(i, i).clone();
            for j in (0..r).filter(|&j| j != i) {
                let l = col_index(i, j).expect("j != i");
                if table.entry(k, l) == 1 {
                    e.add_scaled(0.5, p.phi(i, j));
                    e.add_scaled(0.5, p.phi(j, i));
                }
            }
            constraints.push(LmiConstraint {
                label: label(Relaxation::Theorem1, i, k),
                expr: e,
            });
        }
    }
    LmiSet {
        kind: Relaxation::Theorem1,
        constraints,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValue {
    pub label: String,
    pub max_eig: f64,
}

/// Eigenvalue verdict on a constant family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub feasible: bool,
    pub constraints: Vec<ConstraintValue>,
    pub worst: ConstraintValue,
}

/// Feasible iff every constraint's largest eigenvalue is below `-tol`.
pub fn check_constant(set: &LmiSet, tol: f64) -> Result<Verdict> {
    if set.is_empty() {
        return Err(Error::input("cannot check an empty constraint set"));
    }
    if !(tol >= 0.0) {
        return Err(Error::input(format!("tolerance {tol} must be non-negative")));
    }
    let mut constraints = Vec::with_capacity(set.len());
    for c in &set.constraints {
        if !c.expr.is_constant() {
            return Err(Error::input(format!(
                "constraint {} depends on {} decision variables; use the SDP solver",
                c.label,
                c.expr.num_vars()
            )));
        }
        constraints.push(ConstraintValue {
            label: c.label.clone(),
            max_eig: c.expr.constant_term().max_eigenvalue(),
        });
    }
    // First maximum wins ties, following constraint order.
    let worst = constraints
        .iter()
        .fold(None::<&ConstraintValue>, |acc, c| match acc {
            Some(w) if w.max_eig >= c.max_eig => Some(w),
            _ => Some(c),
        })
        .expect("non-empty")
        .clone();
    Ok(Verdict {
        feasible: worst.max_eig < -tol,
        constraints,
        worst,
    })
}

/// If `b = c·a` for some `c > 0` (entrywise within `tol`, relative to the
/// larger magnitude), returns `c`.
pub fn positive_ratio(a: &AffineSymExpr, b: &AffineSymExpr, tol: f64) -> Option<f64> {
    if a.dim() != b.dim() || a.num_vars() != b.num_vars() {
        return None;
    }
    let scale_a = a.max_abs();
    let scale_b = b.max_abs();
    if scale_a == 0.0 || scale_b == 0.0 {
        return None;
    }
    let c = scale_b / scale_a;
    let diff = {
        let mut d = b.clone();
        d.add_scaled(-c, a);
        d.max_abs()
    };
    (diff <= tol * scale_b).then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SymMat;
    use crate::plmi::ConstantPlmi;

    fn scalar(set: &LmiSet, label: &str) -> f64 {
        set.get(label).unwrap().constant_term().get(0, 0)
    }

    #[test]
    fn binary_table_small_cases() {
        assert_eq!(binary_table(2).unwrap().rows(), &[vec![0], vec![1]]);
        assert_eq!(
            binary_table(3).unwrap().rows(),
            &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let t4 = binary_table(4).unwrap();
        assert_eq!(t4.len(), 8);
        assert_eq!(t4.rows()[0], vec![0, 0, 0]);
        assert_eq!(t4.rows()[1], vec![0, 0, 1]);
        assert_eq!(t4.rows()[4], vec![1, 0, 0]);
        assert_eq!(t4.rows()[7], vec![1, 1, 1]);
    }

    #[test]
    fn binary_table_range() {
        assert!(binary_table(1).is_err());
        assert!(binary_table(17).unwrap_err().to_string().contains("65536"));
        assert_eq!(binary_table(16).unwrap().len(), 1 << 15);
    }

    #[test]
    fn col_index_examples() {
        // one-based (2,1) -> 1, (2,3) -> 2, (1,2) -> 1
        assert_eq!(col_index(1, 0).unwrap(), 0);
        assert_eq!(col_index(1, 2).unwrap(), 1);
        assert_eq!(col_index(0, 1).unwrap(), 0);
        assert!(col_index(2, 2).is_err());
    }

    #[test]
    fn naive_on_counterexample() {
        let set = generate_naive(&ConstantPlmi::counterexample());
        assert_eq!(set.len(), 9);
        assert_eq!(scalar(&set, "naive(1,3)"), 2.0);
    }

    #[test]
    fn naive_diagonal_only_instance() {
        let r = 3;
        let phi = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { SymMat::identity(2).scale(-1.0) } else { SymMat::zeros(2) })
                    .collect()
            })
            .collect();
        let set = generate_naive(&ConstantPlmi::new(phi).unwrap());
        for i in 1..=r {
            let e = set.get(&format!("naive({i},{i})")).unwrap();
            assert_eq!(e.constant_term(), &SymMat::identity(2).scale(-1.0));
        }
    }

    #[test]
    fn tuan_on_counterexample() {
        let set = generate_tuan(&ConstantPlmi::counterexample());
        assert_eq!(set.len(), 9);
        assert_eq!(scalar(&set, "tuan(1,3)"), 0.0);
        assert_eq!(scalar(&set, "tuan(1,1)"), -2.0);
    }

    #[test]
    fn tuan_r2_uses_weight_two() {
        let p = ConstantPlmi::from_scalars(&[&[-1.0, 0.25], &[0.5, -3.0]]).unwrap();
        let set = generate_tuan(&p);
        assert_eq!(scalar(&set, "tuan(1,2)"), -2.0 + 0.25 + 0.5);
    }

    #[test]
    fn theorem1_on_counterexample() {
        let set = generate_theorem1(&ConstantPlmi::counterexample());
        assert_eq!(set.len(), 12);
        // Φ11 + (Φ13 + Φ31)/2 = -2 + (2 + 0)/2
        assert_eq!(scalar(&set, "thm1(1,2)"), -1.0);
        assert_eq!(scalar(&set, "thm1(3,2)"), -2.5);
        assert_eq!(scalar(&set, "thm1(2,1)"), -1.0);
    }

    #[test]
    fn labels_are_ordered_and_unique() {
        let set = generate_theorem1(&ConstantPlmi::counterexample());
        let labels: Vec<_> = set.constraints().iter().map(|c| c.label.as_str()).collect();
        assert_eq!(&labels[..5], &["thm1(1,1)", "thm1(1,2)", "thm1(1,3)", "thm1(1,4)", "thm1(2,1)"]);
        let mut dedup = labels.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), labels.len());
    }

    #[test]
    fn check_constant_counterexample() {
        let p = ConstantPlmi::counterexample();
        let thm1 = check_constant(&generate_theorem1(&p), DEFAULT_TOL).unwrap();
        assert!(thm1.feasible);
        // Hand expansion on Φ11=-2, Φ22=-1, Φ33=-2, Φ13=2, Φ23=-1, others 0.
        let expected = [-2.0, -1.0, -2.0, -1.0, -1.0, -1.5, -1.0, -1.5, -2.0, -2.5, -1.0, -1.5];
        let got: Vec<f64> = thm1.constraints.iter().map(|c| c.max_eig).collect();
        assert_eq!(got, expected);

        let tuan = check_constant(&generate_tuan(&p), DEFAULT_TOL).unwrap();
        assert!(!tuan.feasible);
        assert_eq!(tuan.worst.label, "tuan(1,3)");
        assert_eq!(tuan.worst.max_eig, 0.0);
    }

    #[test]
    fn check_constant_all_negative_identity() {
        let r = 2;
        let phi = vec![vec![SymMat::identity(2).scale(-1.0); r]; r];
        let v = check_constant(&generate_naive(&ConstantPlmi::new(phi).unwrap()), DEFAULT_TOL).unwrap();
        assert!(v.feasible);
        assert!(v.constraints.iter().all(|c| c.max_eig == -1.0));
    }

    #[test]
    fn check_constant_rejects_affine_sets() {
        let e = AffineSymExpr::new(SymMat::scalar(-1.0), vec![SymMat::scalar(1.0)]).unwrap();
        let p = crate::plmi::AffinePlmi::new(vec![vec![e.clone(), e.clone()], vec![e.clone(), e]]).unwrap();
        assert!(check_constant(&generate_naive(&p), DEFAULT_TOL).is_err());
    }

    #[test]
    fn verdict_json_shape() {
        let v = check_constant(&generate_tuan(&ConstantPlmi::counterexample()), DEFAULT_TOL).unwrap();
        let json: serde_json::Value = serde_json::to_value(&v).unwrap();
        assert_eq!(json["feasible"], false);
        assert_eq!(json["constraints"].as_array().unwrap().len(), 9);
        assert_eq!(json["worst"]["label"], "tuan(1,3)");
        let back: Verdict = serde_json::from_value(json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn relaxation_names_round_trip() {
        for k in Relaxation::ALL {
            assert_eq!(k.as_str().parse::<Relaxation>().unwrap(), k);
        }
        assert!("lemma9".parse::<Relaxation>().is_err());
    }
}
