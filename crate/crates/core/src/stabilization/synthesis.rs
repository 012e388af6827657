use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::system::{build_phi, FuzzySystem};
use crate::matrix::SymMat;
use crate::relaxation::Relaxation;
use crate::sdp::{solve_feasibility, verify_solution, SdpProblem, SolveStatus, SolverOptions};

/// Tag recorded with serialized results.
pub const PACKING: &str = "Q-upper-then-F-rowmajor";

/// A certified PDC controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub kind: Relaxation,
    pub q: SymMat,
    pub f: Vec<DMatrix<f64>>,
    /// `K_i = F_i Q⁻¹`.
    pub k: Vec<DMatrix<f64>>,
    pub margin: f64,
    /// The packed decision vector the solver returned.
    pub x: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ResultJson {
    #[serde(rename = "Q")]
    q: Vec<f64>,
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    k: Vec<Vec<f64>>,
    margin: f64,
    packing: String,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

impl SynthesisResult {
    /// `{"Q": [...], "F": [[...]], "K": [[...]], "margin": t, "packing": ...}`,
    /// matrices row-major.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ResultJson {
            q: self.q.to_row_major(),
            f: self.f.iter().map(row_major).collect(),
            k: self.k.iter().map(row_major).collect(),
            margin: self.margin,
            packing: PACKING.to_string(),
        })
        .expect("plain data serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisOutcome {
    Feasible(SynthesisResult),
    Infeasible { margin: f64 },
    NumericalFailure { margin: f64 },
}

impl SynthesisOutcome {
    pub fn status(&self) -> SolveStatus {
        match self {
            SynthesisOutcome::Feasible(_) => SolveStatus::Feasible,
            SynthesisOutcome::Infeasible { .. } => SolveStatus::Infeasible,
            SynthesisOutcome::NumericalFailure { .. } => SolveStatus::NumericalFailure,
        }
    }

    pub fn margin(&self) -> f64 {
        match self {
            SynthesisOutcome::Feasible(r) => r.margin,
            SynthesisOutcome::Infeasible { margin } | SynthesisOutcome::NumericalFailure { margin } => *margin,
        }
    }

    pub fn result(&self) -> Option<&SynthesisResult> {
        match self {
            SynthesisOutcome::Feasible(r) => Some(r),
            _ => None,
        }
    }
}

/// The SDP solved by [`synthesize`]: the chosen relaxation's constraints as
/// negativity constraints plus `Q` as a positivity constraint.
pub fn synthesis_problem(sys: &FuzzySystem, kind: Relaxation) -> SdpProblem {
    let phi = build_phi(sys);
    let mut problem = kind.generate(&phi).to_problem();
    problem
        .add_positive("Q", sys.layout().q_expr())
        .expect("Q shares the decision vector");
    problem
}

pub fn synthesize(sys: &FuzzySystem, kind: Relaxation, opts: &SolverOptions) -> SynthesisOutcome {
    let problem = synthesis_problem(sys, kind);
    let res = solve_feasibility(&problem, opts);
    match res.status {
        SolveStatus::Infeasible => SynthesisOutcome::Infeasible { margin: res.margin },
        SolveStatus::NumericalFailure => SynthesisOutcome::NumericalFailure { margin: res.margin },
        SolveStatus::Feasible => {
            let x = res.x.expect("feasible results carry a solution");
            if !verify_solution(&problem, &x, res.threshold / 10.0) {
                return SynthesisOutcome::NumericalFailure { margin: res.margin };
            }
            let layout = sys.layout();
            let q = layout.unpack_q(&x);
            let Some(q_inv) = q.as_matrix().clone().try_inverse() else {
                return SynthesisOutcome::NumericalFailure { margin: res.margin };
            };
            let f: Vec<DMatrix<f64>> = (0..layout.rules).map(|j| layout.unpack_f(&x, j)).collect();
            let k = f.iter().map(|fj| fj * &q_inv).collect();
            SynthesisOutcome::Feasible(SynthesisResult {
                kind,
                q,
                f,
                k,
                margin: res.margin,
                x,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stabilization::example_system;

    #[test]
    fn nominal_example_is_stabilizable() {
        let sys = example_system(0.0, 0.0);
        let out = synthesize(&sys, Relaxation::Theorem1, &SolverOptions::default());
        let res = out.result().expect("nominal plant should be feasible");
        assert!(res.q.min_eigenvalue() > 0.0);
        for (k, f) in res.k.iter().zip(&res.f) {
            let back = k * res.q.as_matrix();
            let scale = f.amax().max(1.0);
            assert!((back - f).amax() <= 1e-8 * scale);
        }
        let json = res.to_json();
        assert_eq!(json["packing"], PACKING);
        assert_eq!(json["F"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn uncontrollable_unstable_plant_is_infeasible() {
        let a = vec![DMatrix::identity(2, 2); 3];
        let b = vec![DMatrix::zeros(2, 1); 3];
        let sys = FuzzySystem::new(a, b).unwrap();
        for kind in Relaxation::ALL {
            let out = synthesize(&sys, kind, &SolverOptions::default());
            assert_eq!(out.status(), SolveStatus::Infeasible, "{kind}");
        }
    }
}
