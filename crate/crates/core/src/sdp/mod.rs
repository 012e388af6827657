//! Affine matrix expressions and a margin-maximizing semidefinite
//! feasibility solver.
//!
//! A problem asks for a decision vector `x` with `‖x‖₂ ≤ R` such that every
//! negativity constraint satisfies `G(x) ⪯ -t·I` and every positivity
//! constraint satisfies `P(x) ⪰ t·I`, with the shared margin `t` as large as
//! possible. A positive margin certifies the strict inequalities.

mod expr;
mod solver;

pub use expr::AffineSymExpr;
pub use solver::{
    solve_feasibility, verify_solution, FeasibilityResult, SdpProblem, SolveStatus, SolverOptions,
};
