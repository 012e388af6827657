//! Relaxations of parameterized linear matrix inequalities in double
//! convex-sum form,
//!
//! ```text
//! Φ(h) = Σ_i Σ_j h_i h_j Φ_ij ≺ 0   for every h on the probability simplex,
//! ```
//!
//! into finitely many LMIs. The crate generates the classical Tuan family and
//! the binary-pattern family side by side, checks constant families by
//! eigenvalues, solves affine families with a small margin-maximizing SDP
//! solver, and ships brute-force oracles to cross-check all of it. The
//! [`stabilization`] module applies the machinery to a three-rule
//! Takagi–Sugeno fuzzy plant.
//!
//! The guide under `book/` walks through each piece; its code listings run as
//! doc-tests of this crate.

pub mod error;
pub mod instance;
pub mod matrix;
pub mod oracle;
pub mod plmi;
pub mod relaxation;
pub mod sdp;
pub mod stabilization;

pub use error::{Error, Result};
pub use instance::{load_instance, read_instance, save_instance};
pub use matrix::SymMat;
pub use plmi::{AffinePlmi, ConstantPlmi, PlmiBlocks, SimplexPoint};
pub use relaxation::{
    binary_table, check_constant, col_index, generate_naive, generate_theorem1, generate_tuan,
    LmiSet, PatternTable, Relaxation, Verdict,
};
pub use sdp::{
    solve_feasibility, verify_solution, AffineSymExpr, FeasibilityResult, SdpProblem, SolveStatus,
    SolverOptions,
};

// The guide's listings run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/double-sum.md")]
    mod double_sum {}
    #[doc = include_str!("../../../book/src/relaxations.md")]
    mod relaxations {}
    #[doc = include_str!("../../../book/src/counterexample.md")]
    mod counterexample {}
    #[doc = include_str!("../../../book/src/sdp.md")]
    mod sdp {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/stabilization.md")]
    mod stabilization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
