//! State-feedback synthesis for Takagi–Sugeno fuzzy plants
//! `ẋ = Σ h_i (A_i x + B_i u)` under the parallel distributed compensation law
//! `u = Σ h_j F_j Q⁻¹ x`.
//!
//! With `Q ≻ 0` and gains `F_j` as decision variables, closed-loop quadratic
//! stability is the double-sum PLMI with blocks
//! `Φ_ij = (A_i Q + B_i F_j)ᵀ + A_i Q + B_i F_j`. Each relaxation turns it
//! into an SDP, solved together with `Q ⪰ t·I` under one shared margin.

mod simulate;
mod synthesis;
mod sweep;
mod system;

pub use simulate::{
    sampling_check, simulate, simulation_check, validate_controller, SamplingReport,
    SimulationConfig, SimulationRun, ValidationReport,
};
pub use synthesis::{synthesis_problem, synthesize, SynthesisOutcome, SynthesisResult, PACKING};
pub use sweep::{sweep, FeasibilityMap, SweepAxis, SweepCell, SweepOutcome};
pub use system::{build_phi, example_system, DecisionLayout, FuzzySystem};
