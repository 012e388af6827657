//! Empirical checks of a synthesized controller: membership sampling of the
//! certified PLMI and closed-loop simulation under switching memberships.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::synthesis::SynthesisResult;
use super::system::{build_phi, FuzzySystem};
use crate::error::{Error, Result};
use crate::oracle::{draw_simplex, sample_simplex};
use crate::plmi::SimplexPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub samples: usize,
    /// Largest `λ_max(Σ h_i h_j Φ_ij)` seen.
    pub worst_value: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

/// Evaluates the closed-loop PLMI at `samples` random memberships.
pub fn sampling_check(
    sys: &FuzzySystem,
    res: &SynthesisResult,
    samples: usize,
    seed: u64,
) -> Result<SamplingReport> {
    let phi = build_phi(sys).at(&res.x)?;
    let mut worst_value = f64::NEG_INFINITY;
    let mut worst_point = Vec::new();
    for h in sample_simplex(sys.rules(), samples, seed)? {
        let v = phi.evaluate(&h)?.max_eigenvalue();
        if v > worst_value {
            worst_value = v;
            worst_point = h.as_slice().to_vec();
        }
    }
    Ok(SamplingReport {
        samples,
        worst_value,
        worst_point,
        passed: worst_value < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Seconds each random membership vector is held.
    pub dwell: f64,
    pub horizon: f64,
    /// Fixed RK4 step.
    pub step: f64,
    pub initial_states: usize,
    /// Required `‖x(horizon)‖ / ‖x(0)‖` upper bound.
    pub decay_ratio: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dwell: 0.05,
            horizon: 10.0,
            step: 1e-3,
            initial_states: 8,
            decay_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub x0: Vec<f64>,
    pub x_final: Vec<f64>,
    /// `V = xᵀQ⁻¹x` at every dwell boundary, starting at `t = 0`.
    pub lyapunov: Vec<f64>,
    pub monotone: bool,
    pub decayed: bool,
}

impl SimulationRun {
    pub fn passed(&self) -> bool {
        self.monotone && self.decayed
    }
}

/// Closed-loop matrix `Σ_i h_i (A_i + B_i Σ_j h_j K_j)`.
fn closed_loop(sys: &FuzzySystem, res: &SynthesisResult, h: &[f64]) -> DMatrix<f64> {
    let nx = sys.state_dim();
    let mut k = DMatrix::zeros(sys.input_dim(), nx);
    for (hj, kj) in h.iter().zip(&res.k) {
        k += kj * *hj;
    }
    let mut acl = DMatrix::zeros(nx, nx);
    for (i, hi) in h.iter().enumerate() {
        acl += (sys.a(i) + sys.b(i) * &k) * *hi;
    }
    acl
}

fn rk4(acl: &DMatrix<f64>, x: &DVector<f64>, dt: f64) -> DVector<f64> {
    let k1 = acl * x;
    let k2 = acl * (x + &k1 * (dt / 2.0));
    let k3 = acl * (x + &k2 * (dt / 2.0));
    let k4 = acl * (x + &k3 * dt);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Largest `‖A_cl‖_F · dt` allowed before the RK4 step is subdivided.
const MAX_STEP_SCALE: f64 = 0.5;

/// Integrates the closed loop from `x0`, holding `schedule[d]` during dwell
/// interval `d`. Returns the state at every dwell boundary.
pub fn simulate(
    sys: &FuzzySystem,
    res: &SynthesisResult,
    x0: &[f64],
    schedule: &[SimplexPoint],
    cfg: &SimulationConfig,
) -> Result<Vec<Vec<f64>>> {
    if x0.len() != sys.state_dim() {
        return Err(Error::input(format!(
            "initial state has length {}, plant has {} states",
            x0.len(),
            sys.state_dim()
        )));
    }
    if !(cfg.step > 0.0 && cfg.dwell >= cfg.step) {
        return Err(Error::input("need 0 < step <= dwell"));
    }
    let base_steps = ((cfg.dwell / cfg.step).round() as usize).max(1);
    let mut x = DVector::from_column_slice(x0);
    let mut out = vec![x0.to_vec()];
    for h in schedule {
        if h.len() != sys.rules() {
            return Err(Error::input("membership length does not match rule count"));
        }
        let acl = closed_loop(sys, res, h.as_slice());
        // Refine the step when ‖A_cl‖·dt would leave RK4's accurate region.
        let stiff_steps = (cfg.dwell * acl.norm() / MAX_STEP_SCALE).ceil() as usize;
        let steps = base_steps.max(stiff_steps);
        let dt = cfg.dwell / steps as f64;
        for _ in 0..steps {
            x = rk4(&acl, &x, dt);
        }
        out.push(x.iter().copied().collect());
    }
    Ok(out)
}

/// Below this, `V` is treated as numerically zero and no longer compared.
const V_FLOOR: f64 = 1e-250;

/// Runs `cfg.initial_states` simulations from random unit-norm states under
/// random piecewise-constant memberships.
pub fn simulation_check(
    sys: &FuzzySystem,
    res: &SynthesisResult,
    seed: u64,
    cfg: &SimulationConfig,
) -> Result<Vec<SimulationRun>> {
    let q_inv = res
        .q
        .as_matrix()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::input("Q is singular"))?;
    let intervals = (cfg.horizon / cfg.dwell).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = sys.state_dim();
    let mut runs = Vec::with_capacity(cfg.initial_states);
    for _ in 0..cfg.initial_states {
        let mut x0: Vec<f64> = (0..nx).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        x0.iter_mut().for_each(|v| *v /= norm);
        let schedule: Vec<SimplexPoint> = (0..intervals).map(|_| draw_simplex(&mut rng, sys.rules())).collect();
        let states = simulate(sys, res, &x0, &schedule, cfg)?;
        let lyapunov: Vec<f64> = states
            .iter()
            .map(|s| {
                let v = DVector::from_column_slice(s);
                (v.transpose() * &q_inv * &v)[(0, 0)]
            })
            .collect();
        let monotone = lyapunov
            .windows(2)
            .all(|w| w[0] <= V_FLOOR || w[1] < w[0]);
        let x_final = states.last().cloned().unwrap_or_default();
        let final_norm = x_final.iter().map(|v| v * v).sum::<f64>().sqrt();
        runs.push(SimulationRun {
            decayed: final_norm < cfg.decay_ratio,
            x0,
            x_final,
            lyapunov,
            monotone,
        });
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub sampling: SamplingReport,
    pub simulation: Vec<SimulationRun>,
}

impl ValidationReport {
    pub fn sampling_passed(&self) -> bool {
        self.sampling.passed
    }

    pub fn simulation_passed(&self) -> bool {
        self.simulation.iter().all(SimulationRun::passed)
    }

    pub fn passed(&self) -> bool {
        self.sampling_passed() && self.simulation_passed()
    }
}

pub fn validate_controller(
    sys: &FuzzySystem,
    res: &SynthesisResult,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    Ok(ValidationReport {
        sampling: sampling_check(sys, res, samples, seed)?,
        simulation: simulation_check(sys, res, seed.wrapping_add(1), &SimulationConfig::default())?,
    })
}
