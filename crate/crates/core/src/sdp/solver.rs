//! Log-det barrier path-following solver for the margin problem.
//!
//! Variables are `y = (x, t)`. Every constraint is rewritten as a slack block
//! `S(y) = D0 + Σ x_k D_k - t·I ≻ 0` (negativity constraints are negated),
//! and the ball `‖x‖ ≤ R` contributes `-log(R² - ‖x‖²)`. The iterate is kept
//! strictly inside all blocks, so any reported decision vector is a genuine
//! interior point whose margin is the current `t`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::AffineSymExpr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Feasibility threshold relative to the problem scale (largest constant
    /// term spectral norm, at least 1).
    pub eps_feas: f64,
    /// Cap on Newton steps across all centering rounds.
    pub max_iter: usize,
    /// Radius `R` of the ball constraint `‖x‖₂ ≤ R`.
    pub var_bound: f64,
    /// Reserved for randomized components; the barrier method is deterministic.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_feas: 1e-7,
            max_iter: 600,
            var_bound: 1e4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    #[serde(rename = "numfail")]
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalFailure => "numfail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: SolveStatus,
    /// Present iff `status == Feasible`.
    pub x: Option<Vec<f64>>,
    /// Margin `t` of the final iterate.
    pub margin: f64,
    /// The absolute threshold `eps_feas * scale` the margin was compared to.
    pub threshold: f64,
    pub iterations: usize,
}

/// Labelled negativity (`⪯ -t·I`) and positivity (`⪰ t·I`) constraints over a
/// shared decision vector.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    num_vars: usize,
    negative: Vec<(String, AffineSymExpr)>,
    positive: Vec<(String, AffineSymExpr)>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            negative: Vec::new(),
            positive: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn check(&self, label: &str, e: &AffineSymExpr) -> Result<()> {
        if e.num_vars() != self.num_vars {
            return Err(Error::input(format!(
                "constraint {label} has {} variables, problem has {}",
                e.num_vars(),
                self.num_vars
            )));
        }
        Ok(())
    }

    /// Requires `e(x) ≺ 0`.
    pub fn add_negative(&mut self, label: impl Into<String>, e: AffineSymExpr) -> Result<()> {
        let label = label.into();
        self.check(&label, &e)?;
        self.negative.push((label, e));
        Ok(())
    }

    /// Requires `e(x) ≻ 0`.
    pub fn add_positive(&mut self, label: impl Into<String>, e: AffineSymExpr) -> Result<()> {
        let label = label.into();
        self.check(&label, &e)?;
        self.positive.push((label, e));
        Ok(())
    }

    pub fn negative_constraints(&self) -> &[(String, AffineSymExpr)] {
        &self.negative
    }

    pub fn positive_constraints(&self) -> &[(String, AffineSymExpr)] {
        &self.positive
    }

    /// Every expression multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let map = |v: &[(String, AffineSymExpr)]| {
            v.iter()
                .map(|(l, e)| (l.clone(), e.scale(alpha)))
                .collect::<Vec<_>>()
        };
        Self {
            num_vars: self.num_vars,
            negative: map(&self.negative),
            positive: map(&self.positive),
        }
    }

    /// `max(1, largest spectral norm among constant terms)`.
    pub fn scale(&self) -> f64 {
        self.negative
            .iter()
            .chain(&self.positive)
            .map(|(_, e)| e.constant_term().spectral_norm())
            .fold(1.0, f64::max)
    }

    /// Absolute margin a solve must exceed to be declared feasible.
    pub fn threshold(&self, opts: &SolverOptions) -> f64 {
        opts.eps_feas * self.scale()
    }
}

/// Independent certificate check: evaluates every constraint at `x` and tests
/// the eigenvalues against `tol`.
pub fn verify_solution(p: &SdpProblem, x: &[f64], tol: f64) -> bool {
    if x.len() != p.num_vars {
        return false;
    }
    let neg_ok = p.negative.iter().all(|(_, e)| {
        e.evaluate(x)
            .map(|m| m.max_eigenvalue() < -tol)
            .unwrap_or(false)
    });
    let pos_ok = p.positive.iter().all(|(_, e)| {
        e.evaluate(x)
            .map(|m| m.min_eigenvalue() > tol)
            .unwrap_or(false)
    });
    neg_ok && pos_ok
}

struct Block {
    d0: DMatrix<f64>,
    dk: Vec<DMatrix<f64>>,
}

impl Block {
    fn from_expr(e: &AffineSymExpr, sign: f64) -> Self {
        Self {
            d0: e.constant_term().as_matrix() * sign,
            dk: e.coefficients().iter().map(|c| c.as_matrix() * sign).collect(),
        }
    }

    fn slack(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let nv = self.dk.len();
        let mut s = self.d0.clone();
        for (k, d) in self.dk.iter().enumerate() {
            if y[k] != 0.0 {
                s += d * y[k];
            }
        }
        let t = y[nv];
        for i in 0..s.nrows() {
            s[(i, i)] -= t;
        }
        s
    }

    fn dim(&self) -> usize {
        self.d0.nrows()
    }
}

struct Barrier {
    blocks: Vec<Block>,
    num_vars: usize,
    radius_sq: f64,
}

struct Derivatives {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Barrier {
    /// Barrier value, or `None` outside the domain.
    fn value(&self, y: &DVector<f64>) -> Option<f64> {
        let mut v = 0.0;
        for b in &self.blocks {
            let chol = Cholesky::new(b.slack(y))?;
            v -= log_det(&chol);
        }
        let ball = self.radius_sq - y.rows(0, self.num_vars).norm_squared();
        if ball <= 0.0 {
            return None;
        }
        Some(v - ball.ln())
    }

    fn derivatives(&self, y: &DVector<f64>) -> Option<Derivatives> {
        let nv = self.num_vars;
        let dim = nv + 1;
        let mut value = 0.0;
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        for b in &self.blocks {
            let chol = Cholesky::new(b.slack(y))?;
            value -= log_det(&chol);
            let l = chol.l();
            // W_k = L⁻¹ D_k L⁻ᵀ, with D_t = -I.
            let mut w: Vec<DMatrix<f64>> = Vec::with_capacity(dim);
            for d in &b.dk {
                w.push(congruence(&l, d)?);
            }
            w.push(-congruence(&l, &DMatrix::identity(b.dim(), b.dim()))?);
            for k in 0..dim {
                grad[k] -= w[k].trace();
                for m in 0..=k {
                    let v = w[k].dot(&w[m]);
                    hess[(k, m)] += v;
                    if m != k {
                        hess[(m, k)] += v;
                    }
                }
            }
        }
        let x = y.rows(0, nv);
        let ball = self.radius_sq - x.norm_squared();
        if ball <= 0.0 {
            return None;
        }
        value -= ball.ln();
        for k in 0..nv {
            grad[k] += 2.0 * x[k] / ball;
            hess[(k, k)] += 2.0 / ball;
            for m in 0..nv {
                hess[(k, m)] += 4.0 * x[k] * x[m] / (ball * ball);
            }
        }
        Some(Derivatives { value, grad, hess })
    }

    fn degree(&self) -> f64 {
        self.blocks.iter().map(Block::dim).sum::<usize>() as f64 + 1.0
    }
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

fn congruence(l: &DMatrix<f64>, d: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let x = l.solve_lower_triangular(d)?;
    let w = l.solve_lower_triangular(&x.transpose())?;
    Some((&w + w.transpose()) * 0.5)
}

const CENTERING_TOL: f64 = 1e-10;
const GAP_REL_TOL: f64 = 1e-9;
const BARRIER_GROWTH: f64 = 10.0;

/// Maximizes the shared margin `t`; see the module documentation.
///
/// `Feasible` is returned only when the final interior iterate has margin
/// above [`SdpProblem::threshold`] and passes [`verify_solution`] at a tenth
/// of that threshold. Stalls that leave the verdict undecided are reported as
/// `NumericalFailure`, never as `Infeasible`.
pub fn solve_feasibility(p: &SdpProblem, opts: &SolverOptions) -> FeasibilityResult {
    let threshold = p.threshold(opts);
    let nv = p.num_vars;
    let barrier = Barrier {
        blocks: p
            .negative
            .iter()
            .map(|(_, e)| Block::from_expr(e, -1.0))
            .chain(p.positive.iter().map(|(_, e)| Block::from_expr(e, 1.0)))
            .collect(),
        num_vars: nv,
        radius_sq: opts.var_bound * opts.var_bound,
    };
    let fail = |margin: f64, iterations: usize| FeasibilityResult {
        status: SolveStatus::NumericalFailure,
        x: None,
        margin,
        threshold,
        iterations,
    };
    if !(opts.var_bound > 0.0) || !(opts.eps_feas >= 0.0) {
        return fail(f64::NAN, 0);
    }

    // x = 0 with t below every constant term's smallest slack eigenvalue.
    let mut y = DVector::zeros(nv + 1);
    let t_max0 = barrier
        .blocks
        .iter()
        .map(|b| crate::matrix::SymMat::symmetrize(b.d0.clone()).min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let t0 = if t_max0.is_finite() {
        t_max0 - t_max0.abs().max(1.0)
    } else {
        0.0
    };
    y[nv] = t0;

    let nu = barrier.degree();
    let mut s = 1.0 / t0.abs().max(1.0);
    let mut iterations = 0usize;

    loop {
        // Centering by damped Newton.
        let mut stalled = false;
        loop {
            if iterations >= opts.max_iter {
                stalled = true;
                break;
            }
            let Some(d) = barrier.derivatives(&y) else {
                return fail(y[nv], iterations);
            };
            let mut g = d.grad.clone();
            g[nv] -= s;
            let f0 = d.value - s * y[nv];
            let Some(step) = newton_step(&d.hess, &g) else {
                stalled = true;
                break;
            };
            let decrement = -g.dot(&step);
            if !decrement.is_finite() {
                stalled = true;
                break;
            }
            if decrement * 0.5 <= CENTERING_TOL {
                break;
            }
            iterations += 1;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-14 {
                let trial = &y + &step * alpha;
                if let Some(v) = barrier.value(&trial) {
                    let f = v - s * trial[nv];
                    if f <= f0 - 0.25 * alpha * decrement {
                        y = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                stalled = true;
                break;
            }
        }

        let t = y[nv];
        let gap = nu / s;
        let x = y.rows(0, nv).iter().copied().collect::<Vec<_>>();
        let feasible_now =
            t > threshold && verify_solution(p, &x, threshold / 10.0);
        if stalled {
            // The iterate is still interior, so a large margin is a valid certificate.
            return if feasible_now {
                FeasibilityResult {
                    status: SolveStatus::Feasible,
                    x: Some(x),
                    margin: t,
                    threshold,
                    iterations,
                }
            } else if t + gap <= threshold && iterations < opts.max_iter {
                FeasibilityResult {
                    status: SolveStatus::Infeasible,
                    x: None,
                    margin: t,
                    threshold,
                    iterations,
                }
            } else {
                fail(t, iterations)
            };
        }
        if gap <= GAP_REL_TOL * t.abs().max(1.0) || t + gap <= threshold {
            return if feasible_now {
                FeasibilityResult {
                    status: SolveStatus::Feasible,
                    x: Some(x),
                    margin: t,
                    threshold,
                    iterations,
                }
            } else if t <= threshold {
                FeasibilityResult {
                    status: SolveStatus::Infeasible,
                    x: None,
                    margin: t,
                    threshold,
                    iterations,
                }
            } else {
                // Margin above threshold but the certificate did not verify.
                fail(t, iterations)
            };
        }
        s *= BARRIER_GROWTH;
    }
}

fn newton_step(hess: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let dim = hess.nrows();
    let chol = Cholesky::new(hess.clone()).or_else(|| {
        let shift = 1e-12 * (0..dim).map(|i| hess[(i, i)].abs()).fold(1e-300, f64::max);
        Cholesky::new(hess + DMatrix::identity(dim, dim) * shift)
    })?;
    let step = -chol.solve(g);
    step.iter().all(|v| v.is_finite()).then_some(step)
}
