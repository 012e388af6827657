//! Brute-force checks that sit beside the relaxations: simplex-grid
//! evaluation of the PLMI, Young's inequality, the cross-term reindexing
//! identity, and randomized comparisons of the Tuan and binary-pattern
//! families.
//!
//! Grid passage is evidence, not proof: a report with `passed == true` means
//! no violation was found among the grid points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::save_instance;
use crate::matrix::SymMat;
use crate::plmi::{random_sym, ConstantPlmi, SimplexPoint};
use crate::relaxation::{check_constant, generate_theorem1, generate_tuan, DEFAULT_TOL};

/// Largest grid a single call will enumerate.
pub const MAX_GRID_POINTS: u128 = 100_000_000;

/// Grid order used by randomized trials.
pub const TRIAL_GRID_ORDER: usize = 60;

/// Grid order for one-off certification runs.
pub const CERTIFY_GRID_ORDER: usize = 200;

/// `C(m + r - 1, r - 1)`, saturating at `u128::MAX`.
pub fn grid_size(r: usize, m: usize) -> u128 {
    let k = (r - 1) as u128;
    let top = (m + r - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic enumeration of `(k_1/m, ..., k_r/m)` with `Σ k_i = m`.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    m: usize,
    counts: Vec<usize>,
    done: bool,
}

impl Iterator for SimplexGrid {
    type Item = SimplexPoint;

    fn next(&mut self) -> Option<SimplexPoint> {
        if self.done {
            return None;
        }
        let m = self.m as f64;
        let point = SimplexPoint::from_normalized(self.counts.iter().map(|&k| k as f64 / m).collect());
        let r = self.counts.len();
        // Advance: bump the rightmost slot before the last that has mass after it.
        let mut suffix = 0;
        let mut advanced = false;
        for i in (0..r - 1).rev() {
            suffix += self.counts[i + 1];
            if suffix > 0 {
                self.counts[i] += 1;
                for c in &mut self.counts[i + 1..] {
                    *c = 0;
                }
                self.counts[r - 1] = suffix - 1;
                advanced = true;
                break;
            }
        }
        self.done = !advanced;
        Some(point)
    }
}

pub fn simplex_grid(r: usize, m: usize) -> Result<SimplexGrid> {
    if r < 2 {
        return Err(Error::input(format!("simplex grid needs r >= 2, got {r}")));
    }
    if m < 1 {
        return Err(Error::input("simplex grid order must be at least 1"));
    }
    let size = grid_size(r, m);
    if size > MAX_GRID_POINTS {
        return Err(Error::input(format!(
            "grid of order {m} over {r} rules has {} points, above the {MAX_GRID_POINTS} limit",
            if size == u128::MAX { "more than 2^128".to_string() } else { size.to_string() }
        )));
    }
    let mut counts = vec![0; r];
    counts[r - 1] = m;
    Ok(SimplexGrid {
        m,
        counts,
        done: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub grid_order: usize,
    pub points_checked: u64,
    /// Largest `λ_max(Φ(h))` over the grid.
    pub worst_value: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

pub fn verify_plmi_on_grid(p: &ConstantPlmi, m: usize) -> Result<GridReport> {
    let grid = simplex_grid(p.rules(), m)?;
    let mut worst_value = f64::NEG_INFINITY;
    let mut worst_point = Vec::new();
    let mut points_checked = 0u64;
    for h in grid {
        let v = p.evaluate(&h)?.max_eigenvalue();
        points_checked += 1;
        if v > worst_value {
            worst_value = v;
            worst_point = h.as_slice().to_vec();
        }
    }
    Ok(GridReport {
        grid_order: m,
        points_checked,
        worst_value,
        worst_point,
        passed: worst_value < 0.0,
    })
}

/// Dirichlet(1, ..., 1) samples: `r` unit exponentials normalized by their sum.
pub fn sample_simplex(r: usize, count: usize, seed: u64) -> Result<Vec<SimplexPoint>> {
    if r == 0 {
        return Err(Error::input("simplex dimension must be positive"));
    }
    if count == 0 {
        return Err(Error::input("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| draw_simplex(&mut rng, r)).collect())
}

pub(crate) fn draw_simplex<R: Rng + ?Sized>(rng: &mut R, r: usize) -> SimplexPoint {
    loop {
        let e: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = e.iter().sum();
        if sum > 0.0 && e.iter().all(|v| *v > 0.0) {
            let mut h: Vec<f64> = e.iter().map(|v| v / sum).collect();
            // Push the rounding residue into the largest coordinate.
            let resid = 1.0 - h.iter().sum::<f64>();
            let imax = (0..r).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap_or(0);
            h[imax] += resid;
            return SimplexPoint::from_normalized(h);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub equality: bool,
}

/// `ab ≤ a^λ₁/λ₁ + b^λ₂/λ₂` with `λ₂ = λ₁/(λ₁ - 1)`.
pub fn young_check(a: f64, b: f64, lambda1: f64) -> Result<YoungCheck> {
    if !(lambda1 > 1.0) || !lambda1.is_finite() {
        return Err(Error::input(format!("Young exponent must exceed 1, got {lambda1}")));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::input(format!("Young's inequality needs a, b >= 0, got ({a}, {b})")));
    }
    let lambda2 = lambda1 / (lambda1 - 1.0);
    let pa = a.powf(lambda1);
    let pb = b.powf(lambda2);
    let lhs = a * b;
    let rhs = pa / lambda1 + pb / lambda2;
    Ok(YoungCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12 * rhs.max(1.0),
        equality: (pa - pb).abs() <= 1e-9 * pa.max(pb),
    })
}

/// Frobenius norm of `Σ_i Σ_{j≠i} h_i²(Ξ_ij + Ξ_ji) - Σ_i Σ_{j≠i} h_j²(Ξ_ij + Ξ_ji)`.
/// Diagonal blocks are ignored.
pub fn lemma3_residual(xi: &[Vec<SymMat>], h: &SimplexPoint) -> Result<f64> {
    let r = xi.len();
    if h.len() != r {
        return Err(Error::input(format!(
            "membership vector has length {}, block grid has {r} rows",
            h.len()
        )));
    }
    let n = xi
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
        .map(|(_, m)| m.dim())
        .next()
        .ok_or_else(|| Error::input("need at least one off-diagonal block"))?;
    for (i, row) in xi.iter().enumerate() {
        if row.len() != r {
            return Err(Error::input(format!("row {} has {} blocks, expected {r}", i + 1, row.len())));
        }
        for (j, m) in row.iter().enumerate() {
            if i != j && m.dim() != n {
                return Err(Error::input(format!("Ξ({},{}) is not {n}x{n}", i + 1, j + 1)));
            }
        }
    }
    let h = h.as_slice();
    let mut lhs = SymMat::zeros(n);
    let mut rhs = SymMat::zeros(n);
    for i in 0..r {
        for j in (0..r).filter(|&j| j != i) {
            let pair = &xi[i][j] + &xi[j][i];
            lhs.add_scaled(h[i] * h[i], &pair);
            rhs.add_scaled(h[j] * h[j], &pair);
        }
    }
    Ok((&lhs - &rhs).frobenius_norm())
}

/// Sampler for comparison trials: uniform `[-1, 1]` entries, symmetrized, and
/// with probability ½ every diagonal block shifted by `-0.2·I`.
pub fn random_trial_instance(seed: u64, r: usize, n: usize) -> Result<ConstantPlmi> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = rng.random_bool(0.5);
    let mut phi: Vec<Vec<SymMat>> = (0..r)
        .map(|_| (0..r).map(|_| random_sym(&mut rng, n)).collect())
        .collect();
    if shift {
        for (i, row) in phi.iter_mut().enumerate() {
            row[i].add_scaled(-0.2, &SymMat::identity(n));
        }
    }
    ConstantPlmi::new(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// `None` for instances that were supplied rather than sampled.
    pub seed: Option<u64>,
    pub r: usize,
    pub n: usize,
    pub tuan_feasible: bool,
    pub thm1_feasible: bool,
    pub oracle_pass: bool,
    pub grid_worst: f64,
    /// Serialized instance, attached only to anomalous outcomes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
}

impl TrialOutcome {
    /// Tuan feasible while the binary-pattern family is not.
    pub fn implication_violated(&self) -> bool {
        self.tuan_feasible && !self.thm1_feasible
    }

    /// Binary-pattern family feasible while the grid finds a violation.
    pub fn soundness_violated(&self) -> bool {
        self.thm1_feasible && !self.oracle_pass
    }

    pub fn is_anomaly(&self) -> bool {
        self.implication_violated() || self.soundness_violated()
    }
}

/// Runs both relaxations and the grid oracle on a given instance.
pub fn evaluate_trial(p: &ConstantPlmi, grid_order: usize, seed: Option<u64>) -> Result<TrialOutcome> {
    let tuan = check_constant(&generate_tuan(p), DEFAULT_TOL)?;
    let thm1 = check_constant(&generate_theorem1(p), DEFAULT_TOL)?;
    let grid = verify_plmi_on_grid(p, grid_order)?;
    let mut outcome = TrialOutcome {
        seed,
        r: p.rules(),
        n: p.dim(),
        tuan_feasible: tuan.feasible,
        thm1_feasible: thm1.feasible,
        oracle_pass: grid.passed,
        grid_worst: grid.worst_value,
        instance: None,
    };
    if outcome.is_anomaly() {
        outcome.instance = Some(save_instance(p));
    }
    Ok(outcome)
}

pub fn implication_trial(seed: u64, r: usize, n: usize) -> Result<TrialOutcome> {
    if !(2..=6).contains(&r) || !(1..=4).contains(&n) {
        return Err(Error::input(format!(
            "trials support 2 <= r <= 6 and 1 <= n <= 4, got r = {r}, n = {n}"
        )));
    }
    let p = random_trial_instance(seed, r, n)?;
    evaluate_trial(&p, TRIAL_GRID_ORDER, Some(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trials: usize,
    pub seed: u64,
    pub rules: Vec<usize>,
    pub dims: Vec<usize>,
    pub grid_order: usize,
    /// Adds the embedded counterexample as one extra trial.
    pub include_counterexample: bool,
}

impl Default for TrialPlan {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 7,
            rules: vec![2, 3, 4],
            dims: vec![1, 2, 3],
            grid_order: TRIAL_GRID_ORDER,
            include_counterexample: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub both_feasible: usize,
    pub thm1_only: usize,
    pub tuan_only: usize,
    pub neither: usize,
    pub grid_violations: usize,
    pub soundness_violations: usize,
    pub anomalies: Vec<TrialOutcome>,
}

impl TrialSummary {
    pub fn clean(&self) -> bool {
        self.tuan_only == 0 && self.soundness_violations == 0
    }

    fn record(&mut self, o: &TrialOutcome) {
        self.trials += 1;
        match (o.tuan_feasible, o.thm1_feasible) {
            (true, true) => self.both_feasible += 1,
            (false, true) => self.thm1_only += 1,
            (true, false) => self.tuan_only += 1,
            (false, false) => self.neither += 1,
        }
        if !o.oracle_pass {
            self.grid_violations += 1;
        }
        if o.soundness_violated() {
            self.soundness_violations += 1;
        }
        if o.is_anomaly() {
            self.anomalies.push(o.clone());
        }
    }
}

/// Trial `t` uses seed `plan.seed + t`, rule count `rules[t % |rules|]` and
/// dimension `dims[(t / |rules|) % |dims|]`, so every pair is covered.
pub fn run_trials(plan: &TrialPlan) -> Result<(TrialSummary, Vec<TrialOutcome>)> {
    if plan.rules.is_empty() || plan.dims.is_empty() {
        return Err(Error::input("trial plan needs at least one r and one n"));
    }
    for &r in &plan.rules {
        if !(2..=6).contains(&r) {
            return Err(Error::input(format!("trial rule count {r} outside 2..=6")));
        }
    }
    for &n in &plan.dims {
        if !(1..=4).contains(&n) {
            return Err(Error::input(format!("trial dimension {n} outside 1..=4")));
        }
    }
    simplex_grid(*plan.rules.iter().max().unwrap(), plan.grid_order)?;
    let mut outcomes = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let r = plan.rules[t % plan.rules.len()];
            let n = plan.dims[(t / plan.rules.len()) % plan.dims.len()];
            let seed = plan.seed.wrapping_add(t as u64);
            let p = random_trial_instance(seed, r, n)?;
            evaluate_trial(&p, plan.grid_order, Some(seed))
        })
        .collect::<Result<Vec<_>>>()?;
    if plan.include_counterexample {
        outcomes.push(evaluate_trial(&ConstantPlmi::counterexample(), plan.grid_order, None)?);
    }
    let mut summary = TrialSummary::default();
    for o in &outcomes {
        summary.record(o);
    }
    Ok((summary, outcomes))
}

/// Everything the counterexample demonstration reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    /// The instance in the JSON file format.
    pub instance: serde_json::Value,
    pub theorem1: crate::relaxation::Verdict,
    pub tuan: crate::relaxation::Verdict,
    pub grid: GridReport,
}

pub fn counterexample_report(grid_order: usize) -> Result<CounterexampleReport> {
    let p = ConstantPlmi::counterexample();
    Ok(CounterexampleReport {
        instance: serde_json::from_str(&save_instance(&p)).expect("writer emits valid JSON"),
        theorem1: check_constant(&generate_theorem1(&p), DEFAULT_TOL)?,
        tuan: check_constant(&generate_tuan(&p), DEFAULT_TOL)?,
        grid: verify_plmi_on_grid(&p, grid_order)?,
    })
}
