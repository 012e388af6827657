use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::synthesis::{synthesize, SynthesisOutcome};
use super::system::example_system;
use crate::error::{Error, Result};
use crate::relaxation::Relaxation;
use crate::sdp::{SolveStatus, SolverOptions};

/// Evenly spaced values `lo, ..., hi`; written `lo:hi:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::input("sweep axis needs at least one step"));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::input(format!("invalid sweep range {lo}:{hi}")));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let span = self.hi - self.lo;
        (0..self.steps)
            .map(|i| self.lo + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

impl Default for SweepAxis {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 5.0,
            steps: 26,
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::input(format!("sweep axis {s:?} is not lo:hi:steps"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let steps = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi, steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub kind: Relaxation,
    pub outcome: SynthesisOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub a: f64,
    pub b: f64,
    pub outcomes: BTreeMap<Relaxation, SynthesisOutcome>,
}

impl SweepCell {
    pub fn status(&self, kind: Relaxation) -> Option<SolveStatus> {
        self.outcomes.get(&kind).map(SynthesisOutcome::status)
    }

    pub fn is_feasible(&self, kind: Relaxation) -> bool {
        self.status(kind) == Some(SolveStatus::Feasible)
    }
}

/// Per-cell synthesis outcomes over the `(a, b)` grid, `a` major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMap {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub kinds: Vec<Relaxation>,
    pub cells: Vec<SweepCell>,
}

impl FeasibilityMap {
    pub fn cell(&self, ia: usize, ib: usize) -> &SweepCell {
        &self.cells[ia * self.b_values.len() + ib]
    }

    pub fn count(&self, kind: Relaxation, status: SolveStatus) -> usize {
        self.cells.iter().filter(|c| c.status(kind) == Some(status)).count()
    }

    /// Cells where `weaker` is feasible but `stronger` is not (numerical
    /// failures on either side excluded).
    pub fn inclusion_violations(&self, weaker: Relaxation, stronger: Relaxation) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| {
                c.is_feasible(weaker) && c.status(stronger) == Some(SolveStatus::Infeasible)
            })
            .map(|c| (c.a, c.b))
            .collect()
    }

    /// `a,b,kind,status,margin`, one row per cell and kind.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,kind,status,margin\n");
        for c in &self.cells {
            for (kind, o) in &c.outcomes {
                let _ = writeln!(out, "{},{},{},{},{:e}", c.a, c.b, kind, o.status().as_str(), o.margin());
            }
        }
        out
    }

    /// Feasible `(a, b)` points for one kind, two whitespace-separated columns.
    pub fn points(&self, kind: Relaxation) -> String {
        let mut out = String::from("# a b\n");
        for c in self.cells.iter().filter(|c| c.is_feasible(kind)) {
            let _ = writeln!(out, "{} {}", c.a, c.b);
        }
        out
    }

    /// Synthesis results for one kind: an array of result objects, each
    /// tagged with its cell's `a` and `b`.
    pub fn results_json(&self, kind: Relaxation) -> serde_json::Value {
        self.cells
            .iter()
            .filter_map(|c| {
                let res = c.outcomes.get(&kind)?.result()?;
                let mut v = res.to_json();
                v["a"] = c.a.into();
                v["b"] = c.b.into();
                Some(v)
            })
            .collect()
    }

    /// Writes `sweep.csv`, and per kind `feasible_<kind>.dat` and
    /// `synthesis_<kind>.json`, into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.csv"), self.to_csv())?;
        for kind in &self.kinds {
            std::fs::write(dir.join(format!("feasible_{kind}.dat")), self.points(*kind))?;
            let json = serde_json::to_string_pretty(&self.results_json(*kind))?;
            std::fs::write(dir.join(format!("synthesis_{kind}.json")), json)?;
        }
        Ok(())
    }
}

/// Synthesizes every kind at every `(a, b)` cell of the example plant.
/// Cells run in parallel; failures are recorded per cell.
pub fn sweep(a: SweepAxis, b: SweepAxis, kinds: &[Relaxation], opts: &SolverOptions) -> FeasibilityMap {
    let a_values = a.values();
    let b_values = b.values();
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let grid: Vec<(f64, f64)> = a_values
        .iter()
        .flat_map(|&av| b_values.iter().map(move |&bv| (av, bv)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(av, bv)| {
            let sys = example_system(av, bv);
            let outcomes = kinds
                .iter()
                .map(|&k| (k, synthesize(&sys, k, opts)))
                .collect();
            SweepCell { a: av, b: bv, outcomes }
        })
        .collect();
    FeasibilityMap {
        a_values,
        b_values,
        kinds,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let ax: SweepAxis = "0:5:26".parse().unwrap();
        let v = ax.values();
        assert_eq!(v.len(), 26);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[25], 5.0);
        assert!((v[1] - 0.2).abs() < 1e-15);
        assert!("0:5".parse::<SweepAxis>().is_err());
        assert!("5:0:3".parse::<SweepAxis>().is_err());
        assert!("0:5:0".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn single_cell_matches_direct_synthesis() {
        let opts = SolverOptions::default();
        let axis = SweepAxis::new(1.0, 1.0, 1).unwrap();
        let map = sweep(axis, SweepAxis::new(2.0, 2.0, 1).unwrap(), &[Relaxation::Theorem1], &opts);
        assert_eq!(map.cells.len(), 1);
        let direct = synthesize(&example_system(1.0, 2.0), Relaxation::Theorem1, &opts);
        assert_eq!(map.cells[0].outcomes[&Relaxation::Theorem1], direct);
    }

    #[test]
    fn small_sweep_is_complete_and_exports() {
        let opts = SolverOptions::default();
        let ax = SweepAxis::new(0.0, 5.0, 3).unwrap();
        let map = sweep(ax, ax, &[Relaxation::Tuan, Relaxation::Theorem1], &opts);
        assert_eq!(map.cells.len(), 9);
        let csv = map.to_csv();
        assert_eq!(csv.lines().count(), 1 + 18);
        assert!(csv.starts_with("a,b,kind,status,margin\n"));
        assert!(map.inclusion_violations(Relaxation::Tuan, Relaxation::Theorem1).is_empty());
        let dir = tempfile::tempdir().unwrap();
        map.write_to(dir.path()).unwrap();
        assert!(dir.path().join("feasible_thm1.dat").exists());
        assert!(dir.path().join("feasible_tuan.dat").exists());
    }
}
