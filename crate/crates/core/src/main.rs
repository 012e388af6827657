use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use plmi::oracle::{self, TrialPlan, TrialSummary, CERTIFY_GRID_ORDER, TRIAL_GRID_ORDER};
use plmi::relaxation::{check_constant, Relaxation, Verdict, DEFAULT_TOL};
use plmi::stabilization::{self, FeasibilityMap, SweepAxis};
use plmi::{read_instance, SolveStatus, SolverOptions};

const EXIT_OK: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Relaxations of double convex-sum PLMIs.
#[derive(Debug, Parser)]
#[command(name = "plmi", version)]
struct Cli {
    /// `key = value` settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one relaxation of a constant instance by eigenvalues.
    Check(CheckArgs),
    /// Compare the Tuan and binary-pattern relaxations on random instances.
    Compare(CompareArgs),
    /// Show the three-rule instance separating the two relaxations.
    DemoCounterexample(DemoArgs),
    /// Grid-oracle soundness runs.
    Oracle(OracleArgs),
    /// Stabilization feasibility sweep over the (a, b) plane.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// naive, tuan or thm1.
    #[arg(long, default_value = "thm1")]
    kind: Relaxation,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rule counts to cycle through, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    /// Matrix dimensions to cycle through, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    grid_order: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    grid_order: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    grid_order: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Grid-verify this instance instead of running random trials.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// `lo:hi:steps` for parameter a.
    #[arg(long)]
    a: Option<SweepAxis>,
    /// `lo:hi:steps` for parameter b.
    #[arg(long)]
    b: Option<SweepAxis>,
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<Relaxation>>,
    /// Output directory for `sweep.csv` and the points files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps_feas: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    var_bound: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run the membership-sampling check with this many points on every feasible cell.
    #[arg(long)]
    validate: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    tol: Option<f64>,
    seed: Option<u64>,
    trials: Option<usize>,
    grid_order: Option<usize>,
    r: Option<Vec<usize>>,
    n: Option<Vec<usize>>,
    eps_feas: Option<f64>,
    max_iter: Option<usize>,
    var_bound: Option<f64>,
    a: Option<String>,
    b: Option<String>,
    kinds: Option<Vec<String>>,
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<plmi::Error> for Failure {
    fn from(e: plmi::Error) -> Self {
        usage(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Check(args) => cmd_check(args, &cfg),
        Command::Compare(args) => cmd_compare(args, &cfg),
        Command::DemoCounterexample(args) => cmd_demo(args),
        Command::Oracle(args) => cmd_oracle(args, &cfg),
        Command::Sweep(args) => cmd_sweep(args, &cfg),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn verdict_table(v: &Verdict) -> String {
    let mut out = String::new();
    for c in &v.constraints {
        let _ = writeln!(out, "  {:<14} {:>12.6}", c.label, c.max_eig);
    }
    let _ = writeln!(
        out,
        "  worst {} = {}  => {}",
        v.worst.label,
        v.worst.max_eig,
        if v.feasible { "feasible" } else { "infeasible" }
    );
    out
}

fn cmd_check(args: CheckArgs, cfg: &Config) -> Result<u8, Failure> {
    let tol = args.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL);
    if !(tol >= 0.0) {
        return Err(usage("--tol must be non-negative"));
    }
    let p = read_instance(&args.instance)?;
    let verdict = check_constant(&args.kind.generate(&p), tol)?;
    if args.json {
        print_json(&verdict);
    } else {
        println!(
            "{} relaxation, r = {}, n = {}, {} constraints",
            args.kind,
            p.rules(),
            p.dim(),
            verdict.constraints.len()
        );
        print!("{}", verdict_table(&verdict));
    }
    Ok(if verdict.feasible { EXIT_OK } else { EXIT_VIOLATION })
}

fn trial_plan(
    trials: Option<usize>,
    seed: Option<u64>,
    r: Option<Vec<usize>>,
    n: Option<Vec<usize>>,
    grid_order: Option<usize>,
    cfg: &Config,
) -> Result<TrialPlan, Failure> {
    let defaults = TrialPlan::default();
    let plan = TrialPlan {
        trials: trials.or(cfg.trials).unwrap_or(defaults.trials),
        seed: seed.or(cfg.seed).unwrap_or(defaults.seed),
        rules: r.or_else(|| cfg.r.clone()).unwrap_or(defaults.rules),
        dims: n.or_else(|| cfg.n.clone()).unwrap_or(defaults.dims),
        grid_order: grid_order.or(cfg.grid_order).unwrap_or(TRIAL_GRID_ORDER),
        include_counterexample: false,
    };
    if plan.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if plan.grid_order == 0 {
        return Err(usage("--grid-order must be at least 1"));
    }
    Ok(plan)
}

fn summary_text(s: &TrialSummary) -> String {
    format!(
        "trials {}\n  tuan & thm1 feasible   {}\n  thm1 only              {}\n  tuan only              {}\n  neither                {}\n  grid finds violation   {}\n  soundness violations   {}\n",
        s.trials, s.both_feasible, s.thm1_only, s.tuan_only, s.neither, s.grid_violations, s.soundness_violations
    )
}

fn cmd_compare(args: CompareArgs, cfg: &Config) -> Result<u8, Failure> {
    let plan = trial_plan(args.trials, args.seed, args.r, args.n, args.grid_order, cfg)?;
    let (summary, _) = oracle::run_trials(&plan)?;
    if args.json {
        print_json(&summary);
    } else {
        print!("{}", summary_text(&summary));
        for a in &summary.anomalies {
            println!(
                "anomaly: seed {:?} r {} n {} tuan {} thm1 {} oracle {}\n  instance {}",
                a.seed,
                a.r,
                a.n,
                a.tuan_feasible,
                a.thm1_feasible,
                a.oracle_pass,
                a.instance.as_deref().unwrap_or("")
            );
        }
    }
    Ok(if summary.clean() { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_demo(args: DemoArgs) -> Result<u8, Failure> {
    let m = args.grid_order.unwrap_or(CERTIFY_GRID_ORDER);
    if m == 0 {
        return Err(usage("--grid-order must be at least 1"));
    }
    let report = oracle::counterexample_report(m)?;
    if args.json {
        print_json(&report);
        return Ok(EXIT_OK);
    }
    println!("Counterexample, r = 3, n = 1:");
    println!("  Φ11 = -2  Φ12 = 0   Φ13 = 2");
    println!("  Φ21 = 0   Φ22 = -1  Φ23 = -1");
    println!("  Φ31 = 0   Φ32 = 0   Φ33 = -2");
    println!();
    println!("Binary-pattern constraints (thm1(i,k)):");
    print!("{}", verdict_table(&report.theorem1));
    println!();
    println!("Tuan constraints:");
    print!("{}", verdict_table(&report.tuan));
    println!();
    println!(
        "Grid oracle, order {}: {} points, worst λ_max = {} at h = {:?} => {}",
        report.grid.grid_order,
        report.grid.points_checked,
        report.grid.worst_value,
        report.grid.worst_point,
        if report.grid.passed { "no violation found" } else { "VIOLATION" }
    );
    Ok(EXIT_OK)
}

fn cmd_oracle(args: OracleArgs, cfg: &Config) -> Result<u8, Failure> {
    if let Some(path) = &args.instance {
        let m = args.grid_order.or(cfg.grid_order).unwrap_or(CERTIFY_GRID_ORDER);
        if m == 0 {
            return Err(usage("--grid-order must be at least 1"));
        }
        let p = read_instance(path)?;
        let report = oracle::verify_plmi_on_grid(&p, m)?;
        if let Some(out) = &args.report {
            write_json(out, &report)?;
        }
        if args.json {
            print_json(&report);
        } else {
            println!(
                "grid order {}: {} points, worst λ_max = {} at h = {:?} => {}",
                report.grid_order,
                report.points_checked,
                report.worst_value,
                report.worst_point,
                if report.passed { "no violation found" } else { "violation" }
            );
        }
        return Ok(if report.passed { EXIT_OK } else { EXIT_VIOLATION });
    }
    let plan = trial_plan(
        Some(args.trials.or(cfg.trials).unwrap_or(100)),
        args.seed,
        args.r,
        args.n,
        args.grid_order,
        cfg,
    )?;
    let (summary, outcomes) = oracle::run_trials(&plan)?;
    if let Some(out) = &args.report {
        write_json(
            out,
            &serde_json::json!({ "plan": plan, "summary": summary, "outcomes": outcomes }),
        )?;
    }
    if args.json {
        print_json(&summary);
    } else {
        print!("{}", summary_text(&summary));
    }
    Ok(if summary.soundness_violations == 0 { EXIT_OK } else { EXIT_VIOLATION })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn parse_axis(flag: Option<SweepAxis>, cfg: Option<&String>) -> Result<SweepAxis, Failure> {
    match (flag, cfg) {
        (Some(a), _) => Ok(a),
        (None, Some(s)) => s.parse().map_err(|e: plmi::Error| usage(e.to_string())),
        (None, None) => Ok(SweepAxis::default()),
    }
}

fn cmd_sweep(args: SweepArgs, cfg: &Config) -> Result<u8, Failure> {
    let a = parse_axis(args.a, cfg.a.as_ref())?;
    let b = parse_axis(args.b, cfg.b.as_ref())?;
    let kinds = match (args.kinds, &cfg.kinds) {
        (Some(k), _) => k,
        (None, Some(names)) => names
            .iter()
            .map(|s| s.parse::<Relaxation>())
            .collect::<Result<Vec<_>, _>>()?,
        (None, None) => vec![Relaxation::Tuan, Relaxation::Theorem1],
    };
    if kinds.is_empty() {
        return Err(usage("--kinds must name at least one relaxation"));
    }
    let defaults = SolverOptions::default();
    let opts = SolverOptions {
        eps_feas: args.eps_feas.or(cfg.eps_feas).unwrap_or(defaults.eps_feas),
        max_iter: args.max_iter.or(cfg.max_iter).unwrap_or(defaults.max_iter),
        var_bound: args.var_bound.or(cfg.var_bound).unwrap_or(defaults.var_bound),
        seed: args.seed.or(cfg.seed).unwrap_or(defaults.seed),
    };
    if !(opts.var_bound > 0.0) || !(opts.eps_feas >= 0.0) || opts.max_iter == 0 {
        return Err(usage("solver options need var_bound > 0, eps_feas >= 0, max_iter >= 1"));
    }
    let map = stabilization::sweep(a, b, &kinds, &opts);
    if let Some(dir) = args.out.or_else(|| cfg.out.clone()) {
        map.write_to(&dir)?;
    }
    let violations = map.inclusion_violations(Relaxation::Tuan, Relaxation::Theorem1);
    let mut validation_failures = Vec::new();
    if let Some(samples) = args.validate {
        if samples == 0 {
            return Err(usage("--validate needs at least one sample"));
        }
        validation_failures = validate_map(&map, samples, opts.seed)?;
    }
    let total = map.cells.len() * map.kinds.len();
    let numfail: usize = map
        .kinds
        .iter()
        .map(|k| map.count(*k, SolveStatus::NumericalFailure))
        .sum();
    if args.json {
        let counts: serde_json::Map<String, serde_json::Value> = map
            .kinds
            .iter()
            .map(|k| {
                (
                    k.to_string(),
                    serde_json::json!({
                        "feasible": map.count(*k, SolveStatus::Feasible),
                        "infeasible": map.count(*k, SolveStatus::Infeasible),
                        "numfail": map.count(*k, SolveStatus::NumericalFailure),
                    }),
                )
            })
            .collect();
        print_json(&serde_json::json!({
            "cells": map.cells.len(),
            "counts": counts,
            "inclusion_violations": violations,
            "validation_failures": validation_failures,
        }));
    } else {
        println!("{} x {} cells", map.a_values.len(), map.b_values.len());
        for k in &map.kinds {
            println!(
                "  {:<5} feasible {:>4}  infeasible {:>4}  numfail {:>4}",
                k.as_str(),
                map.count(*k, SolveStatus::Feasible),
                map.count(*k, SolveStatus::Infeasible),
                map.count(*k, SolveStatus::NumericalFailure)
            );
        }
        if map.kinds.contains(&Relaxation::Tuan) && map.kinds.contains(&Relaxation::Theorem1) {
            println!("  tuan-feasible but thm1-infeasible cells: {}", violations.len());
        }
        for (a, b, kind) in &validation_failures {
            println!("  validation failed at a = {a}, b = {b} ({kind})");
        }
    }
    if !violations.is_empty() || !validation_failures.is_empty() {
        Ok(EXIT_VIOLATION)
    } else if numfail * 20 >= total.max(1) {
        Ok(EXIT_NUMERIC)
    } else {
        Ok(EXIT_OK)
    }
}

fn validate_map(map: &FeasibilityMap, samples: usize, seed: u64) -> Result<Vec<(f64, f64, Relaxation)>, Failure> {
    let mut failures = Vec::new();
    for cell in &map.cells {
        for (kind, outcome) in &cell.outcomes {
            if let Some(res) = outcome.result() {
                let sys = stabilization::example_system(cell.a, cell.b);
                let rep = stabilization::sampling_check(&sys, res, samples, seed)?;
                if !rep.passed {
                    failures.push((cell.a, cell.b, *kind));
                }
            }
        }
    }
    Ok(failures)
}
