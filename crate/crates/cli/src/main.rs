use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bfv_cli::scenario::{self, SolverSpec};
use bfv_cli::sweep::status_label;
use bfv_cli::{compare, load_scenario, run_sweep, write_csv, Scenario, ScenarioError};
use bfv_core::placement::{solve_with_fallback, PlacementError};
use bfv_core::validation::{cross_check, McConfig, SimulationError};
use bfv_core::{evaluate, AnalyticsError, MmSettings, Placement};
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bfv", version, about = "Blockchain function placement on edge servers")]
struct Cli {
    /// Penalty weight of the relaxation (default: 10x the largest energy coefficient)
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Iteration limit of the relaxation solver
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Convergence tolerance of the relaxation solver
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Suppress the summary printed on stderr
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the placement and print it with its evaluation
    Solve { scenario: PathBuf },
    /// Evaluate a given placement
    Evaluate { scenario: PathBuf, placement: PathBuf },
    /// Run the scenario's sweep and write CSV
    Sweep {
        scenario: PathBuf,
        /// Output file, `-` for stdout (default: the scenario's output.csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare full offloading with the mining-only baseline
    Compare { scenario: PathBuf },
    /// Check the closed-form probabilities by simulation
    Validate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit statuses.
const INVALID: u8 = 1;
const INFEASIBLE: u8 = 2;
const IO: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Io { .. } | ScenarioError::Parse { .. } => IO,
            ScenarioError::Validation(_) | ScenarioError::Sweep(_) => INVALID,
        };
        Failure::new(code, e)
    }
}

impl From<PlacementError> for Failure {
    fn from(e: PlacementError) -> Self {
        let code = match e {
            PlacementError::Infeasible
            | PlacementError::AllInfeasible
            | PlacementError::RepairFailed(_) => INFEASIBLE,
            _ => INVALID,
        };
        Failure::new(code, e)
    }
}

impl From<AnalyticsError> for Failure {
    fn from(e: AnalyticsError) -> Self {
        Failure::new(INVALID, e)
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        Failure::new(INVALID, e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(IO, e)
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::new(IO, e))?;
    writeln!(out)?;
    Ok(())
}

fn settings(scenario: &Scenario, cli: &Cli) -> MmSettings {
    let overrides = SolverSpec {
        mu: cli.mu,
        max_iter: cli.max_iter,
        tol: cli.tol,
    };
    scenario.solver.merged(&overrides).settings()
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    status: String,
    lp_solves: usize,
    repair_moves: usize,
    improvement_moves: usize,
    placement: &'a Placement,
    report: &'a bfv_core::EvaluationReport,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let note = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Solve { scenario } => {
            let s = load_scenario(scenario)?;
            note(format!("scenario: {s}"));
            let out = solve_with_fallback(&s.instance, &settings(&s, cli))?;
            let sol = &out.solution;
            print_json(&SolveOutput {
                status: status_label(sol.trace.termination, out.status),
                lp_solves: sol.trace.lp_solves(),
                repair_moves: sol.repair_moves,
                improvement_moves: sol.improvement_moves,
                placement: &sol.placement,
                report: &sol.report,
            })?;
            note(format!(
                "E_total {:.6} J, objective {:.6}, feasible {}",
                sol.report.e_total_j, sol.report.objective, sol.report.feasible
            ));
            if !sol.report.feasible {
                let why: Vec<String> = sol.report.violations.iter().map(|v| v.to_string()).collect();
                return Err(Failure::new(INFEASIBLE, format!("no feasible placement: {}", why.join("; "))));
            }
        }
        Command::Evaluate {
            scenario,
            placement,
        } => {
            let s = load_scenario(scenario)?;
            let text = scenario::read_file(placement)?;
            let p: Placement = scenario::parse_json(&text)?;
            let report = evaluate(&p, &s.instance)?;
            print_json(&report)?;
            note(format!(
                "E_total {:.6} J, objective {:.6}, feasible {}",
                report.e_total_j, report.objective, report.feasible
            ));
        }
        Command::Sweep { scenario, out } => {
            let s = load_scenario(scenario)?;
            let spec = s
                .sweep
                .as_ref()
                .ok_or_else(|| Failure::new(INVALID, "scenario has no sweep section"))?;
            let target = out
                .clone()
                .or_else(|| s.output.csv.clone())
                .ok_or_else(|| Failure::new(INVALID, "no output path: pass --out or set output.csv"))?;
            note(format!(
                "sweeping {} over {} points: {s}",
                spec.field.as_str(),
                spec.grid.len()
            ));
            let rows = run_sweep(&s, spec, &settings(&s, cli));
            write_rows(&rows, &target)?;
            let failed = rows.iter().filter(|r| r.solver_status.starts_with("error")).count();
            note(format!("{} rows written, {failed} failed", rows.len()));
        }
        Command::Compare { scenario } => {
            let s = load_scenario(scenario)?;
            let c = compare(&s.instance, &settings(&s, cli))?;
            print_json(&c)?;
            note(format!(
                "E_total: bfv {:.6} J, baseline {:.6} J",
                c.bfv.e_total_j, c.baseline.e_total_j
            ));
        }
        Command::Validate {
            scenario,
            trials,
            seed,
        } => {
            let s = load_scenario(scenario)?;
            let report = cross_check(
                &s.instance,
                &McConfig {
                    trials: *trials,
                    seed: *seed,
                },
            )?;
            print_json(&report)?;
            let failed: Vec<&str> = report
                .gaps
                .iter()
                .filter(|g| !g.pass)
                .map(|g| g.quantity.as_str())
                .collect();
            if !report.pass {
                return Err(Failure::new(
                    INVALID,
                    format!("outside the 3-sigma bound: {}", failed.join(", ")),
                ));
            }
            note(format!("{} quantities within bounds", report.gaps.len()));
        }
    }
    Ok(())
}

fn write_rows(rows: &[bfv_cli::SweepRow], target: &Path) -> Result<(), Failure> {
    let result = if target == Path::new("-") {
        write_csv(rows, io::stdout().lock())
    } else {
        let file = File::create(target).map_err(|e| Failure::new(IO, format!("{}: {e}", target.display())))?;
        write_csv(rows, BufWriter::new(file))
    };
    result.map_err(|e| Failure::new(IO, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
