//! One-dimensional parameter sweeps, emitted as CSV with one row per grid
//! point and framework.

use std::io::Write;

use bfv_core::baseline::{evaluate_baseline_detailed, MiningPlacement};
use bfv_core::placement::{solve_with_fallback, SolveStatus, Termination};
use bfv_core::{EvaluationReport, Instance, MmSettings, ValidationErrors};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, ServerEntry, Users};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepField {
    /// Capacity of every server, in Hz.
    ServerCapacity,
    /// Transactions per block.
    BlockSize,
    /// Size of a generated miner population.
    MinerCount,
    /// Block interval, in seconds.
    BlockInterval,
}

impl SweepField {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepField::ServerCapacity => "server_capacity",
            SweepField::BlockSize => "block_size",
            SweepField::MinerCount => "miner_count",
            SweepField::BlockInterval => "block_interval",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepField::BlockSize | SweepField::MinerCount)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub field: SweepField,
    pub grid: Vec<f64>,
}

impl SweepSpec {
    /// The grid must be non-empty, finite, positive and strictly
    /// increasing; counts must be whole numbers.
    pub fn check(&self) -> Result<(), String> {
        if self.grid.is_empty() {
            return Err("grid is empty".into());
        }
        for &v in &self.grid {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("grid value {v} is not positive"));
            }
            if self.field.integral() && (v.fract() != 0.0 || v > u32::MAX as f64) {
                return Err(format!("{} needs whole numbers, got {v}", self.field.as_str()));
            }
        }
        if let Some(w) = self.grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(format!("grid is not strictly increasing at {} -> {}", w[0], w[1]));
        }
        Ok(())
    }
}

/// The scenario's instance with `field` set to `value`.
pub fn instance_at(
    scenario: &Scenario,
    field: SweepField,
    value: f64,
) -> Result<Instance, ValidationErrors> {
    let mut servers = scenario.servers.clone();
    let mut users = scenario.users.clone();
    let mut params = scenario.params.clone();
    match field {
        SweepField::ServerCapacity => {
            servers = servers
                .into_iter()
                .map(|s| ServerEntry {
                    capacity_hz: value,
                    ..s
                })
                .collect();
        }
        SweepField::BlockSize => params.n_trans = value as u64,
        SweepField::MinerCount => {
            users = Users::Population {
                miner_count: value as u32,
            }
        }
        SweepField::BlockInterval => params.t_th_s = value,
    }
    Scenario::build(&servers, &scenario.links, &users, &params, &scenario.costs)
}

/// One CSV row. Metric cells are empty when the point could not be solved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_field: &'static str,
    pub sweep_value: f64,
    pub framework: &'static str,
    pub feasible: bool,
    pub e_ran_j: Option<f64>,
    pub e_mec_j: Option<f64>,
    pub e_total_j: Option<f64>,
    pub t_ran_s: Option<f64>,
    pub t_mec_s: Option<f64>,
    pub p_orphan: Option<f64>,
    pub avg_p_mining: Option<f64>,
    pub avg_r_mining: Option<f64>,
    pub sum_r_mining: Option<f64>,
    pub confirmation_rate_tps: Option<f64>,
    pub objective: Option<f64>,
    pub solver_iters: usize,
    pub solver_status: String,
}

pub const FRAMEWORK_BFV: &str = "bfv";
pub const FRAMEWORK_BASELINE: &str = "baseline";

impl SweepRow {
    fn new(field: SweepField, value: f64, framework: &'static str) -> Self {
        SweepRow {
            sweep_field: field.as_str(),
            sweep_value: value,
            framework,
            feasible: false,
            e_ran_j: None,
            e_mec_j: None,
            e_total_j: None,
            t_ran_s: None,
            t_mec_s: None,
            p_orphan: None,
            avg_p_mining: None,
            avg_r_mining: None,
            sum_r_mining: None,
            confirmation_rate_tps: None,
            objective: None,
            solver_iters: 0,
            solver_status: String::new(),
        }
    }

    fn with_report(mut self, r: &EvaluationReport) -> Self {
        self.feasible = r.feasible;
        self.e_ran_j = Some(r.e_ran_j);
        self.e_mec_j = Some(r.e_mec_j);
        self.e_total_j = Some(r.e_total_j);
        self.t_ran_s = Some(r.t_ran_s);
        self.t_mec_s = Some(r.t_mec_s);
        self.p_orphan = Some(r.p_orphan);
        self.avg_p_mining = Some(r.avg_p_mining());
        self.avg_r_mining = Some(r.avg_r_mining());
        self.sum_r_mining = Some(r.r_mining.total);
        self.confirmation_rate_tps = r.confirmation_rate_tps;
        self.objective = Some(r.objective);
        self
    }

    fn failed(mut self, message: impl std::fmt::Display) -> Self {
        self.solver_status = format!("error: {message}");
        self
    }
}

/// `converged`, `no_convergence` or `stalled`, suffixed with
/// `+latency_relaxed` when the deadline had to be dropped.
pub fn status_label(termination: Termination, status: SolveStatus) -> String {
    let base = match termination {
        Termination::Converged => "converged",
        Termination::NoConvergence => "no_convergence",
        Termination::Stalled => "stalled",
    };
    match status {
        SolveStatus::Optimal => base.to_string(),
        SolveStatus::LatencyRelaxed => format!("{base}+latency_relaxed"),
    }
}

/// BFV and baseline rows for one instance.
pub fn point_rows(
    instance: &Instance,
    settings: &MmSettings,
    field: SweepField,
    value: f64,
) -> [SweepRow; 2] {
    let bfv = SweepRow::new(field, value, FRAMEWORK_BFV);
    let bfv = match solve_with_fallback(instance, settings) {
        Ok(out) => {
            let mut row = bfv.with_report(&out.solution.report);
            row.solver_iters = out.solution.trace.lp_solves();
            row.solver_status = status_label(out.solution.trace.termination, out.status);
            row
        }
        Err(e) => bfv.failed(e),
    };
    let base = SweepRow::new(field, value, FRAMEWORK_BASELINE);
    let base = match evaluate_baseline_detailed(instance, settings) {
        Ok(b) => {
            let mut row = base.with_report(&b.report);
            match b.method {
                MiningPlacement::BruteForce => row.solver_status = "exhaustive".into(),
                MiningPlacement::Relaxation { lp_solves, status } => {
                    row.solver_iters = lp_solves;
                    row.solver_status = match status {
                        SolveStatus::Optimal => "relaxation".into(),
                        SolveStatus::LatencyRelaxed => "relaxation+latency_relaxed".into(),
                    };
                }
            }
            row
        }
        Err(e) => base.failed(e),
    };
    [bfv, base]
}

/// Runs every grid point (in parallel) and returns the rows in grid order.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec, settings: &MmSettings) -> Vec<SweepRow> {
    spec.grid
        .par_iter()
        .map(|&value| match instance_at(scenario, spec.field, value) {
            Ok(inst) => point_rows(&inst, settings, spec.field, value),
            Err(e) => [
                SweepRow::new(spec.field, value, FRAMEWORK_BFV).failed(&e),
                SweepRow::new(spec.field, value, FRAMEWORK_BASELINE).failed(&e),
            ],
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn grids_must_increase() {
        let spec = SweepSpec {
            field: SweepField::BlockInterval,
            grid: vec![1.0, 1.0],
        };
        assert!(spec.check().is_err());
        let spec = SweepSpec {
            field: SweepField::MinerCount,
            grid: vec![10.0, 20.5],
        };
        assert!(spec.check().is_err());
        assert!(parse_scenario(r#"{"sweep": {"field": "block_size", "grid": []}}"#).is_err());
        assert!(parse_scenario(r#"{"sweep": {"field": "colour", "grid": [1]}}"#).is_err());
    }

    #[test]
    fn miner_sweep_regenerates_population() {
        let s = parse_scenario(r#"{"users": {"miner_count": 3}}"#).unwrap();
        let inst = instance_at(&s, SweepField::MinerCount, 9.0).unwrap();
        assert_eq!(inst.users().len(), 9);
        let iot = inst
            .users()
            .iter()
            .filter(|u| u.class == bfv_core::DeviceClass::IotSensor)
            .count();
        assert_eq!(iot, 3);
    }

    #[test]
    fn rows_come_in_grid_order_with_both_frameworks() {
        let s = parse_scenario(
            r#"{"servers": [{"id": 0}, {"id": 1}], "users": {"miner_count": 2},
                "params": {"t_th_s": 10},
                "sweep": {"field": "server_capacity", "grid": [1e9, 2e9, 3e9]}}"#,
        )
        .unwrap();
        let rows = run_sweep(&s, s.sweep.as_ref().unwrap(), &s.settings());
        assert_eq!(rows.len(), 6);
        let order: Vec<(f64, &str)> = rows.iter().map(|r| (r.sweep_value, r.framework)).collect();
        assert_eq!(
            order,
            vec![
                (1e9, "bfv"),
                (1e9, "baseline"),
                (2e9, "bfv"),
                (2e9, "baseline"),
                (3e9, "bfv"),
                (3e9, "baseline")
            ]
        );
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "sweep_field,sweep_value,framework,feasible,e_ran_j,e_mec_j,e_total_j,t_ran_s,t_mec_s,p_orphan,avg_p_mining,avg_r_mining,sum_r_mining,confirmation_rate_tps,objective,solver_iters,solver_status"
        );
    }
}
