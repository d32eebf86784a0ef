//! Side-by-side evaluation of full offloading and the mining-only baseline.

use bfv_core::placement::{solve_with_fallback, PlacementError, SolveStatus};
use bfv_core::{evaluate_baseline, EvaluationReport, Instance, MmSettings};
use serde::Serialize;

/// `baseline - bfv` for each headline metric; positive energy deltas mean
/// offloading saves energy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deltas {
    pub e_ran_j: f64,
    pub e_mec_j: f64,
    pub e_local_j: f64,
    pub e_total_j: f64,
    pub latency_s: f64,
    pub confirmation_rate_tps: Option<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub bfv_status: SolveStatus,
    pub bfv: EvaluationReport,
    pub baseline: EvaluationReport,
    pub deltas: Deltas,
}

pub fn deltas(bfv: &EvaluationReport, baseline: &EvaluationReport) -> Deltas {
    Deltas {
        e_ran_j: baseline.e_ran_j - bfv.e_ran_j,
        e_mec_j: baseline.e_mec_j - bfv.e_mec_j,
        e_local_j: baseline.e_local_j - bfv.e_local_j,
        e_total_j: baseline.e_total_j - bfv.e_total_j,
        latency_s: baseline.latency_s() - bfv.latency_s(),
        confirmation_rate_tps: baseline
            .confirmation_rate_tps
            .zip(bfv.confirmation_rate_tps)
            .map(|(b, f)| b - f),
        objective: baseline.objective - bfv.objective,
    }
}

pub fn compare(instance: &Instance, settings: &MmSettings) -> Result<Comparison, PlacementError> {
    let out = solve_with_fallback(instance, settings)?;
    let baseline = evaluate_baseline(instance, settings)?;
    let bfv = out.solution.report;
    Ok(Comparison {
        bfv_status: out.status,
        deltas: deltas(&bfv, &baseline),
        bfv,
        baseline,
    })
}
