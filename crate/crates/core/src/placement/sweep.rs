use serde::{Deserialize, Serialize};

use crate::analytics::EvaluationReport;
use crate::domain::{BlockchainParams, Instance};
use crate::scalar::Scalar;

use super::{mm_solve, MmSettings, MmSolution, PlacementError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Solved with every constraint in the LP.
    Optimal,
    /// No placement meets the latency deadline; solved without the latency
    /// row. The report is flagged infeasible.
    LatencyRelaxed,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::LatencyRelaxed => "latency_relaxed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome<T> {
    pub solution: MmSolution<T>,
    pub status: SolveStatus,
}

/// Runs [`mm_solve`]; when the latency deadline makes the problem
/// infeasible, solves again without it so that energy and reward figures are
/// still available.
pub fn solve_with_fallback<T: Scalar>(
    instance: &Instance<T>,
    settings: &MmSettings<T>,
) -> Result<SolveOutcome<T>, PlacementError> {
    match mm_solve(instance, settings) {
        Ok(solution) => Ok(SolveOutcome {
            solution,
            status: SolveStatus::Optimal,
        }),
        Err(PlacementError::Infeasible | PlacementError::RepairFailed(_))
            if settings.enforce_latency =>
        {
            let relaxed = MmSettings {
                enforce_latency: false,
                ..settings.clone()
            };
            let solution = mm_solve(instance, &relaxed)?;
            Ok(SolveOutcome {
                solution,
                status: SolveStatus::LatencyRelaxed,
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSizePoint<T> {
    pub n_trans: u64,
    pub report: Option<EvaluationReport<T>>,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

impl<T> BlockSizePoint<T> {
    pub fn feasible(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.feasible)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSizeSweep<T> {
    pub best_n_trans: u64,
    pub points: Vec<BlockSizePoint<T>>,
}

impl<T> BlockSizeSweep<T> {
    pub fn best(&self) -> &BlockSizePoint<T> {
        self.points
            .iter()
            .find(|p| p.n_trans == self.best_n_trans)
            .expect("best point is in the grid")
    }
}

/// Treats the block size as a decision variable: solves the placement at
/// every grid value and picks the feasible one with the largest
/// `sum(reward) - total energy`. Earlier grid values win ties.
pub fn sweep_block_size<T: Scalar>(
    instance: &Instance<T>,
    grid: &[u64],
    settings: &MmSettings<T>,
) -> Result<BlockSizeSweep<T>, PlacementError> {
    if grid.is_empty() {
        return Err(PlacementError::InvalidSetting("empty block-size grid".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &n_trans in grid {
        let params = BlockchainParams {
            n_trans,
            ..instance.params().clone()
        };
        let point = match instance.clone().with_params(params) {
            Err(e) => BlockSizePoint {
                n_trans,
                report: None,
                status: None,
                error: Some(e.to_string()),
            },
            Ok(inst) => match solve_with_fallback(&inst, settings) {
                Ok(out) => BlockSizePoint {
                    n_trans,
                    report: Some(out.solution.report),
                    status: Some(out.status),
                    error: None,
                },
                Err(e) => BlockSizePoint {
                    n_trans,
                    report: None,
                    status: None,
                    error: Some(e.to_string()),
                },
            },
        };
        points.push(point);
    }

    let mut best: Option<(T, u64)> = None;
    for p in points.iter().filter(|p| p.feasible()) {
        let r = p.report.as_ref().expect("feasible points carry a report");
        let net = r.r_mining.total - r.e_total_j;
        if best.is_none_or(|(b, _)| net > b) {
            best = Some((net, p.n_trans));
        }
    }
    let (_, best_n_trans) = best.ok_or(PlacementError::AllInfeasible)?;
    Ok(BlockSizeSweep {
        best_n_trans,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_instance, CostTable, DeviceClass, ServerGraph, UserDevice};

    fn small(t_th_s: f64) -> Instance<f64> {
        validate_instance(
            ServerGraph::homogeneous(3),
            vec![
                UserDevice::new(0, DeviceClass::MobileUser),
                UserDevice::new(1, DeviceClass::IotSensor),
            ],
            BlockchainParams {
                t_th_s,
                ..Default::default()
            },
            CostTable::default(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_grid_returns_its_point() {
        let sweep = sweep_block_size(&small(10.0), &[5000], &MmSettings::default()).unwrap();
        assert_eq!(sweep.best_n_trans, 5000);
        assert_eq!(sweep.points.len(), 1);
        assert!(sweep.best().feasible());
    }

    #[test]
    fn infeasible_points_are_reported_but_not_chosen() {
        let inst = small(1.5);
        let sweep = sweep_block_size(&inst, &[1000, 5000, 20_000], &MmSettings::default()).unwrap();
        let last = &sweep.points[2];
        assert!(!last.feasible());
        assert!(last.report.is_some());
        assert_ne!(sweep.best_n_trans, 20_000);
    }

    #[test]
    fn orphan_probability_grows_with_block_size() {
        let sweep =
            sweep_block_size(&small(10.0), &[1000, 5000, 10_000], &MmSettings::default()).unwrap();
        let p: Vec<f64> = sweep
            .points
            .iter()
            .map(|pt| pt.report.as_ref().unwrap().p_orphan)
            .collect();
        assert!(p[0] < p[1] && p[1] < p[2], "{p:?}");
    }

    #[test]
    fn all_infeasible_is_an_error() {
        let inst = small(0.01);
        assert_eq!(
            sweep_block_size(&inst, &[5000], &MmSettings::default()).unwrap_err(),
            PlacementError::AllInfeasible
        );
    }

    #[test]
    fn fallback_relaxes_latency() {
        let out = solve_with_fallback(&small(0.5), &MmSettings::default()).unwrap();
        assert_eq!(out.status, SolveStatus::LatencyRelaxed);
        assert!(out.solution.report.violates_latency());
    }
}
