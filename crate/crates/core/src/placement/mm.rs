use serde::{Deserialize, Serialize};

use crate::analytics::{self, EvaluationReport, Placement};
use crate::domain::Instance;
use crate::scalar::Scalar;

use super::lp::{solve_lp_warm, LpStatus, WarmStart};
use super::{improve, repair_with, Model, PlacementError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmSettings<T> {
    /// Penalty weight on `x - x^2`; `None` picks [`default_penalty`].
    pub mu: Option<T>,
    pub max_iter: usize,
    /// Stop once no variable moves by more than this between iterates.
    pub conv_tol: T,
    /// Feasibility tolerance handed to the LP solver.
    pub lp_tol: T,
    /// Include the latency row (C1). Dropping it lets a sweep still report
    /// metrics for points whose deadline no placement can meet.
    pub enforce_latency: bool,
}

impl<T: Scalar> Default for MmSettings<T> {
    fn default() -> Self {
        MmSettings {
            mu: None,
            max_iter: 100,
            conv_tol: T::of(1e-5),
            lp_tol: T::of(1e-6),
            enforce_latency: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    /// Surrogate built at the previous iterate, evaluated at this one.
    pub surrogate: T,
    pub penalized: T,
    /// `max |x - round(x)|`.
    pub max_fractionality: T,
    /// `max |x - x_prev|`.
    pub max_change: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// Iteration budget exhausted; the best iterate is returned.
    NoConvergence,
    /// The LP returned a point that did not lower the penalised objective
    /// (only possible through round-off); the previous iterate is kept.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace<T> {
    pub mu: T,
    /// Entry 0 is the uniform starting point.
    pub iterations: Vec<IterationRecord<T>>,
    pub termination: Termination,
}

impl<T: Scalar> SolverTrace<T> {
    /// LP solves performed.
    pub fn lp_solves(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }

    pub fn penalized_sequence(&self) -> Vec<T> {
        self.iterations.iter().map(|r| r.penalized).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmSolution<T> {
    /// Rounded and repaired binary placement.
    pub placement: Placement<T>,
    /// Last accepted relaxed iterate.
    pub relaxed: Placement<T>,
    pub trace: SolverTrace<T>,
    pub repair_moves: usize,
    /// Energy-lowering single moves made after repair.
    pub improvement_moves: usize,
    pub report: EvaluationReport<T>,
}

/// Ten times the largest processing-energy coefficient, so that the
/// integrality penalty dominates near convergence.
pub fn default_penalty<T: Scalar>(instance: &Instance<T>) -> Result<T, PlacementError> {
    let model = Model::new(instance)?;
    Ok(penalty_for(&model))
}

fn penalty_for<T: Scalar>(model: &Model<T>) -> T {
    let largest = model.energy.iter().fold(T::zero(), |m, &e| m.max(e));
    if largest > T::zero() {
        T::of(10.0) * largest
    } else {
        T::one()
    }
}

fn max_fractionality<T: Scalar>(x: &[T]) -> T {
    x.iter()
        .fold(T::zero(), |m, &v| m.max((v - v.round()).abs()))
}

/// Majorization-minimization on the penalised relaxation.
///
/// Starting from the uniform split, each iteration linearises the concave
/// `-x^2` term at the current iterate and solves the resulting LP over the
/// assignment, capacity and latency rows. The last iterate is rounded to
/// its largest-weight server per demand, repaired for capacity and latency,
/// and polished with energy-lowering single moves.
pub fn mm_solve<T: Scalar>(
    instance: &Instance<T>,
    settings: &MmSettings<T>,
) -> Result<MmSolution<T>, PlacementError> {
    let model = Model::new(instance)?;
    let mu = match settings.mu {
        Some(mu) if mu.is_finite() && mu >= T::zero() => mu,
        Some(mu) => return Err(PlacementError::InvalidSetting(format!("penalty weight {mu}"))),
        None => penalty_for(&model),
    };
    let (nd, ns) = (model.demands(), model.servers());
    let mut x = vec![T::one() / T::count(ns as u64); nd * ns];
    let start = model.penalized(&x, mu);
    let mut trace = SolverTrace {
        mu,
        iterations: vec![IterationRecord {
            surrogate: start,
            penalized: start,
            max_fractionality: max_fractionality(&x),
            max_change: T::zero(),
        }],
        termination: Termination::NoConvergence,
    };

    let mut lp = model.lp(model.surrogate_coefficients(&x, mu), settings.enforce_latency);
    let mut warm: Option<WarmStart<T>> = None;
    for _ in 0..settings.max_iter {
        lp.objective = model.surrogate_coefficients(&x, mu);
        let (status, basis) = solve_lp_warm(&lp, settings.lp_tol, warm.as_ref())?;
        let next = match status {
            LpStatus::Optimal { x, .. } => x,
            // The rows never change, so only the first solve can fail.
            LpStatus::Infeasible | LpStatus::Unbounded => return Err(PlacementError::Infeasible),
        };
        warm = basis.or(warm);

        let penalized = model.penalized(&next, mu);
        let previous = trace.iterations.last().expect("start recorded").penalized;
        if penalized > previous {
            // A rise at round-off level means the LP returned the same point.
            let noise = T::epsilon() * T::of(1e4) * previous.abs().max(T::one());
            trace.termination = if penalized - previous <= noise {
                Termination::Converged
            } else {
                Termination::Stalled
            };
            break;
        }
        let max_change = x
            .iter()
            .zip(&next)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        trace.iterations.push(IterationRecord {
            surrogate: model.surrogate(&next, &x, mu),
            penalized,
            max_fractionality: max_fractionality(&next),
            max_change,
        });
        x = next;
        if max_change < settings.conv_tol {
            trace.termination = Termination::Converged;
            break;
        }
    }

    let relaxed = model.fractional_placement(&x);
    let rounded = model.binary_placement(&model.round(&x));
    let (repaired, repair_moves) = repair_with(
        &rounded,
        instance,
        10 * nd,
        settings.enforce_latency,
    )?;
    let (placement, improvement_moves) = improve(&repaired, instance, settings.enforce_latency)?;
    let report = analytics::evaluate(&placement, instance)?;
    Ok(MmSolution {
        placement,
        relaxed,
        trace,
        repair_moves,
        improvement_moves,
        report,
    })
}

/// Optimal value of the continuous relaxation (no penalty), expressed in
/// objective units: a lower bound on every binary placement's objective.
pub fn relaxed_lower_bound<T: Scalar>(
    instance: &Instance<T>,
    settings: &MmSettings<T>,
) -> Result<T, PlacementError> {
    let model = Model::new(instance)?;
    let lp = model.lp(model.energy.clone(), settings.enforce_latency);
    let (status, _) = solve_lp_warm(&lp, settings.lp_tol, None)?;
    match status {
        LpStatus::Optimal { value, .. } => Ok(value + model.constant),
        _ => Err(PlacementError::Infeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        validate_instance, BlockchainParams, CostTable, DeviceClass, Server, ServerGraph,
        UserDevice,
    };
    use crate::placement::brute_force_solve;
    use crate::workload::{ChainRole, FunctionChain, FunctionDemand};
    use crate::domain::BlockchainFunctionKind;

    fn instance(servers: &[(u32, f64, f64)], cycles: &[f64], t_th_s: f64) -> Instance<f64> {
        let inst = validate_instance(
            ServerGraph {
                servers: servers
                    .iter()
                    .map(|&(id, capacity_hz, power_w)| Server {
                        id,
                        capacity_hz,
                        power_w,
                    })
                    .collect(),
                links: vec![],
            },
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            BlockchainParams {
                t_th_s,
                ..Default::default()
            },
            CostTable::default(),
        )
        .unwrap();
        let kinds = BlockchainFunctionKind::ALL;
        inst.with_chains(vec![FunctionChain {
            user_id: 0,
            role: ChainRole::Miner,
            demands: cycles
                .iter()
                .zip(kinds)
                .map(|(&c, kind)| FunctionDemand {
                    user_id: 0,
                    kind,
                    cycles: c,
                    input_bytes: 0.0,
                    output_bytes: 0.0,
                })
                .collect(),
        }])
        .unwrap()
    }

    #[test]
    fn single_server_converges_immediately() {
        let inst = instance(&[(4, 5e9, 125.0)], &[1e8, 2e8, 3e8], 1.0);
        let sol = mm_solve(&inst, &MmSettings::default()).unwrap();
        assert_eq!(sol.trace.lp_solves(), 1);
        assert_eq!(sol.trace.termination, Termination::Converged);
        assert!(sol.placement.assign.values().all(|&s| s == 4));
        assert!(sol.report.feasible);
    }

    #[test]
    fn zero_penalty_still_rounds_to_binary() {
        let inst = instance(&[(0, 5e9, 125.0), (1, 5e9, 125.0)], &[1e9, 1e9, 1e9], 10.0);
        let settings = MmSettings {
            mu: Some(0.0),
            ..Default::default()
        };
        let sol = mm_solve(&inst, &settings).unwrap();
        assert_eq!(sol.placement.assign.len(), 3);
        assert!(sol.placement.fractional.is_none());
        assert!(sol.report.feasible);
    }

    #[test]
    fn matches_oracle_on_capacity_bound_instance() {
        // The cheap server holds only one of the two large demands.
        let inst = instance(
            &[(0, 2e9, 50.0), (1, 2e9, 150.0), (2, 4e9, 400.0)],
            &[1.5e9, 1.2e9, 0.3e9],
            1.0,
        );
        let oracle = brute_force_solve(&inst).unwrap();
        let sol = mm_solve(&inst, &MmSettings::default()).unwrap();
        assert!(sol.report.feasible);
        assert!(sol.report.objective <= oracle.report.objective * 1.05 + 1e-9);
        let bound = relaxed_lower_bound(&inst, &MmSettings::default()).unwrap();
        assert!(bound <= oracle.report.objective + 1e-9);
    }

    #[test]
    fn penalized_trace_descends() {
        let inst = instance(
            &[(0, 3e9, 90.0), (1, 2e9, 70.0), (2, 5e9, 200.0)],
            &[1.1e9, 0.9e9, 1.4e9, 0.2e9],
            1.5,
        );
        let sol = mm_solve(&inst, &MmSettings::default()).unwrap();
        let seq = sol.trace.penalized_sequence();
        assert!(seq.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{seq:?}");
    }

    #[test]
    fn infeasible_latency_is_reported() {
        let inst = instance(&[(0, 1e9, 100.0)], &[2e9], 1.0);
        assert_eq!(
            mm_solve(&inst, &MmSettings::default()).unwrap_err(),
            PlacementError::Infeasible
        );
    }

    #[test]
    fn negative_penalty_is_rejected() {
        let inst = instance(&[(0, 1e9, 100.0)], &[1e8], 1.0);
        let settings = MmSettings {
            mu: Some(-1.0),
            ..Default::default()
        };
        assert!(matches!(
            mm_solve(&inst, &settings),
            Err(PlacementError::InvalidSetting(_))
        ));
    }
}
