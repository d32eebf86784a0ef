//! The reference framework where devices run every blockchain function
//! themselves and offload only mining to the edge servers.

use std::collections::BTreeMap;

use crate::analytics::{self, EvaluationReport, Placement};
use crate::domain::{BlockchainFunctionKind, Instance, UserId};
use crate::placement::{
    brute_force_solve, search_space, solve_with_fallback, MmSettings, PlacementError,
    SolveStatus, SEARCH_SPACE_LIMIT,
};
use crate::scalar::Scalar;
use crate::workload::FunctionChain;

/// How the offloaded mining tasks were placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiningPlacement {
    BruteForce,
    Relaxation { lp_solves: usize, status: SolveStatus },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineEvaluation<T> {
    pub report: EvaluationReport<T>,
    pub placement: Placement<T>,
    pub method: MiningPlacement,
}

/// Metrics of the mining-only offloading baseline.
pub fn evaluate_baseline<T: Scalar>(
    instance: &Instance<T>,
    settings: &MmSettings<T>,
) -> Result<EvaluationReport<T>, PlacementError> {
    evaluate_baseline_detailed(instance, settings).map(|b| b.report)
}

/// [`evaluate_baseline`] together with the mining placement and how it was
/// found.
pub fn evaluate_baseline_detailed<T: Scalar>(
    instance: &Instance<T>,
    settings: &MmSettings<T>,
) -> Result<BaselineEvaluation<T>, PlacementError> {
    let params = instance.params();
    let costs = instance.costs();
    let users = instance.users();
    let chains = instance.chains();

    // Serial on-device execution of everything but mining.
    let mut local_s: BTreeMap<UserId, T> = BTreeMap::new();
    let mut e_local_j = T::zero();
    for (_, d) in instance.demands() {
        if d.kind == BlockchainFunctionKind::Mining {
            continue;
        }
        if d.kind.is_broadcast() {
            e_local_j = e_local_j + costs.gossip_energy_j;
            continue;
        }
        let user = instance
            .user(d.user_id)
            .expect("validated chains reference known users");
        let t = d.cycles / user.local_capacity_hz;
        e_local_j = e_local_j + user.local_power_w * t;
        let slot = local_s.entry(d.user_id).or_insert_with(T::zero);
        *slot = *slot + t;
    }
    let t_local_s = local_s.values().fold(T::zero(), |m, &t| m.max(t));

    let mining: Vec<FunctionChain<T>> = chains
        .iter()
        .filter_map(|c| {
            let demands: Vec<_> = c
                .demands
                .iter()
                .filter(|d| d.kind == BlockchainFunctionKind::Mining)
                .cloned()
                .collect();
            (!demands.is_empty()).then_some(FunctionChain {
                user_id: c.user_id,
                role: c.role,
                demands,
            })
        })
        .collect();
    let sub = instance
        .clone()
        .with_chains(mining)
        .expect("a filtered pipeline keeps its order");

    let (placement, method) = place_mining(&sub, settings)?;
    let mec = analytics::evaluate(&placement, &sub)?;

    let t_ran_s = mec.t_ran_s;
    let e_ran_j = mec.e_ran_j;
    let total_s = t_local_s + t_ran_s + mec.t_mec_s;
    let p_mining = analytics::p_mining(chains, users)?;
    let p_orphan = analytics::p_orphan(params);
    let r_mining = analytics::r_mining(params, &p_mining, p_orphan);
    let e_total_j = e_ran_j + mec.e_mec_j + e_local_j;

    let mut violations = Vec::new();
    violations.extend(analytics::latency_violation(total_s, params.t_th_s));
    violations.extend(
        mec.violations
            .into_iter()
            .filter(|v| !matches!(v, analytics::ConstraintViolation::Latency { .. })),
    );

    let report = EvaluationReport {
        e_ran_j,
        e_mec_j: mec.e_mec_j,
        e_local_j,
        e_total_j,
        t_ran_s,
        t_mec_s: mec.t_mec_s,
        t_local_s,
        server_load_cycles: mec.server_load_cycles,
        p_mining,
        p_orphan,
        objective: e_total_j - r_mining.total,
        r_mining,
        confirmation_rate_tps: analytics::confirmation_rate(params, total_s, p_orphan).ok(),
        feasible: violations.is_empty(),
        violations,
    };
    Ok(BaselineEvaluation {
        report,
        placement,
        method,
    })
}

fn place_mining<T: Scalar>(
    sub: &Instance<T>,
    settings: &MmSettings<T>,
) -> Result<(Placement<T>, MiningPlacement), PlacementError> {
    if sub.demands().is_empty() {
        return Ok((Placement::default(), MiningPlacement::BruteForce));
    }
    if search_space(sub) <= SEARCH_SPACE_LIMIT {
        match brute_force_solve(sub) {
            Ok(sol) => return Ok((sol.placement, MiningPlacement::BruteForce)),
            Err(PlacementError::Infeasible) => {}
            Err(e) => return Err(e),
        }
    }
    let out = solve_with_fallback(sub, settings)?;
    let method = MiningPlacement::Relaxation {
        lp_solves: out.solution.trace.lp_solves(),
        status: out.status,
    };
    Ok((out.solution.placement, method))
}
