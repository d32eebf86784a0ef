use std::collections::HashMap;

use crate::analytics::{self, Placement};
use crate::domain::{DemandKey, Instance, ServerGraph, ServerId};
use crate::scalar::Scalar;
use crate::workload::FunctionDemand;

use super::PlacementError;

/// Moves demands off overloaded servers until every server fits its
/// per-interval cycle budget (C2), then onto faster servers until the
/// latency constraint (C1) holds.
pub fn repair<T: Scalar>(
    placement: &Placement<T>,
    instance: &Instance<T>,
    max_moves: usize,
) -> Result<Placement<T>, PlacementError> {
    repair_with(placement, instance, max_moves, true).map(|(p, _)| p)
}

/// [`repair`] with the latency check optional; also returns the number of
/// moves made.
///
/// Each move takes the smallest positive-cycle demand on the most overloaded
/// server and sends it to the server that can absorb it with the least added
/// processing energy (lowest id on ties). Latency moves pick the relocation
/// with the least added energy per second saved.
pub fn repair_with<T: Scalar>(
    placement: &Placement<T>,
    instance: &Instance<T>,
    max_moves: usize,
    check_latency: bool,
) -> Result<(Placement<T>, usize), PlacementError> {
    let graph = instance.graph();
    let t_th = instance.params().t_th_s;
    let demands = instance.demands();
    let mut assign = indices(placement, &demands, graph)?;
    let budget: Vec<T> = graph.servers.iter().map(|s| s.capacity_hz * t_th).collect();
    let limit: Vec<T> = budget
        .iter()
        .map(|&b| b * (T::one() + T::tolerance()))
        .collect();
    let mut load = vec![T::zero(); graph.servers.len()];
    for (&s, (_, d)) in assign.iter().zip(&demands) {
        load[s] = load[s] + d.cycles;
    }

    let mut moves = 0;
    loop {
        let overloaded = (0..load.len())
            .filter(|&s| load[s] > limit[s])
            .max_by(|&a, &b| {
                (load[a] - budget[a])
                    .partial_cmp(&(load[b] - budget[b]))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(graph.servers[b].id.cmp(&graph.servers[a].id))
            });
        let Some(from) = overloaded else { break };
        if moves >= max_moves {
            return Err(PlacementError::RepairFailed(format!(
                "server {} still overloaded after {moves} moves",
                graph.servers[from].id
            )));
        }
        let victim = (0..demands.len())
            .filter(|&d| assign[d] == from && demands[d].1.cycles > T::zero())
            .min_by(|&a, &b| {
                demands[a]
                    .1
                    .cycles
                    .partial_cmp(&demands[b].1.cycles)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("an overloaded server holds a positive demand");
        let cycles = demands[victim].1.cycles;
        let target = (0..load.len())
            .filter(|&s| s != from && load[s] + cycles <= limit[s])
            .min_by(|&a, &b| {
                let cost = |s: usize| graph.servers[s].power_w * cycles / graph.servers[s].capacity_hz;
                cost(a)
                    .partial_cmp(&cost(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(graph.servers[a].id.cmp(&graph.servers[b].id))
            })
            .ok_or_else(|| {
                PlacementError::RepairFailed(format!(
                    "no server can absorb {cycles} cycles from server {}",
                    graph.servers[from].id
                ))
            })?;
        load[from] = load[from] - cycles;
        load[target] = load[target] + cycles;
        assign[victim] = target;
        moves += 1;
    }

    if check_latency {
        let t_ran = analytics::t_ran(instance.chains(), instance.users());
        let deadline = t_th * (T::one() + T::tolerance());
        let delay = |d: usize, s: usize| demands[d].1.cycles / graph.servers[s].capacity_hz;
        let mut busy: T = (0..demands.len()).map(|d| delay(d, assign[d])).sum();
        while t_ran + busy > deadline {
            if moves >= max_moves {
                return Err(PlacementError::RepairFailed(format!(
                    "latency still {} s after {moves} moves",
                    t_ran + busy
                )));
            }
            // Cheapest extra energy per second of delay saved.
            let mut best: Option<(T, usize, usize)> = None;
            for d in 0..demands.len() {
                let (from, cycles) = (assign[d], demands[d].1.cycles);
                for s in 0..load.len() {
                    let saved = delay(d, from) - delay(d, s);
                    if s == from || saved <= T::zero() || load[s] + cycles > limit[s] {
                        continue;
                    }
                    let extra = graph.servers[s].power_w * delay(d, s)
                        - graph.servers[from].power_w * delay(d, from);
                    let ratio = extra / saved;
                    let better = match best {
                        None => true,
                        Some((r, bd, bs)) => {
                            ratio < r
                                || (ratio == r
                                    && (d, graph.servers[s].id) < (bd, graph.servers[bs].id))
                        }
                    };
                    if better {
                        best = Some((ratio, d, s));
                    }
                }
            }
            let Some((_, d, s)) = best else {
                return Err(PlacementError::RepairFailed(format!(
                    "latency {} s exceeds the {} s deadline and no move shortens it",
                    t_ran + busy,
                    t_th
                )));
            };
            let from = assign[d];
            busy = busy - delay(d, from) + delay(d, s);
            load[from] = load[from] - demands[d].1.cycles;
            load[s] = load[s] + demands[d].1.cycles;
            assign[d] = s;
            moves += 1;
        }
    }

    let repaired = to_placement(&assign, &demands, graph);
    if check_latency {
        let report = analytics::evaluate(&repaired, instance)?;
        if report.violates_latency() {
            return Err(PlacementError::RepairFailed(
                "latency constraint C1 is violated".into(),
            ));
        }
    }
    Ok((repaired, moves))
}

/// Best-improvement local search over single-demand moves: relocates the
/// demand whose move lowers processing energy the most while keeping every
/// server within budget (and, if asked, the latency deadline), until no
/// such move exists. Returns the improved placement and the moves made.
pub fn improve<T: Scalar>(
    placement: &Placement<T>,
    instance: &Instance<T>,
    check_latency: bool,
) -> Result<(Placement<T>, usize), PlacementError> {
    let graph = instance.graph();
    let t_th = instance.params().t_th_s;
    let demands = instance.demands();
    let mut assign = indices(placement, &demands, graph)?;
    let limit: Vec<T> = graph
        .servers
        .iter()
        .map(|s| s.capacity_hz * t_th * (T::one() + T::tolerance()))
        .collect();
    let mut load = vec![T::zero(); graph.servers.len()];
    for (&s, (_, d)) in assign.iter().zip(&demands) {
        load[s] = load[s] + d.cycles;
    }
    let delay = |d: usize, s: usize| demands[d].1.cycles / graph.servers[s].capacity_hz;
    let energy = |d: usize, s: usize| graph.servers[s].power_w * delay(d, s);
    let slack_s = if check_latency {
        t_th * (T::one() + T::tolerance()) - analytics::t_ran(instance.chains(), instance.users())
    } else {
        T::infinity()
    };
    let mut busy: T = (0..demands.len()).map(|d| delay(d, assign[d])).sum();

    let mut moves = 0;
    let limit_moves = 10 * demands.len() * graph.servers.len() + 1;
    while moves < limit_moves {
        let mut best: Option<(T, usize, usize)> = None;
        for d in 0..demands.len() {
            let (from, cycles) = (assign[d], demands[d].1.cycles);
            let here = energy(d, from);
            // Demands the model treats as free to move would only shuffle.
            let threshold = T::tolerance() * here.abs().max(T::min_positive_value());
            for s in 0..load.len() {
                if s == from || load[s] + cycles > limit[s] {
                    continue;
                }
                let gain = energy(d, s) - here;
                if gain >= -threshold {
                    continue;
                }
                if busy - delay(d, from) + delay(d, s) > slack_s {
                    continue;
                }
                if best.is_none_or(|(g, _, _)| gain < g) {
                    best = Some((gain, d, s));
                }
            }
        }
        let Some((_, d, s)) = best else { break };
        let from = assign[d];
        busy = busy - delay(d, from) + delay(d, s);
        load[from] = load[from] - demands[d].1.cycles;
        load[s] = load[s] + demands[d].1.cycles;
        assign[d] = s;
        moves += 1;
    }
    Ok((to_placement(&assign, &demands, graph), moves))
}

fn indices<T: Scalar>(
    placement: &Placement<T>,
    demands: &[(DemandKey, &FunctionDemand<T>)],
    graph: &ServerGraph<T>,
) -> Result<Vec<usize>, PlacementError> {
    let index: HashMap<ServerId, usize> = graph
        .servers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id, i))
        .collect();
    demands
        .iter()
        .map(|(k, _)| {
            let sid = *placement
                .assign
                .get(k)
                .ok_or(analytics::AnalyticsError::UnplacedDemand(*k))?;
            Ok(*index
                .get(&sid)
                .ok_or(analytics::AnalyticsError::UnknownServer(sid))?)
        })
        .collect()
}

fn to_placement<T: Scalar>(
    assign: &[usize],
    demands: &[(DemandKey, &FunctionDemand<T>)],
    graph: &ServerGraph<T>,
) -> Placement<T> {
    Placement::binary(
        demands
            .iter()
            .zip(assign)
            .map(|((k, _), &s)| (*k, graph.servers[s].id)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        validate_instance, BlockchainFunctionKind, BlockchainParams, CostTable, DemandKey,
        DeviceClass, Server, ServerGraph, UserDevice,
    };
    use crate::workload::{ChainRole, FunctionChain, FunctionDemand};

    fn instance(servers: usize, cycles: &[f64]) -> Instance<f64> {
        let inst = validate_instance(
            ServerGraph {
                servers: (0..servers as u32)
                    .map(|id| Server {
                        id,
                        capacity_hz: 1e9,
                        power_w: 100.0,
                    })
                    .collect(),
                links: vec![],
            },
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            BlockchainParams {
                t_th_s: 100.0,
                ..Default::default()
            },
            CostTable::default(),
        )
        .unwrap();
        inst.with_chains(vec![FunctionChain {
            user_id: 0,
            role: ChainRole::Miner,
            demands: cycles
                .iter()
                .zip(BlockchainFunctionKind::ALL)
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

    fn on(servers: &[u32]) -> Placement<f64> {
        Placement::binary(
            servers
                .iter()
                .enumerate()
                .map(|(index, &s)| (DemandKey { user_id: 0, index }, s)),
        )
    }

    #[test]
    fn feasible_placement_is_unchanged() {
        let inst = instance(2, &[40e9, 50e9]);
        let p = on(&[0, 1]);
        let (q, moves) = repair_with(&p, &inst, 20, true).unwrap();
        assert_eq!(q, p);
        assert_eq!(moves, 0);
    }

    #[test]
    fn one_move_relieves_overload() {
        // budget 1e9 * 100 = 1e11 cycles per server
        let inst = instance(2, &[60e9, 50e9]);
        let (q, moves) = repair_with(&on(&[0, 0]), &inst, 20, false).unwrap();
        assert_eq!(moves, 1);
        assert_eq!(q, on(&[0, 1]));
    }

    #[test]
    fn full_servers_cannot_take_more() {
        let inst = instance(2, &[100e9, 100e9, 1e9]);
        assert!(matches!(
            repair_with(&on(&[0, 1, 0]), &inst, 20, false),
            Err(PlacementError::RepairFailed(_))
        ));
    }

    #[test]
    fn latency_moves_go_to_faster_servers() {
        let mut inst = instance(2, &[1e9, 1e9]);
        let (graph, users, mut params, costs) = inst.clone().into_inputs();
        let mut graph = graph;
        graph.servers[1].capacity_hz = 4e9;
        params.t_th_s = 1.0;
        let chains = inst.chains().to_vec();
        inst = validate_instance(graph, users, params, costs)
            .unwrap()
            .with_chains(chains)
            .unwrap();
        // 1 s + 1 s on the slow server; moving one demand gives 1.25 s,
        // moving both 0.5 s.
        let (q, moves) = repair_with(&on(&[0, 0]), &inst, 20, true).unwrap();
        assert_eq!(moves, 2);
        assert_eq!(q, on(&[1, 1]));
    }

    #[test]
    fn improve_moves_demands_to_cheaper_servers() {
        let mut inst = instance(2, &[1e9, 2e9]);
        let (mut graph, users, params, costs) = inst.clone().into_inputs();
        graph.servers[1].power_w = 50.0;
        let chains = inst.chains().to_vec();
        inst = validate_instance(graph, users, params, costs)
            .unwrap()
            .with_chains(chains)
            .unwrap();
        let (q, moves) = improve(&on(&[0, 0]), &inst, true).unwrap();
        assert_eq!(moves, 2);
        assert_eq!(q, on(&[1, 1]));
        let (again, none) = improve(&q, &inst, true).unwrap();
        assert_eq!((again, none), (q, 0));
    }
}
