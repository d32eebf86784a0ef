//! Closed-form metrics for a placement: delays, energies, mining and
//! orphaning probabilities, rewards, confirmation rate and the objective
//! `E_total - sum(R_mining)` subject to the latency (C1) and per-server
//! capacity (C2) constraints.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    demand_keys, BlockchainParams, CostTable, DemandKey, Instance, ServerGraph, ServerId,
    UserDevice, UserId,
};
use crate::scalar::Scalar;
use crate::workload::{ChainRole, FunctionChain, FunctionDemand};

/// Fractional weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("demand (user {}, function {}) has no placement", .0.user_id, .0.index)]
    UnplacedDemand(DemandKey),
    #[error("placement references unknown demand (user {}, function {})", .0.user_id, .0.index)]
    UnknownDemand(DemandKey),
    #[error("placement references unknown server {0}")]
    UnknownServer(ServerId),
    #[error("weights of demand (user {}, function {}) are outside [0,1] or do not sum to 1", .0.user_id, .0.index)]
    InvalidWeights(DemandKey),
    #[error("no miners")]
    NoMiners,
    #[error("total latency is zero")]
    ZeroLatency,
}

/// Assignment of demands to servers. When `fractional` is present it takes
/// precedence and `assign` is informational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlacementDoc<T>", from = "PlacementDoc<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Placement<T> {
    pub assign: BTreeMap<DemandKey, ServerId>,
    pub fractional: Option<BTreeMap<(DemandKey, ServerId), T>>,
}

impl<T> Default for Placement<T> {
    fn default() -> Self {
        Placement {
            assign: BTreeMap::new(),
            fractional: None,
        }
    }
}

impl<T: Scalar> Placement<T> {
    pub fn binary(assign: impl IntoIterator<Item = (DemandKey, ServerId)>) -> Self {
        Placement {
            assign: assign.into_iter().collect(),
            fractional: None,
        }
    }

    /// Every demand of `instance` on `server`.
    pub fn all_on(instance: &Instance<T>, server: ServerId) -> Self {
        Self::binary(instance.demands().into_iter().map(|(k, _)| (k, server)))
    }

    /// True when the placement is binary: no fractional map, or one whose
    /// weights are all within `tol` of 0 or 1.
    pub fn is_integral(&self, tol: T) -> bool {
        match &self.fractional {
            None => true,
            Some(w) => w
                .values()
                .all(|&x| x.abs() <= tol || (x - T::one()).abs() <= tol),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct AssignEntry {
    user_id: UserId,
    index: usize,
    server_id: ServerId,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct WeightEntry<T> {
    user_id: UserId,
    index: usize,
    server_id: ServerId,
    weight: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PlacementDoc<T> {
    #[serde(default)]
    assign: Vec<AssignEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fractional: Option<Vec<WeightEntry<T>>>,
}

impl<T> From<Placement<T>> for PlacementDoc<T> {
    fn from(p: Placement<T>) -> Self {
        PlacementDoc {
            assign: p
                .assign
                .into_iter()
                .map(|(k, server_id)| AssignEntry {
                    user_id: k.user_id,
                    index: k.index,
                    server_id,
                })
                .collect(),
            fractional: p.fractional.map(|w| {
                w.into_iter()
                    .map(|((k, server_id), weight)| WeightEntry {
                        user_id: k.user_id,
                        index: k.index,
                        server_id,
                        weight,
                    })
                    .collect()
            }),
        }
    }
}

impl<T> From<PlacementDoc<T>> for Placement<T> {
    fn from(d: PlacementDoc<T>) -> Self {
        let key = |user_id, index| DemandKey { user_id, index };
        Placement {
            assign: d
                .assign
                .into_iter()
                .map(|e| (key(e.user_id, e.index), e.server_id))
                .collect(),
            fractional: d.fractional.map(|w| {
                w.into_iter()
                    .map(|e| ((key(e.user_id, e.index), e.server_id), e.weight))
                    .collect()
            }),
        }
    }
}

/// Per-demand list of (server index, weight), in demand order.
pub(crate) type Weights<T> = Vec<Vec<(usize, T)>>;

pub(crate) fn resolve<T: Scalar>(
    placement: &Placement<T>,
    demands: &[(DemandKey, &FunctionDemand<T>)],
    graph: &ServerGraph<T>,
) -> Result<Weights<T>, AnalyticsError> {
    let index: HashMap<ServerId, usize> = graph
        .servers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id, i))
        .collect();
    let server_idx = |id: ServerId| index.get(&id).copied().ok_or(AnalyticsError::UnknownServer(id));

    match &placement.fractional {
        Some(w) => {
            let known: std::collections::BTreeSet<DemandKey> =
                demands.iter().map(|(k, _)| *k).collect();
            if let Some(((k, _), _)) = w.iter().find(|((k, _), _)| !known.contains(k)) {
                return Err(AnalyticsError::UnknownDemand(*k));
            }
            demands
                .iter()
                .map(|(k, _)| {
                    let mut row = Vec::new();
                    let mut sum = T::zero();
                    for (&(_, sid), &x) in w.range((*k, ServerId::MIN)..=(*k, ServerId::MAX)) {
                        let slack = T::of(WEIGHT_SUM_TOL);
                        if !x.is_finite() || x < -slack || x > T::one() + slack {
                            return Err(AnalyticsError::InvalidWeights(*k));
                        }
                        sum = sum + x;
                        row.push((server_idx(sid)?, x));
                    }
                    if row.is_empty() {
                        return Err(AnalyticsError::UnplacedDemand(*k));
                    }
                    if (sum - T::one()).abs() > T::of(WEIGHT_SUM_TOL) {
                        return Err(AnalyticsError::InvalidWeights(*k));
                    }
                    Ok(row)
                })
                .collect()
        }
        None => {
            let known: std::collections::BTreeSet<DemandKey> =
                demands.iter().map(|(k, _)| *k).collect();
            if let Some(k) = placement.assign.keys().find(|k| !known.contains(k)) {
                return Err(AnalyticsError::UnknownDemand(*k));
            }
            demands
                .iter()
                .map(|(k, _)| {
                    let sid = *placement
                        .assign
                        .get(k)
                        .ok_or(AnalyticsError::UnplacedDemand(*k))?;
                    Ok(vec![(server_idx(sid)?, T::one())])
                })
                .collect()
        }
    }
}

/// Cycles and busy seconds accumulated on each server.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ServerUsage<T> {
    pub load_cycles: Vec<T>,
    pub busy_s: Vec<T>,
}

pub(crate) fn usage<T: Scalar>(
    weights: &Weights<T>,
    demands: &[(DemandKey, &FunctionDemand<T>)],
    graph: &ServerGraph<T>,
) -> ServerUsage<T> {
    let n = graph.servers.len();
    let mut load_cycles = vec![T::zero(); n];
    let mut busy_s = vec![T::zero(); n];
    for (row, (_, d)) in weights.iter().zip(demands) {
        for &(s, x) in row {
            load_cycles[s] = load_cycles[s] + x * d.cycles;
            busy_s[s] = busy_s[s] + x * d.cycles / graph.servers[s].capacity_hz;
        }
    }
    ServerUsage {
        load_cycles,
        busy_s,
    }
}

fn broadcast_count<T: Scalar>(demands: &[(DemandKey, &FunctionDemand<T>)]) -> usize {
    demands.iter().filter(|(_, d)| d.kind.is_broadcast()).count()
}

/// Upload time of each user with at least one chain, in first-seen order.
pub fn uplink_times<T: Scalar>(
    chains: &[FunctionChain<T>],
    users: &[UserDevice<T>],
) -> Vec<(UserId, T)> {
    let mut payload: Vec<(UserId, T)> = Vec::new();
    for c in chains {
        match payload.iter_mut().find(|(u, _)| *u == c.user_id) {
            Some((_, b)) => *b = *b + c.uplink_bytes(),
            None => payload.push((c.user_id, c.uplink_bytes())),
        }
    }
    payload
        .into_iter()
        .filter_map(|(id, bytes)| {
            let user = users.iter().find(|u| u.id == id)?;
            Some((id, T::of(8.0) * bytes / user.uplink_rate_bps))
        })
        .collect()
}

/// RAN delay: the slowest user's upload gates block formation.
pub fn t_ran<T: Scalar>(chains: &[FunctionChain<T>], users: &[UserDevice<T>]) -> T {
    uplink_times(chains, users)
        .into_iter()
        .fold(T::zero(), |m, (_, t)| m.max(t))
}

/// RAN energy: each user pays transmit power for its own upload time.
pub fn e_ran<T: Scalar>(chains: &[FunctionChain<T>], users: &[UserDevice<T>]) -> T {
    uplink_times(chains, users)
        .into_iter()
        .map(|(id, t)| {
            let u = users.iter().find(|u| u.id == id).expect("user present");
            u.tx_power_w * t
        })
        .sum()
}

/// Summed processing delay over every placed demand.
pub fn t_mec<T: Scalar>(
    placement: &Placement<T>,
    chains: &[FunctionChain<T>],
    graph: &ServerGraph<T>,
) -> Result<T, AnalyticsError> {
    let demands = demand_keys(chains);
    let w = resolve(placement, &demands, graph)?;
    Ok(usage(&w, &demands, graph).busy_s.into_iter().sum())
}

/// Server processing energy plus the gossip cost of each broadcast stage.
pub fn e_mec<T: Scalar>(
    placement: &Placement<T>,
    chains: &[FunctionChain<T>],
    graph: &ServerGraph<T>,
    costs: &CostTable<T>,
) -> Result<T, AnalyticsError> {
    let demands = demand_keys(chains);
    let w = resolve(placement, &demands, graph)?;
    let u = usage(&w, &demands, graph);
    Ok(processing_energy(&u, graph) + gossip_energy(&demands, costs))
}

fn processing_energy<T: Scalar>(usage: &ServerUsage<T>, graph: &ServerGraph<T>) -> T {
    graph
        .servers
        .iter()
        .zip(&usage.busy_s)
        .map(|(s, &b)| s.power_w * b)
        .sum()
}

fn gossip_energy<T: Scalar>(demands: &[(DemandKey, &FunctionDemand<T>)], costs: &CostTable<T>) -> T {
    costs.gossip_energy_j * T::count(broadcast_count(demands) as u64)
}

/// Share of each miner's mining-chain demand in the total. When every miner
/// demands zero cycles the split is uniform.
pub fn p_mining<T: Scalar>(
    chains: &[FunctionChain<T>],
    users: &[UserDevice<T>],
) -> Result<BTreeMap<UserId, T>, AnalyticsError> {
    let demands: Vec<(UserId, T)> = users
        .iter()
        .filter(|u| u.is_miner)
        .map(|u| {
            let d = chains
                .iter()
                .filter(|c| c.user_id == u.id && c.role == ChainRole::Miner)
                .map(|c| c.total_cycles())
                .sum();
            (u.id, d)
        })
        .collect();
    shares(&demands)
}

/// Normalises demands into probabilities.
pub fn shares<T: Scalar>(demands: &[(UserId, T)]) -> Result<BTreeMap<UserId, T>, AnalyticsError> {
    if demands.is_empty() {
        return Err(AnalyticsError::NoMiners);
    }
    let total: T = demands.iter().map(|&(_, d)| d).sum();
    Ok(demands
        .iter()
        .map(|&(id, d)| {
            let p = if total > T::zero() {
                d / total
            } else {
                T::one() / T::count(demands.len() as u64)
            };
            (id, p)
        })
        .collect())
}

/// `1 - exp(-z * N / T_th)`.
pub fn p_orphan<T: Scalar>(params: &BlockchainParams<T>) -> T {
    let rate = T::one() / params.t_th_s;
    -(-(rate * params.z_s_per_tx * T::count(params.n_trans))).exp_m1()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rewards<T> {
    pub per_miner: BTreeMap<UserId, T>,
    pub total: T,
}

/// Expected reward `p_mining * (R_const + N * R_trans) * (1 - p_orphan)`.
pub fn r_mining<T: Scalar>(
    params: &BlockchainParams<T>,
    p_mining: &BTreeMap<UserId, T>,
    p_orphan: T,
) -> Rewards<T> {
    let pot = params.r_const + T::count(params.n_trans) * params.r_trans;
    let survive = T::one() - p_orphan;
    let per_miner: BTreeMap<UserId, T> = p_mining
        .iter()
        .map(|(&id, &p)| (id, p * pot * survive))
        .collect();
    let total = per_miner.values().copied().sum();
    Rewards { per_miner, total }
}

/// Confirmed transactions per second: `N (1 - p_orphan) / latency`.
pub fn confirmation_rate<T: Scalar>(
    params: &BlockchainParams<T>,
    latency_s: T,
    p_orphan: T,
) -> Result<T, AnalyticsError> {
    if latency_s <= T::zero() {
        return Err(AnalyticsError::ZeroLatency);
    }
    Ok(T::count(params.n_trans) * (T::one() - p_orphan) / latency_s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum ConstraintViolation<T> {
    /// C1: total latency exceeds the block interval.
    Latency { total_s: T, limit_s: T },
    /// C2: cycles assigned to a server exceed what it processes in one
    /// block interval.
    Capacity {
        server_id: ServerId,
        load_cycles: T,
        budget_cycles: T,
    },
}

impl<T: Scalar> fmt::Display for ConstraintViolation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintViolation::Latency { total_s, limit_s } => {
                write!(f, "C1: latency {total_s} s > {limit_s} s")
            }
            ConstraintViolation::Capacity {
                server_id,
                load_cycles,
                budget_cycles,
            } => write!(
                f,
                "C2: server {server_id} load {load_cycles} > {budget_cycles} cycles"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport<T> {
    pub e_ran_j: T,
    pub e_mec_j: T,
    /// Energy spent on the devices themselves; zero when every function is
    /// virtualised.
    pub e_local_j: T,
    pub e_total_j: T,
    pub t_ran_s: T,
    pub t_mec_s: T,
    pub t_local_s: T,
    pub server_load_cycles: BTreeMap<ServerId, T>,
    pub p_mining: BTreeMap<UserId, T>,
    pub p_orphan: T,
    pub r_mining: Rewards<T>,
    pub confirmation_rate_tps: Option<T>,
    pub objective: T,
    pub feasible: bool,
    pub violations: Vec<ConstraintViolation<T>>,
}

impl<T: Scalar> EvaluationReport<T> {
    pub fn latency_s(&self) -> T {
        self.t_local_s + self.t_ran_s + self.t_mec_s
    }

    pub fn avg_p_mining(&self) -> T {
        mean(self.p_mining.values().copied())
    }

    pub fn avg_r_mining(&self) -> T {
        mean(self.r_mining.per_miner.values().copied())
    }

    pub fn violates_latency(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, ConstraintViolation::Latency { .. }))
    }

    pub fn violates_capacity(&self, server: ServerId) -> bool {
        self.violations.iter().any(
            |v| matches!(v, ConstraintViolation::Capacity { server_id, .. } if *server_id == server),
        )
    }
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0u64), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::count(n)
    }
}

/// Relative slack applied when checking C1 and C2.
pub(crate) fn constraint_slack<T: Scalar>() -> T {
    T::tolerance()
}

/// Capacity (C2) violations of a per-server load vector.
pub(crate) fn capacity_violations<T: Scalar>(
    load_cycles: &[T],
    graph: &ServerGraph<T>,
    t_th_s: T,
) -> Vec<ConstraintViolation<T>> {
    graph
        .servers
        .iter()
        .zip(load_cycles)
        .filter_map(|(s, &load)| {
            let budget = s.capacity_hz * t_th_s;
            (load > budget * (T::one() + constraint_slack())).then_some(ConstraintViolation::Capacity {
                server_id: s.id,
                load_cycles: load,
                budget_cycles: budget,
            })
        })
        .collect()
}

pub(crate) fn latency_violation<T: Scalar>(total_s: T, t_th_s: T) -> Option<ConstraintViolation<T>> {
    (total_s > t_th_s * (T::one() + constraint_slack())).then_some(ConstraintViolation::Latency {
        total_s,
        limit_s: t_th_s,
    })
}

/// Every metric of a placement, together with C1/C2 feasibility.
pub fn evaluate<T: Scalar>(
    placement: &Placement<T>,
    instance: &Instance<T>,
) -> Result<EvaluationReport<T>, AnalyticsError> {
    let graph = instance.graph();
    let params = instance.params();
    let chains = instance.chains();
    let demands = instance.demands();
    let weights = resolve(placement, &demands, graph)?;
    let use_ = usage(&weights, &demands, graph);

    let t_ran_s = t_ran(chains, instance.users());
    let e_ran_j = e_ran(chains, instance.users());
    let t_mec_s: T = use_.busy_s.iter().copied().sum();
    let e_mec_j = processing_energy(&use_, graph) + gossip_energy(&demands, instance.costs());
    let e_total_j = e_ran_j + e_mec_j;

    let p_mining = p_mining(chains, instance.users())?;
    let p_orphan = p_orphan(params);
    let r_mining = r_mining(params, &p_mining, p_orphan);
    let confirmation_rate_tps = confirmation_rate(params, t_ran_s + t_mec_s, p_orphan).ok();

    let mut violations = Vec::new();
    violations.extend(latency_violation(t_ran_s + t_mec_s, params.t_th_s));
    violations.extend(capacity_violations(&use_.load_cycles, graph, params.t_th_s));

    Ok(EvaluationReport {
        e_ran_j,
        e_mec_j,
        e_local_j: T::zero(),
        e_total_j,
        t_ran_s,
        t_mec_s,
        t_local_s: T::zero(),
        server_load_cycles: graph
            .servers
            .iter()
            .map(|s| s.id)
            .zip(use_.load_cycles.iter().copied())
            .collect(),
        p_mining,
        p_orphan,
        objective: e_total_j - r_mining.total,
        r_mining,
        confirmation_rate_tps,
        feasible: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        validate_instance, BlockchainFunctionKind, DeviceClass, Server, ServerGraph, UserDevice,
    };
    use approx::assert_relative_eq;

    fn chain(user_id: UserId, cycles: &[f64], uplink: f64) -> FunctionChain<f64> {
        let kinds = [
            BlockchainFunctionKind::Authentication,
            BlockchainFunctionKind::Verification,
            BlockchainFunctionKind::BlockGeneration,
            BlockchainFunctionKind::Mining,
        ];
        FunctionChain {
            user_id,
            role: ChainRole::Miner,
            demands: cycles
                .iter()
                .zip(kinds)
                .enumerate()
                .map(|(i, (&c, kind))| FunctionDemand {
                    user_id,
                    kind,
                    cycles: c,
                    input_bytes: if i == 0 { uplink } else { 0.0 },
                    output_bytes: 0.0,
                })
                .collect(),
        }
    }

    fn user(id: UserId) -> UserDevice<f64> {
        UserDevice::new(id, DeviceClass::MobileUser)
    }

    fn graph(servers: &[(ServerId, f64, f64)]) -> ServerGraph<f64> {
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
        }
    }

    fn key(user_id: UserId, index: usize) -> DemandKey {
        DemandKey { user_id, index }
    }

    #[test]
    fn ran_delay_and_energy() {
        let users = vec![user(0), user(1)];
        let one = vec![chain(0, &[1.0], 1e6)];
        assert_relative_eq!(t_ran(&one, &users), 0.8);
        assert_relative_eq!(e_ran(&one, &users), 0.16);

        let zero = vec![chain(0, &[1.0], 0.0)];
        assert_eq!(t_ran(&zero, &users), 0.0);
        assert_eq!(e_ran(&zero, &users), 0.0);

        let two = vec![chain(0, &[1.0], 1e6), chain(1, &[1.0], 0.25e6)];
        assert_relative_eq!(t_ran(&two, &users), 0.8);

        let twins = vec![chain(0, &[1.0], 1e6), chain(1, &[1.0], 1e6)];
        assert_eq!(e_ran(&twins, &users), 2.0 * e_ran(&one, &users));
    }

    #[test]
    fn mec_delay_and_energy() {
        let g = graph(&[(0, 5e9, 125.0)]);
        let c = vec![chain(0, &[5e9], 0.0)];
        let p = Placement::binary([(key(0, 0), 0)]);
        assert_eq!(t_mec(&p, &c, &g).unwrap(), 1.0);

        let mining = vec![chain(0, &[0.25e9], 0.0)];
        assert_eq!(t_mec(&p, &mining, &g).unwrap(), 0.05);
        assert_eq!(e_mec(&p, &mining, &g, &CostTable::default()).unwrap(), 6.25);

        let empty: Vec<FunctionChain<f64>> = vec![];
        assert_eq!(t_mec(&Placement::default(), &empty, &g).unwrap(), 0.0);
        assert_eq!(
            e_mec(&Placement::default(), &empty, &g, &CostTable::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn broadcast_adds_gossip_energy() {
        let g = graph(&[(0, 5e9, 125.0)]);
        let c = vec![FunctionChain {
            user_id: 0,
            role: ChainRole::TxGenerator,
            demands: vec![FunctionDemand {
                user_id: 0,
                kind: BlockchainFunctionKind::TxBroadcast,
                cycles: 0.0,
                input_bytes: 0.0,
                output_bytes: 0.0,
            }],
        }];
        let p = Placement::binary([(key(0, 0), 0)]);
        assert_eq!(e_mec(&p, &c, &g, &CostTable::default()).unwrap(), 12.5);
    }

    #[test]
    fn unplaced_demand_is_an_error() {
        let g = graph(&[(0, 5e9, 125.0)]);
        let c = vec![chain(0, &[1.0, 2.0], 0.0)];
        let p = Placement::binary([(key(0, 0), 0)]);
        assert_eq!(
            t_mec(&p, &c, &g).unwrap_err(),
            AnalyticsError::UnplacedDemand(key(0, 1))
        );
        let bad = Placement::binary([(key(0, 0), 0), (key(0, 1), 5)]);
        assert_eq!(t_mec(&bad, &c, &g).unwrap_err(), AnalyticsError::UnknownServer(5));
    }

    #[test]
    fn fractional_weights_must_sum_to_one() {
        let g = graph(&[(0, 5e9, 125.0), (1, 5e9, 125.0)]);
        let c = vec![chain(0, &[1e9], 0.0)];
        let mut w = BTreeMap::new();
        w.insert((key(0, 0), 0), 0.5);
        w.insert((key(0, 0), 1), 0.4);
        let p = Placement {
            assign: BTreeMap::new(),
            fractional: Some(w.clone()),
        };
        assert_eq!(t_mec(&p, &c, &g).unwrap_err(), AnalyticsError::InvalidWeights(key(0, 0)));
        w.insert((key(0, 0), 1), 0.5);
        let p = Placement {
            assign: BTreeMap::new(),
            fractional: Some(w),
        };
        assert_relative_eq!(t_mec(&p, &c, &g).unwrap(), 0.2);
    }

    #[test]
    fn mining_probabilities() {
        let users: Vec<_> = (0..50).map(user).collect();
        let chains: Vec<_> = (0..50).map(|i| chain(i, &[7.0], 0.0)).collect();
        let p = p_mining(&chains, &users).unwrap();
        assert_eq!(p.len(), 50);
        assert!(p.values().all(|&x| (x - 0.02).abs() < 1e-15));

        let p = p_mining(&chains[..1], &users[..1]).unwrap();
        assert_eq!(p[&0], 1.0);

        let p = p_mining(&[chain(0, &[3.0], 0.0), chain(1, &[1.0], 0.0)], &users[..2]).unwrap();
        assert_eq!((p[&0], p[&1]), (0.75, 0.25));

        let mut not_miner = user(0);
        not_miner.is_miner = false;
        assert_eq!(
            p_mining(&chains[..1], &[not_miner]).unwrap_err(),
            AnalyticsError::NoMiners
        );
    }

    #[test]
    fn orphan_probability() {
        let mut params = BlockchainParams::<f64> {
            z_s_per_tx: 0.0,
            ..Default::default()
        };
        assert_eq!(p_orphan(&params), 0.0);

        params.z_s_per_tx = 2e-5;
        assert!((p_orphan(&params) - 0.0951626).abs() < 1e-6);

        let base = p_orphan(&params);
        params.t_th_s = 2.0;
        assert!(p_orphan(&params) < base);
    }

    #[test]
    fn mining_rewards() {
        let params = BlockchainParams::<f64>::default();
        let certain = r_mining(&params, &BTreeMap::from([(0, 1.0)]), 0.0);
        assert_eq!(certain.total, 12.5 + 5000.0 * 1e-3);

        let none = r_mining(&params, &BTreeMap::from([(0, 0.0)]), 0.3);
        assert_eq!(none.total, 0.0);

        let r = r_mining(&params, &BTreeMap::from([(4, 0.02)]), 0.0951626);
        assert!((r.per_miner[&4] - 0.316693).abs() < 1e-6);
    }

    #[test]
    fn confirmation_rates() {
        let params = BlockchainParams::<f64>::default();
        assert_eq!(confirmation_rate(&params, 1.0, 0.0).unwrap(), 5000.0);
        let doubled = BlockchainParams {
            n_trans: 10_000,
            ..params.clone()
        };
        assert_eq!(
            confirmation_rate(&doubled, 0.7, 0.1).unwrap(),
            2.0 * confirmation_rate(&params, 0.7, 0.1).unwrap()
        );
        assert!((confirmation_rate(&params, 0.5, 0.0951626).unwrap() - 9048.374).abs() < 1e-2);
        assert_eq!(
            confirmation_rate(&params, 0.0, 0.0).unwrap_err(),
            AnalyticsError::ZeroLatency
        );
    }

    fn micro_instance() -> Instance<f64> {
        let inst = validate_instance(
            graph(&[(0, 5e9, 125.0)]),
            vec![user(0)],
            BlockchainParams::default(),
            CostTable::default(),
        )
        .unwrap();
        let mining = workload_mining_chain(0);
        inst.with_chains(vec![mining]).unwrap()
    }

    fn workload_mining_chain(user_id: UserId) -> FunctionChain<f64> {
        FunctionChain {
            user_id,
            role: ChainRole::Miner,
            demands: vec![crate::workload::demand(
                user_id,
                BlockchainFunctionKind::Mining,
                &BlockchainParams::default(),
                &CostTable::default(),
            )],
        }
    }

    #[test]
    fn evaluate_micro_instance() {
        let inst = micro_instance();
        let r = evaluate(&Placement::all_on(&inst, 0), &inst).unwrap();
        assert!(r.feasible);
        assert_eq!(r.t_mec_s, 0.05);
        assert_eq!(r.e_mec_j, 6.25);
        // 80-byte header over 10 Mb/s at 0.2 W
        assert_relative_eq!(r.t_ran_s, 6.4e-5);
        assert_relative_eq!(r.e_ran_j, 1.28e-5);
        assert_eq!(r.e_total_j, r.e_ran_j + r.e_mec_j);
        let reward = 17.5 * (1.0 - p_orphan(inst.params()));
        assert_relative_eq!(r.r_mining.total, reward);
        assert_eq!(r.objective, r.e_total_j - r.r_mining.total);
    }

    #[test]
    fn capacity_violation_names_server() {
        let base = validate_instance(
            graph(&[(3, 1e8, 125.0), (4, 5e9, 125.0)]),
            vec![user(0)],
            BlockchainParams {
                t_th_s: 10.0,
                ..Default::default()
            },
            CostTable::default(),
        )
        .unwrap();
        let inst = base.with_chains(vec![workload_mining_chain(0)]).unwrap();
        let r = evaluate(&Placement::all_on(&inst, 3), &inst).unwrap();
        // 0.25e9 cycles against a 1e8 * 10 = 1e9 budget: fits
        assert!(r.feasible, "{:?}", r.violations);
        let tight = inst
            .clone()
            .with_params(BlockchainParams {
                t_th_s: 2.0,
                ..Default::default()
            })
            .unwrap()
            .with_chains(vec![workload_mining_chain(0)])
            .unwrap();
        let r = evaluate(&Placement::all_on(&tight, 3), &tight).unwrap();
        assert!(!r.feasible);
        assert!(r.violates_capacity(3));
        assert!(!r.violates_capacity(4));
    }

    #[test]
    fn unreachable_deadline_violates_latency() {
        let inst = micro_instance()
            .with_params(BlockchainParams {
                t_th_s: 0.01,
                ..Default::default()
            })
            .unwrap();
        let r = evaluate(&Placement::all_on(&inst, 0), &inst).unwrap();
        assert!(!r.feasible);
        assert!(r.violates_latency());
        assert_eq!(r.violations[0].to_string().split(':').next(), Some("C1"));
    }

    #[test]
    fn placement_json_shape() {
        let p = Placement::<f64>::binary([(key(1, 2), 7)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"assign":[{"user_id":1,"index":2,"server_id":7}]}"#);
        let back: Placement<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
