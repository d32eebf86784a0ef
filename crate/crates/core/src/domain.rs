//! Scenario data model: servers, devices, blockchain parameters and the
//! per-algorithm cycle costs, plus validation into an immutable [`Instance`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::workload::{self, ChainRole, FunctionChain, FunctionDemand};

pub type ServerId = u32;
pub type UserId = u32;

/// A commodity MEC/cloud server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Server<T> {
    pub id: ServerId,
    /// Processing capacity in CPU cycles per second.
    pub capacity_hz: T,
    /// Power draw while processing, in watts.
    pub power_w: T,
}

impl<T: Scalar> Server<T> {
    /// A 5 GHz, 125 W MEC server.
    pub fn mec(id: ServerId) -> Self {
        Server {
            id,
            capacity_hz: T::of(5e9),
            power_w: T::of(125.0),
        }
    }
}

/// Directed link between two servers. The delay is carried for completeness;
/// the placement objective has no link terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link<T> {
    pub src: ServerId,
    pub dst: ServerId,
    #[serde(default)]
    pub delay_s: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerGraph<T> {
    pub servers: Vec<Server<T>>,
    #[serde(default)]
    pub links: Vec<Link<T>>,
}

impl<T: Scalar> ServerGraph<T> {
    /// `count` identical MEC servers with ids `0..count` and no links.
    pub fn homogeneous(count: u32) -> Self {
        ServerGraph {
            servers: (0..count).map(Server::mec).collect(),
            links: Vec::new(),
        }
    }

    pub fn server(&self, id: ServerId) -> Option<&Server<T>> {
        self.servers.iter().find(|s| s.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    #[serde(alias = "IoTSensor", alias = "iot")]
    IotSensor,
    #[serde(alias = "MobileUser", alias = "mobile")]
    MobileUser,
}

impl DeviceClass {
    /// Device CPU capacity in cycles per second (0.01 GHz IoT, 0.1 GHz mobile).
    pub fn default_capacity_hz<T: Scalar>(self) -> T {
        match self {
            DeviceClass::IotSensor => T::of(0.01e9),
            DeviceClass::MobileUser => T::of(0.1e9),
        }
    }

    /// Assumed device processing power in watts. Not a measured figure: it
    /// only feeds the local-execution baseline.
    pub fn default_local_power_w<T: Scalar>(self) -> T {
        match self {
            DeviceClass::IotSensor => T::of(0.3),
            DeviceClass::MobileUser => T::of(3.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserDevice<T> {
    pub id: UserId,
    pub class: DeviceClass,
    pub local_capacity_hz: T,
    pub local_power_w: T,
    pub tx_power_w: T,
    pub uplink_rate_bps: T,
    pub is_miner: bool,
    pub is_tx_generator: bool,
}

impl<T: Scalar> UserDevice<T> {
    /// A device of `class` with default capacity, 0.2 W transmit power and a
    /// 10 Mb/s uplink, acting as both miner and transaction generator.
    pub fn new(id: UserId, class: DeviceClass) -> Self {
        UserDevice {
            id,
            class,
            local_capacity_hz: class.default_capacity_hz(),
            local_power_w: class.default_local_power_w(),
            tx_power_w: T::of(0.2),
            uplink_rate_bps: T::of(1e7),
            is_miner: true,
            is_tx_generator: true,
        }
    }

    /// `count` miners, the first third of them IoT sensors and the rest
    /// mobile users.
    pub fn population(count: u32) -> Vec<Self> {
        let iot = count / 3;
        (0..count)
            .map(|id| {
                let class = if id < iot {
                    DeviceClass::IotSensor
                } else {
                    DeviceClass::MobileUser
                };
                UserDevice::new(id, class)
            })
            .collect()
    }
}

/// The nine blockchain functions, in pipeline order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockchainFunctionKind {
    TxGeneration,
    TxBroadcast,
    Authentication,
    Verification,
    BlockGeneration,
    Mining,
    BlockBroadcast,
    BlockVerification,
    ChainAppend,
}

impl BlockchainFunctionKind {
    pub const ALL: [BlockchainFunctionKind; 9] = [
        BlockchainFunctionKind::TxGeneration,
        BlockchainFunctionKind::TxBroadcast,
        BlockchainFunctionKind::Authentication,
        BlockchainFunctionKind::Verification,
        BlockchainFunctionKind::BlockGeneration,
        BlockchainFunctionKind::Mining,
        BlockchainFunctionKind::BlockBroadcast,
        BlockchainFunctionKind::BlockVerification,
        BlockchainFunctionKind::ChainAppend,
    ];

    pub fn is_broadcast(self) -> bool {
        matches!(
            self,
            BlockchainFunctionKind::TxBroadcast | BlockchainFunctionKind::BlockBroadcast
        )
    }

    /// Which group of the pipeline the function belongs to.
    pub fn role(self) -> ChainRole {
        use BlockchainFunctionKind::*;
        match self {
            TxGeneration | TxBroadcast => ChainRole::TxGenerator,
            Authentication | Verification | BlockGeneration | Mining | BlockBroadcast => {
                ChainRole::Miner
            }
            BlockVerification | ChainAppend => ChainRole::Receiver,
        }
    }
}

impl fmt::Display for BlockchainFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn default_header_bytes() -> u64 {
    80
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockchainParams<T> {
    /// Block interval in seconds.
    pub t_th_s: T,
    /// Network latency per transaction in seconds.
    pub z_s_per_tx: T,
    /// Transactions per block.
    pub n_trans: u64,
    pub tx_size_bytes: u64,
    pub r_const: T,
    pub r_trans: T,
    /// Size of the block header a miner uploads when only mining is offloaded.
    #[serde(default = "default_header_bytes")]
    pub header_bytes: u64,
}

impl<T: Scalar> Default for BlockchainParams<T> {
    fn default() -> Self {
        BlockchainParams {
            t_th_s: T::one(),
            z_s_per_tx: T::of(2e-5),
            n_trans: 5000,
            tx_size_bytes: 200,
            r_const: T::of(12.5),
            r_trans: T::of(1e-3),
            header_bytes: default_header_bytes(),
        }
    }
}

impl<T: Scalar> BlockchainParams<T> {
    /// Block body size in bytes.
    pub fn block_bytes(&self) -> T {
        T::count(self.n_trans) * T::count(self.tx_size_bytes)
    }
}

/// Per-algorithm processing costs. Per-operation entries are cycles per
/// invocation; per-byte entries are cycles per byte hashed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostTable<T> {
    pub sha256_cycles_per_byte: T,
    pub rsa_cycles: T,
    pub ecdsa_cycles: T,
    pub block_auth_cycles_per_byte: T,
    pub merkle_multiplier: T,
    pub mining_cycles: T,
    pub gossip_energy_j: T,
}

impl<T: Scalar> Default for CostTable<T> {
    fn default() -> Self {
        CostTable {
            sha256_cycles_per_byte: T::of(15.8),
            rsa_cycles: T::of(36e6),
            ecdsa_cycles: T::of(5.27e6),
            block_auth_cycles_per_byte: T::of(15.61),
            merkle_multiplier: T::of(15.0),
            mining_cycles: T::of(0.25e9),
            gossip_energy_j: T::of(12.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("duplicate {entity} id {id}")]
    DuplicateId { entity: &'static str, id: u32 },
    #[error("{field} must be positive")]
    NonPositiveQuantity { field: String },
    #[error("{field} must be non-negative and finite")]
    NegativeQuantity { field: String },
    #[error("link {src}->{dst} references unknown server {missing}")]
    DanglingLinkEndpoint {
        src: ServerId,
        dst: ServerId,
        missing: ServerId,
    },
    #[error("link {0}->{0} is a self-loop")]
    SelfLoop(ServerId),
    #[error("user {0} is neither a miner nor a transaction generator")]
    NoRole(UserId),
    #[error("no user is a miner")]
    NoMiners,
    #[error("invalid chain for user {user_id}: {reason}")]
    InvalidChain { user_id: UserId, reason: String },
}

/// Every violation found while validating an instance.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.0.len())?;
        for v in &self.0 {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

impl ValidationErrors {
    pub fn violations(&self) -> &[Violation] {
        &self.0
    }

    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

/// Position of one function within a user's requested functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DemandKey {
    pub user_id: UserId,
    pub index: usize,
}

/// A validated scenario together with its function chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T> {
    graph: ServerGraph<T>,
    users: Vec<UserDevice<T>>,
    params: BlockchainParams<T>,
    costs: CostTable<T>,
    chains: Vec<FunctionChain<T>>,
}

/// Borrowed view of the inputs an instance was validated from.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceParts<'a, T> {
    pub servers: &'a [Server<T>],
    pub links: &'a [Link<T>],
    pub users: &'a [UserDevice<T>],
    pub params: &'a BlockchainParams<T>,
    pub costs: &'a CostTable<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn graph(&self) -> &ServerGraph<T> {
        &self.graph
    }

    pub fn users(&self) -> &[UserDevice<T>] {
        &self.users
    }

    pub fn params(&self) -> &BlockchainParams<T> {
        &self.params
    }

    pub fn costs(&self) -> &CostTable<T> {
        &self.costs
    }

    pub fn chains(&self) -> &[FunctionChain<T>] {
        &self.chains
    }

    pub fn user(&self, id: UserId) -> Option<&UserDevice<T>> {
        self.users.iter().find(|u| u.id == id)
    }

    pub fn parts(&self) -> InstanceParts<'_, T> {
        InstanceParts {
            servers: &self.graph.servers,
            links: &self.graph.links,
            users: &self.users,
            params: &self.params,
            costs: &self.costs,
        }
    }

    pub fn into_inputs(
        self,
    ) -> (
        ServerGraph<T>,
        Vec<UserDevice<T>>,
        BlockchainParams<T>,
        CostTable<T>,
    ) {
        (self.graph, self.users, self.params, self.costs)
    }

    /// Every demand in request order, grouped by chain order.
    pub fn demands(&self) -> Vec<(DemandKey, &FunctionDemand<T>)> {
        demand_keys(&self.chains)
    }

    /// Replaces the generated chains, e.g. to strip functions or to pose a
    /// synthetic placement problem. Chains must reference known users, keep
    /// pipeline order within each user, and carry non-negative demands.
    pub fn with_chains(mut self, chains: Vec<FunctionChain<T>>) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();
        let mut last_kind: Vec<(UserId, BlockchainFunctionKind)> = Vec::new();
        for chain in &chains {
            if self.user(chain.user_id).is_none() {
                errors.push(Violation::InvalidChain {
                    user_id: chain.user_id,
                    reason: "unknown user".into(),
                });
                continue;
            }
            for d in &chain.demands {
                if d.user_id != chain.user_id {
                    errors.push(Violation::InvalidChain {
                        user_id: chain.user_id,
                        reason: format!("demand {} owned by user {}", d.kind, d.user_id),
                    });
                }
                if !non_negative(d.cycles) || !non_negative(d.input_bytes) || !non_negative(d.output_bytes) {
                    errors.push(Violation::InvalidChain {
                        user_id: chain.user_id,
                        reason: format!("demand {} has a negative or non-finite quantity", d.kind),
                    });
                }
                let prev = last_kind.iter_mut().find(|(u, _)| *u == chain.user_id);
                match prev {
                    Some((_, k)) if *k >= d.kind => errors.push(Violation::InvalidChain {
                        user_id: chain.user_id,
                        reason: format!("{} out of pipeline order after {}", d.kind, k),
                    }),
                    Some((_, k)) => *k = d.kind,
                    None => last_kind.push((chain.user_id, d.kind)),
                }
            }
        }
        if errors.is_empty() {
            self.chains = chains;
            Ok(self)
        } else {
            Err(ValidationErrors(errors))
        }
    }

    /// Rebuilds the canonical chains after changing the parameters.
    pub fn with_params(self, params: BlockchainParams<T>) -> Result<Self, ValidationErrors> {
        validate_instance(self.graph, self.users, params, self.costs)
    }
}

pub(crate) fn demand_keys<T>(chains: &[FunctionChain<T>]) -> Vec<(DemandKey, &FunctionDemand<T>)> {
    let mut next: Vec<(UserId, usize)> = Vec::new();
    let mut out = Vec::new();
    for chain in chains {
        for d in &chain.demands {
            let slot = match next.iter_mut().find(|(u, _)| *u == d.user_id) {
                Some(s) => s,
                None => {
                    next.push((d.user_id, 0));
                    next.last_mut().unwrap()
                }
            };
            out.push((
                DemandKey {
                    user_id: d.user_id,
                    index: slot.1,
                },
                d,
            ));
            slot.1 += 1;
        }
    }
    out
}

fn positive<T: Scalar>(v: T) -> bool {
    v.is_finite() && v > T::zero()
}

fn non_negative<T: Scalar>(v: T) -> bool {
    v.is_finite() && v >= T::zero()
}

/// Checks every invariant of the inputs and builds the instance. All
/// violations are reported, not only the first.
pub fn validate_instance<T: Scalar>(
    graph: ServerGraph<T>,
    users: Vec<UserDevice<T>>,
    params: BlockchainParams<T>,
    costs: CostTable<T>,
) -> Result<Instance<T>, ValidationErrors> {
    let mut errors = Vec::new();
    let mut need_positive = |ok: bool, field: String| {
        if !ok {
            errors.push(Violation::NonPositiveQuantity { field });
        }
    };

    need_positive(!graph.servers.is_empty(), "servers (count)".into());
    for s in &graph.servers {
        need_positive(positive(s.capacity_hz), format!("server {} capacity_hz", s.id));
        need_positive(positive(s.power_w), format!("server {} power_w", s.id));
    }
    for u in &users {
        need_positive(positive(u.local_capacity_hz), format!("user {} local_capacity_hz", u.id));
        need_positive(positive(u.local_power_w), format!("user {} local_power_w", u.id));
        need_positive(positive(u.tx_power_w), format!("user {} tx_power_w", u.id));
        need_positive(positive(u.uplink_rate_bps), format!("user {} uplink_rate_bps", u.id));
    }
    need_positive(positive(params.t_th_s), "params.t_th_s".into());
    need_positive(params.n_trans >= 1, "params.n_trans".into());
    need_positive(params.tx_size_bytes >= 1, "params.tx_size_bytes".into());

    let mut need_non_negative = |v: T, field: &str| {
        if !non_negative(v) {
            errors.push(Violation::NegativeQuantity {
                field: field.to_string(),
            });
        }
    };
    need_non_negative(params.z_s_per_tx, "params.z_s_per_tx");
    need_non_negative(params.r_const, "params.r_const");
    need_non_negative(params.r_trans, "params.r_trans");
    need_non_negative(costs.sha256_cycles_per_byte, "costs.sha256_cycles_per_byte");
    need_non_negative(costs.rsa_cycles, "costs.rsa_cycles");
    need_non_negative(costs.ecdsa_cycles, "costs.ecdsa_cycles");
    need_non_negative(costs.block_auth_cycles_per_byte, "costs.block_auth_cycles_per_byte");
    need_non_negative(costs.merkle_multiplier, "costs.merkle_multiplier");
    need_non_negative(costs.mining_cycles, "costs.mining_cycles");
    need_non_negative(costs.gossip_energy_j, "costs.gossip_energy_j");
    for l in &graph.links {
        need_non_negative(l.delay_s, &format!("link {}->{} delay_s", l.src, l.dst));
    }

    let mut seen = BTreeSet::new();
    for s in &graph.servers {
        if !seen.insert(s.id) {
            errors.push(Violation::DuplicateId {
                entity: "server",
                id: s.id,
            });
        }
    }
    for l in &graph.links {
        if l.src == l.dst {
            errors.push(Violation::SelfLoop(l.src));
        }
        for end in [l.src, l.dst] {
            if !seen.contains(&end) {
                errors.push(Violation::DanglingLinkEndpoint {
                    src: l.src,
                    dst: l.dst,
                    missing: end,
                });
            }
        }
    }

    let mut seen_users = BTreeSet::new();
    for u in &users {
        if !seen_users.insert(u.id) {
            errors.push(Violation::DuplicateId {
                entity: "user",
                id: u.id,
            });
        }
        if !u.is_miner && !u.is_tx_generator {
            errors.push(Violation::NoRole(u.id));
        }
    }
    if !users.iter().any(|u| u.is_miner) {
        errors.push(Violation::NoMiners);
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    let chains = users
        .iter()
        .flat_map(|u| workload::build_chain(u, &params, &costs))
        .collect();
    Ok(Instance {
        graph,
        users,
        params,
        costs,
        chains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_server() -> ServerGraph<f64> {
        ServerGraph::homogeneous(1)
    }

    #[test]
    fn single_server_single_miner_is_valid() {
        let inst = validate_instance(
            one_server(),
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            BlockchainParams::default(),
            CostTable::default(),
        )
        .unwrap();
        assert_eq!(inst.graph().servers[0].capacity_hz, 5e9);
        assert_eq!(inst.graph().servers[0].power_w, 125.0);
        assert!(!inst.chains().is_empty());
    }

    #[test]
    fn empty_graph_is_rejected() {
        let err = validate_instance::<f64>(
            ServerGraph {
                servers: vec![],
                links: vec![],
            },
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            BlockchainParams::default(),
            CostTable::default(),
        )
        .unwrap_err();
        assert!(err.contains(|v| matches!(v, Violation::NonPositiveQuantity { field } if field.contains("servers"))));
    }

    #[test]
    fn duplicate_server_ids_are_rejected() {
        let mut g = ServerGraph::<f64>::homogeneous(2);
        g.servers[0].id = 7;
        g.servers[1].id = 7;
        let err = validate_instance(
            g,
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            BlockchainParams::default(),
            CostTable::default(),
        )
        .unwrap_err();
        assert!(err.contains(|v| *v == Violation::DuplicateId { entity: "server", id: 7 }));
    }

    #[test]
    fn all_violations_are_collected() {
        let mut g = ServerGraph::<f64>::homogeneous(2);
        g.servers[1].capacity_hz = -1.0;
        g.links.push(Link {
            src: 0,
            dst: 9,
            delay_s: 0.0,
        });
        let mut u = UserDevice::new(0, DeviceClass::IotSensor);
        u.is_miner = false;
        u.is_tx_generator = false;
        let err = validate_instance(g, vec![u], BlockchainParams::default(), CostTable::default())
            .unwrap_err();
        assert!(err.contains(|v| matches!(v, Violation::NonPositiveQuantity { .. })));
        assert!(err.contains(|v| matches!(v, Violation::DanglingLinkEndpoint { missing: 9, .. })));
        assert!(err.contains(|v| *v == Violation::NoRole(0)));
        assert!(err.contains(|v| *v == Violation::NoMiners));
        assert_eq!(err.violations().len(), 4);
    }

    #[test]
    fn nan_quantities_are_rejected() {
        let params = BlockchainParams::<f64> {
            z_s_per_tx: f64::NAN,
            t_th_s: f64::NAN,
            ..Default::default()
        };
        let err = validate_instance(
            one_server(),
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            params,
            CostTable::default(),
        )
        .unwrap_err();
        assert_eq!(err.violations().len(), 2);
    }

    #[test]
    fn chains_out_of_order_are_rejected() {
        let inst = validate_instance(
            one_server(),
            vec![UserDevice::new(0, DeviceClass::MobileUser)],
            BlockchainParams::default(),
            CostTable::default(),
        )
        .unwrap();
        let mut chains = inst.chains().to_vec();
        chains.reverse();
        assert!(inst.with_chains(chains).is_err());
    }

    #[test]
    fn demand_keys_index_within_user() {
        let inst = validate_instance(
            one_server(),
            UserDevice::population(2),
            BlockchainParams::default(),
            CostTable::default(),
        )
        .unwrap();
        let keys: Vec<_> = inst.demands().iter().map(|(k, _)| *k).collect();
        assert_eq!(keys.len(), 18);
        assert_eq!(keys[0], DemandKey { user_id: 0, index: 0 });
        assert_eq!(keys[8], DemandKey { user_id: 0, index: 8 });
        assert_eq!(keys[9], DemandKey { user_id: 1, index: 0 });
    }
}
