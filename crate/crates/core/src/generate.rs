//! Random small instances, sized for exhaustive search.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics;
use crate::domain::{
    validate_instance, BlockchainFunctionKind, BlockchainParams, CostTable, DeviceClass, Instance,
    Server, ServerGraph, UserDevice,
};
use crate::scalar::Scalar;
use crate::workload::{ChainRole, FunctionChain, FunctionDemand};

/// Bounds for [`random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallInstanceShape {
    pub max_users: usize,
    pub max_servers: usize,
    pub max_functions: usize,
}

impl Default for SmallInstanceShape {
    fn default() -> Self {
        SmallInstanceShape {
            max_users: 3,
            max_servers: 4,
            max_functions: 3,
        }
    }
}

/// A random heterogeneous instance that is feasible by construction: the
/// block interval is set 10% above what a random reference placement needs.
///
/// Each user is a miner with one chain of up to `max_functions` stages
/// drawn in pipeline order.
pub fn random_instance<T: Scalar>(seed: u64, shape: SmallInstanceShape) -> Instance<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let servers: Vec<Server<T>> = (0..rng.random_range(1..=shape.max_servers.max(1)))
        .map(|id| Server {
            id: id as u32,
            capacity_hz: T::of(rng.random_range(1.0..5.0) * 1e9),
            power_w: T::of(rng.random_range(50.0..250.0)),
        })
        .collect();
    let users: Vec<UserDevice<T>> = (0..rng.random_range(1..=shape.max_users.max(1)))
        .map(|id| {
            let class = if rng.random_bool(0.5) {
                DeviceClass::IotSensor
            } else {
                DeviceClass::MobileUser
            };
            let mut u = UserDevice::new(id as u32, class);
            u.is_tx_generator = false;
            u
        })
        .collect();
    let chains: Vec<FunctionChain<T>> = users
        .iter()
        .map(|u| {
            let kinds = BlockchainFunctionKind::ALL;
            let n = rng.random_range(1..=shape.max_functions.clamp(1, kinds.len()));
            let mut picked = index::sample(&mut rng, kinds.len(), n).into_vec();
            picked.sort_unstable();
            FunctionChain {
                user_id: u.id,
                role: ChainRole::Miner,
                demands: picked
                    .into_iter()
                    .map(|i| {
                        let kind = kinds[i];
                        let cycles = if kind.is_broadcast() {
                            0.0
                        } else {
                            rng.random_range(1e8..2e9)
                        };
                        let bytes = rng.random_range(0.0..1e5);
                        FunctionDemand {
                            user_id: u.id,
                            kind,
                            cycles: T::of(cycles),
                            input_bytes: T::of(bytes),
                            output_bytes: T::of(bytes),
                        }
                    })
                    .collect(),
            }
        })
        .collect();

    let total_demands: usize = chains.iter().map(|c| c.demands.len()).sum();
    let reference: Vec<usize> = (0..total_demands)
        .map(|_| rng.random_range(0..servers.len()))
        .collect();
    let cycles: Vec<T> = chains
        .iter()
        .flat_map(|c| c.demands.iter().map(|d| d.cycles))
        .collect();
    let mut load = vec![T::zero(); servers.len()];
    let mut busy = T::zero();
    for (&s, &c) in reference.iter().zip(&cycles) {
        load[s] = load[s] + c;
        busy = busy + c / servers[s].capacity_hz;
    }
    let needed = servers
        .iter()
        .zip(&load)
        .map(|(s, &l)| l / s.capacity_hz)
        .fold(analytics::t_ran(&chains, &users) + busy, T::max);
    let params = BlockchainParams {
        t_th_s: (needed * T::of(1.1)).max(T::of(0.1)),
        ..Default::default()
    };

    validate_instance(ServerGraph { servers, links: vec![] }, users, params, CostTable::default())
        .and_then(|inst| inst.with_chains(chains))
        .expect("generated instance is valid")
}
