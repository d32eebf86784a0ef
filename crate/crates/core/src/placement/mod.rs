//! Solving the placement problem: an exhaustive oracle for small instances
//! and the penalised-relaxation solver driven by majorization-minimization,
//! followed by rounding and capacity repair.

mod brute;
pub mod lp;
mod mm;
mod repair;
mod sweep;

pub use brute::{brute_force_solve, search_space, BruteForceSolution, SEARCH_SPACE_LIMIT};
pub use lp::{
    solve_lp, solve_lp_warm, LinearConstraint, LinearProgram, LpError, LpStatus, Relation,
    WarmStart,
};
pub use mm::{
    default_penalty, mm_solve, relaxed_lower_bound, IterationRecord, MmSettings, MmSolution,
    SolverTrace, Termination,
};
pub use repair::{improve, repair, repair_with};
pub use sweep::{
    solve_with_fallback, sweep_block_size, BlockSizePoint, BlockSizeSweep, SolveOutcome,
    SolveStatus,
};

use thiserror::Error;

use crate::analytics::{self, AnalyticsError};
use crate::domain::{DemandKey, Instance, ServerId};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PlacementError {
    #[error("no placement satisfies the constraints")]
    Infeasible,
    #[error("search space of {size:e} placements exceeds the exhaustive-search limit")]
    SearchSpaceTooLarge { size: f64 },
    #[error("repair could not restore capacity feasibility: {0}")]
    RepairFailed(String),
    #[error("every grid point is infeasible")]
    AllInfeasible,
    #[error("invalid solver setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// The placement problem in flat form: demand `d` on server `n` is
/// variable `d * servers + n`.
#[derive(Clone, Debug)]
pub(crate) struct Model<T> {
    pub keys: Vec<DemandKey>,
    pub server_ids: Vec<ServerId>,
    pub cycles: Vec<T>,
    /// Processing energy of each (demand, server) pair.
    pub energy: Vec<T>,
    /// Processing delay of each (demand, server) pair.
    pub delay: Vec<T>,
    /// Cycles each server can take in one block interval.
    pub budget: Vec<T>,
    /// Block interval minus the placement-independent RAN delay.
    pub latency_budget: T,
    /// Placement-independent part of the objective: RAN energy, gossip
    /// energy and minus the total reward.
    pub constant: T,
}

impl<T: Scalar> Model<T> {
    pub fn new(instance: &Instance<T>) -> Result<Self, PlacementError> {
        let graph = instance.graph();
        let params = instance.params();
        let demands = instance.demands();
        let n = graph.servers.len();
        let mut energy = Vec::with_capacity(demands.len() * n);
        let mut delay = Vec::with_capacity(demands.len() * n);
        for (_, d) in &demands {
            for s in &graph.servers {
                let t = d.cycles / s.capacity_hz;
                delay.push(t);
                energy.push(s.power_w * t);
            }
        }
        let chains = instance.chains();
        let p_mining = analytics::p_mining(chains, instance.users())?;
        let rewards = analytics::r_mining(params, &p_mining, analytics::p_orphan(params));
        let broadcasts = demands.iter().filter(|(_, d)| d.kind.is_broadcast()).count();
        let constant = analytics::e_ran(chains, instance.users())
            + instance.costs().gossip_energy_j * T::count(broadcasts as u64)
            - rewards.total;
        Ok(Model {
            keys: demands.iter().map(|(k, _)| *k).collect(),
            server_ids: graph.servers.iter().map(|s| s.id).collect(),
            cycles: demands.iter().map(|(_, d)| d.cycles).collect(),
            energy,
            delay,
            budget: graph
                .servers
                .iter()
                .map(|s| s.capacity_hz * params.t_th_s)
                .collect(),
            latency_budget: params.t_th_s - analytics::t_ran(chains, instance.users()),
            constant,
        })
    }

    pub fn demands(&self) -> usize {
        self.keys.len()
    }

    pub fn servers(&self) -> usize {
        self.server_ids.len()
    }

    /// LP over the box [0,1] with assignment, capacity and (optionally)
    /// latency rows and the given linear objective.
    pub fn lp(&self, objective: Vec<T>, enforce_latency: bool) -> LinearProgram<T> {
        let (nd, ns) = (self.demands(), self.servers());
        let mut lp = LinearProgram::new(objective);
        for d in 0..nd {
            lp.constrain((0..ns).map(|s| (d * ns + s, T::one())).collect(), Relation::Eq, T::one());
        }
        for s in 0..ns {
            lp.constrain(
                (0..nd).map(|d| (d * ns + s, self.cycles[d])).collect(),
                Relation::Le,
                self.budget[s],
            );
        }
        if enforce_latency {
            lp.constrain(
                self.delay.iter().copied().enumerate().collect(),
                Relation::Le,
                self.latency_budget,
            );
        }
        lp
    }

    /// `energy.x + mu * sum(x - x^2)`.
    pub fn penalized(&self, x: &[T], mu: T) -> T {
        self.energy
            .iter()
            .zip(x)
            .map(|(&e, &v)| e * v + mu * (v - v * v))
            .sum()
    }

    /// Penalised objective with `-x^2` replaced by its tangent at `at`.
    pub fn surrogate(&self, x: &[T], at: &[T], mu: T) -> T {
        let two = T::of(2.0);
        self.energy
            .iter()
            .zip(x.iter().zip(at))
            .map(|(&e, (&v, &a))| e * v + mu * (v - a * a - two * a * (v - a)))
            .sum()
    }

    /// Linear coefficients of the surrogate at `at` (constants dropped).
    pub fn surrogate_coefficients(&self, at: &[T], mu: T) -> Vec<T> {
        let two = T::of(2.0);
        self.energy
            .iter()
            .zip(at)
            .map(|(&e, &a)| e + mu * (T::one() - two * a))
            .collect()
    }

    /// Largest-weight server per demand; near-ties go to the lowest id.
    pub fn round(&self, x: &[T]) -> Vec<usize> {
        let ns = self.servers();
        let tie = T::of(1e-9);
        (0..self.demands())
            .map(|d| {
                let row = &x[d * ns..(d + 1) * ns];
                let mut best = 0;
                for s in 1..ns {
                    let (v, b) = (row[s], row[best]);
                    if v > b + tie || ((v - b).abs() <= tie && self.server_ids[s] < self.server_ids[best]) {
                        best = s;
                    }
                }
                best
            })
            .collect()
    }

    pub fn binary_placement(&self, choice: &[usize]) -> analytics::Placement<T> {
        analytics::Placement::binary(
            self.keys
                .iter()
                .zip(choice)
                .map(|(&k, &s)| (k, self.server_ids[s])),
        )
    }

    pub fn fractional_placement(&self, x: &[T]) -> analytics::Placement<T> {
        let ns = self.servers();
        let mut p = self.binary_placement(&self.round(x));
        p.fractional = Some(
            x.iter()
                .enumerate()
                .filter(|(_, &v)| v != T::zero())
                .map(|(i, &v)| ((self.keys[i / ns], self.server_ids[i % ns]), v))
                .collect(),
        );
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_instance, SmallInstanceShape};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn surrogate_majorizes_penalty(
            seed in 0u64..1000,
            at in prop::collection::vec(0.0f64..=1.0, 36),
            x in prop::collection::vec(0.0f64..=1.0, 36),
            mu in 0.0f64..1e4,
        ) {
            let model = Model::new(&random_instance::<f64>(seed, SmallInstanceShape::default())).unwrap();
            let n = model.demands() * model.servers();
            let (at, x) = (&at[..n], &x[..n]);
            let tol = 1e-9 * (1.0 + mu) * n as f64;
            prop_assert!(model.surrogate(x, at, mu) >= model.penalized(x, mu) - tol);
            prop_assert!((model.surrogate(at, at, mu) - model.penalized(at, mu)).abs() <= tol);
        }
    }

    #[test]
    fn rounding_breaks_ties_towards_lower_ids() {
        let inst = random_instance::<f64>(1, SmallInstanceShape::default());
        let model = Model::new(&inst).unwrap();
        let ns = model.servers();
        let x = vec![1.0 / ns as f64; model.demands() * ns];
        let lowest = (0..ns).min_by_key(|&s| model.server_ids[s]).unwrap();
        assert!(model.round(&x).iter().all(|&s| s == lowest));
    }
}
