use crate::analytics::{self, EvaluationReport, Placement};
use crate::domain::Instance;
use crate::scalar::Scalar;

use super::PlacementError;

/// Largest number of placements the exhaustive search will enumerate.
pub const SEARCH_SPACE_LIMIT: f64 = 1e7;

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceSolution<T> {
    pub placement: Placement<T>,
    pub report: EvaluationReport<T>,
}

/// Number of binary placements: servers ^ demands.
pub fn search_space<T: Scalar>(instance: &Instance<T>) -> f64 {
    (instance.graph().servers.len() as f64).powi(instance.demands().len() as i32)
}

/// Enumerates every binary placement and returns the one with the lowest
/// objective among those meeting C1 and C2. Ties go to the placement whose
/// server-id vector (in demand order) is lexicographically smallest.
pub fn brute_force_solve<T: Scalar>(
    instance: &Instance<T>,
) -> Result<BruteForceSolution<T>, PlacementError> {
    let size = search_space(instance);
    if size > SEARCH_SPACE_LIMIT {
        return Err(PlacementError::SearchSpaceTooLarge { size });
    }
    let graph = instance.graph();
    let params = instance.params();
    let demands = instance.demands();

    // Servers in id order so the odometer below walks id vectors
    // lexicographically.
    let mut servers: Vec<usize> = (0..graph.servers.len()).collect();
    servers.sort_by_key(|&i| graph.servers[i].id);
    let capacity: Vec<T> = servers.iter().map(|&i| graph.servers[i].capacity_hz).collect();
    let power: Vec<T> = servers.iter().map(|&i| graph.servers[i].power_w).collect();
    let budget: Vec<T> = capacity.iter().map(|&c| c * params.t_th_s).collect();
    let cycles: Vec<T> = demands.iter().map(|(_, d)| d.cycles).collect();

    let chains = instance.chains();
    let t_ran = analytics::t_ran(chains, instance.users());
    let p_mining = analytics::p_mining(chains, instance.users())?;
    let reward = analytics::r_mining(params, &p_mining, analytics::p_orphan(params)).total;
    let gossip = instance.costs().gossip_energy_j
        * T::count(demands.iter().filter(|(_, d)| d.kind.is_broadcast()).count() as u64);
    let fixed = analytics::e_ran(chains, instance.users()) + gossip - reward;

    let slack = T::one() + T::tolerance();
    let ns = servers.len();
    let nd = demands.len();
    let mut digits = vec![0usize; nd];
    let mut load = vec![T::zero(); ns];
    let mut best: Option<(T, Vec<usize>)> = None;
    loop {
        load.iter_mut().for_each(|l| *l = T::zero());
        let mut busy = T::zero();
        let mut energy = T::zero();
        for (d, &s) in digits.iter().enumerate() {
            load[s] = load[s] + cycles[d];
            let t = cycles[d] / capacity[s];
            busy = busy + t;
            energy = energy + power[s] * t;
        }
        let fits = load.iter().zip(&budget).all(|(&l, &b)| l <= b * slack);
        if fits && t_ran + busy <= params.t_th_s * slack {
            let objective = fixed + energy;
            if best.as_ref().is_none_or(|(b, _)| objective < *b) {
                best = Some((objective, digits.clone()));
            }
        }
        // Advance the odometer, last demand fastest.
        let mut pos = nd;
        let exhausted = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < ns {
                break false;
            }
            digits[pos] = 0;
        };
        if exhausted {
            break;
        }
    }

    let (_, choice) = best.ok_or(PlacementError::Infeasible)?;
    let placement = Placement::binary(
        demands
            .iter()
            .zip(&choice)
            .map(|((k, _), &s)| (*k, graph.servers[servers[s]].id)),
    );
    let report = analytics::evaluate(&placement, instance)?;
    Ok(BruteForceSolution { placement, report })
}
