//! Monte-Carlo estimates of the mining-win and orphaning probabilities,
//! compared against the closed forms.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, AnalyticsError};
use crate::domain::{BlockchainParams, Instance, UserId};
use crate::scalar::Scalar;

/// Trial count and seed. Draws come from ChaCha8 seeded with `seed`; the
/// orphaning simulator uses a separate stream of the same key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
}

const WINNER_STREAM: u64 = 0;
const ORPHAN_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("no miners")]
    NoMiners,
    #[error("miner demands must be finite and non-negative")]
    InvalidDemand,
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

fn rng(mc: &McConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    rng.set_stream(stream);
    rng
}

fn check(mc: &McConfig) -> Result<(), SimulationError> {
    if mc.trials == 0 {
        Err(SimulationError::NoTrials)
    } else {
        Ok(())
    }
}

/// Empirical win frequency of each miner when every trial picks a winner
/// with probability proportional to its demand. All-zero demands give every
/// miner the same chance.
pub fn simulate_mining_winners<T: Scalar>(
    demands: &[(UserId, T)],
    mc: &McConfig,
) -> Result<BTreeMap<UserId, T>, SimulationError> {
    check(mc)?;
    if demands.is_empty() {
        return Err(SimulationError::NoMiners);
    }
    let mut weights: Vec<f64> = demands.iter().map(|(_, d)| d.as_f64()).collect();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(SimulationError::InvalidDemand);
    }
    if weights.iter().all(|&w| w == 0.0) {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    let dist = WeightedIndex::new(&weights).map_err(|_| SimulationError::InvalidDemand)?;
    let mut rng = rng(mc, WINNER_STREAM);
    let mut wins = vec![0u64; demands.len()];
    for _ in 0..mc.trials {
        wins[dist.sample(&mut rng)] += 1;
    }
    Ok(demands
        .iter()
        .zip(wins)
        .map(|(&(id, _), w)| (id, T::count(w) / T::count(mc.trials)))
        .collect())
}

/// Empirical orphan frequency: a competing block arrives after an
/// exponential wait with mean `t_th_s`, and the block is orphaned when that
/// wait is shorter than its propagation window `z * N`.
pub fn simulate_orphaning<T: Scalar>(
    params: &BlockchainParams<T>,
    mc: &McConfig,
) -> Result<T, SimulationError> {
    check(mc)?;
    let window = params.z_s_per_tx.as_f64() * params.n_trans as f64;
    let arrivals = Exp::new(1.0 / params.t_th_s.as_f64()).expect("block interval is positive");
    let mut rng = rng(mc, ORPHAN_STREAM);
    let orphans = (0..mc.trials)
        .filter(|_| arrivals.sample(&mut rng) < window)
        .count() as u64;
    Ok(T::count(orphans) / T::count(mc.trials))
}

/// Closed-form values checked by [`cross_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticValues<T> {
    pub p_mining: BTreeMap<UserId, T>,
    pub p_orphan: T,
    pub r_mining: BTreeMap<UserId, T>,
}

pub fn analytic_values<T: Scalar>(instance: &Instance<T>) -> Result<AnalyticValues<T>, SimulationError> {
    let p_mining = analytics::p_mining(instance.chains(), instance.users()).map_err(|e| match e {
        AnalyticsError::NoMiners => SimulationError::NoMiners,
        e => e.into(),
    })?;
    let p_orphan = analytics::p_orphan(instance.params());
    let r_mining = analytics::r_mining(instance.params(), &p_mining, p_orphan).per_miner;
    Ok(AnalyticValues {
        p_mining,
        p_orphan,
        r_mining,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap<T> {
    pub quantity: String,
    pub analytic: T,
    pub empirical: T,
    pub gap: T,
    pub bound: T,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckReport<T> {
    pub trials: u64,
    pub seed: u64,
    pub gaps: Vec<Gap<T>>,
    pub pass: bool,
}

/// Three binomial standard errors, plus one count's worth of resolution so
/// that a handful of trials cannot fail on granularity alone.
fn binomial_bound(p: f64, trials: u64) -> f64 {
    let n = trials as f64;
    3.0 * (p * (1.0 - p) / n).sqrt() + 1.0 / n
}

/// Simulates the instance and compares the frequencies, and the rewards
/// recomputed from them, with the closed forms.
pub fn cross_check<T: Scalar>(
    instance: &Instance<T>,
    mc: &McConfig,
) -> Result<CrossCheckReport<T>, SimulationError> {
    let analytic = analytic_values(instance)?;
    cross_check_against(instance, &analytic, mc)
}

/// [`cross_check`] against caller-supplied analytic values.
pub fn cross_check_against<T: Scalar>(
    instance: &Instance<T>,
    analytic: &AnalyticValues<T>,
    mc: &McConfig,
) -> Result<CrossCheckReport<T>, SimulationError> {
    check(mc)?;
    let params = instance.params();
    let demands: Vec<(UserId, T)> = instance
        .users()
        .iter()
        .filter(|u| u.is_miner)
        .map(|u| {
            let d = instance
                .chains()
                .iter()
                .filter(|c| c.user_id == u.id && c.role == crate::workload::ChainRole::Miner)
                .map(|c| c.total_cycles())
                .sum();
            (u.id, d)
        })
        .collect();
    let wins = simulate_mining_winners(&demands, mc)?;
    let orphan = simulate_orphaning(params, mc)?;

    let mut gaps = Vec::new();
    let mut push = |quantity: String, analytic: T, empirical: T, bound: f64| {
        let gap = (analytic - empirical).abs();
        let bound = T::of(bound);
        gaps.push(Gap {
            quantity,
            analytic,
            empirical,
            gap,
            bound,
            pass: gap <= bound,
        });
    };

    let po = analytic.p_orphan.as_f64();
    push("p_orphan".into(), analytic.p_orphan, orphan, binomial_bound(po, mc.trials));

    let pot = params.r_const.as_f64() + params.n_trans as f64 * params.r_trans.as_f64();
    let n = mc.trials as f64;
    for (&id, &freq) in &wins {
        let p = analytic.p_mining.get(&id).copied().unwrap_or_else(T::zero);
        push(
            format!("p_mining[{id}]"),
            p,
            freq,
            binomial_bound(p.as_f64(), mc.trials),
        );
        let r = analytic.r_mining.get(&id).copied().unwrap_or_else(T::zero);
        let empirical = T::of(pot) * freq * (T::one() - orphan);
        let pf = p.as_f64();
        let sd = ((1.0 - po).powi(2) * pf * (1.0 - pf) / n + pf.powi(2) * po * (1.0 - po) / n).sqrt();
        push(format!("r_mining[{id}]"), r, empirical, pot * (3.0 * sd + 2.0 / n));
    }

    let pass = gaps.iter().all(|g| g.pass);
    Ok(CrossCheckReport {
        trials: mc.trials,
        seed: mc.seed,
        gaps,
        pass,
    })
}
