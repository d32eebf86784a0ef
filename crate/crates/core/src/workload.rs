//! Function chains: the cycle and byte demands of each pipeline stage.
//!
//! A transaction generator requests `[TxGeneration, TxBroadcast]`, a miner
//! `[Authentication, Verification, BlockGeneration, Mining, BlockBroadcast]`,
//! and every participant verifies and appends the winning block
//! (`[BlockVerification, ChainAppend]`). Concatenated per user the chains
//! follow pipeline order, which is the order of the user's requested functions.

use serde::{Deserialize, Serialize};

use crate::domain::{BlockchainFunctionKind, BlockchainParams, CostTable, UserDevice, UserId};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainRole {
    TxGenerator,
    Miner,
    Receiver,
}

impl ChainRole {
    pub fn kinds(self) -> &'static [BlockchainFunctionKind] {
        use BlockchainFunctionKind::*;
        match self {
            ChainRole::TxGenerator => &[TxGeneration, TxBroadcast],
            ChainRole::Miner => &[
                Authentication,
                Verification,
                BlockGeneration,
                Mining,
                BlockBroadcast,
            ],
            ChainRole::Receiver => &[BlockVerification, ChainAppend],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionDemand<T> {
    pub user_id: UserId,
    pub kind: BlockchainFunctionKind,
    /// CPU cycles needed to run the function once.
    pub cycles: T,
    /// Bytes entering the function. For the first function of a chain this
    /// is what the user uploads.
    pub input_bytes: T,
    pub output_bytes: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionChain<T> {
    pub user_id: UserId,
    pub role: ChainRole,
    pub demands: Vec<FunctionDemand<T>>,
}

impl<T: Scalar> FunctionChain<T> {
    pub fn total_cycles(&self) -> T {
        self.demands.iter().map(|d| d.cycles).sum()
    }

    /// Bytes the user uploads to start this chain.
    pub fn uplink_bytes(&self) -> T {
        self.demands
            .first()
            .map(|d| d.input_bytes)
            .unwrap_or_else(T::zero)
    }
}

/// Cycles required by one invocation of `kind`. Broadcast stages cost no
/// cycles; their energy is the per-event gossip cost.
pub fn function_cycles<T: Scalar>(
    kind: BlockchainFunctionKind,
    params: &BlockchainParams<T>,
    costs: &CostTable<T>,
) -> T {
    use BlockchainFunctionKind::*;
    let block = params.block_bytes();
    let sha_block = costs.sha256_cycles_per_byte * block;
    match kind {
        TxGeneration => {
            costs.rsa_cycles
                + costs.ecdsa_cycles
                + costs.sha256_cycles_per_byte * T::count(params.tx_size_bytes)
        }
        TxBroadcast | BlockBroadcast => T::zero(),
        Authentication => costs.block_auth_cycles_per_byte * block,
        Verification | BlockVerification | ChainAppend => sha_block,
        BlockGeneration => costs.merkle_multiplier * sha_block,
        Mining => costs.mining_cycles,
    }
}

/// (input, output) bytes of a stage.
fn function_bytes<T: Scalar>(kind: BlockchainFunctionKind, params: &BlockchainParams<T>) -> (T, T) {
    use BlockchainFunctionKind::*;
    let tx = T::count(params.tx_size_bytes);
    let block = params.block_bytes();
    let header = T::count(params.header_bytes);
    match kind {
        TxGeneration | TxBroadcast => (tx, tx),
        Authentication | Verification => (block, block),
        BlockGeneration => (block, block + header),
        Mining => (header, header),
        BlockBroadcast => (block + header, block + header),
        // The block reaches the verifier through the broadcast stage, so the
        // receiving user uploads nothing.
        BlockVerification => (T::zero(), block + header),
        ChainAppend => (block + header, header),
    }
}

pub fn demand<T: Scalar>(
    user_id: UserId,
    kind: BlockchainFunctionKind,
    params: &BlockchainParams<T>,
    costs: &CostTable<T>,
) -> FunctionDemand<T> {
    let (input_bytes, output_bytes) = function_bytes(kind, params);
    FunctionDemand {
        user_id,
        kind,
        cycles: function_cycles(kind, params, costs),
        input_bytes,
        output_bytes,
    }
}

pub fn role_chain<T: Scalar>(
    user_id: UserId,
    role: ChainRole,
    params: &BlockchainParams<T>,
    costs: &CostTable<T>,
) -> FunctionChain<T> {
    FunctionChain {
        user_id,
        role,
        demands: role
            .kinds()
            .iter()
            .map(|&k| demand(user_id, k, params, costs))
            .collect(),
    }
}

/// Chains requested by one user: one per role flag, plus the receiver chain
/// every participant runs.
pub fn build_chain<T: Scalar>(
    user: &UserDevice<T>,
    params: &BlockchainParams<T>,
    costs: &CostTable<T>,
) -> Vec<FunctionChain<T>> {
    let mut chains = Vec::with_capacity(3);
    if user.is_tx_generator {
        chains.push(role_chain(user.id, ChainRole::TxGenerator, params, costs));
    }
    if user.is_miner {
        chains.push(role_chain(user.id, ChainRole::Miner, params, costs));
    }
    chains.push(role_chain(user.id, ChainRole::Receiver, params, costs));
    chains
}
