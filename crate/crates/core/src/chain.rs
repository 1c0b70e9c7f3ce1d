//! Double-spend fork simulation.
//!
//! One block per slot; the producer is drawn with probability equal to its
//! power. The first block after genesis carries the target transaction.
//! Until it has `k` descendants everyone builds honestly. After that the
//! minions build a fork from the target's parent while honest nodes keep
//! extending the longest chain (first-seen on ties).
//!
//! * Longest chain (PoW): the attack succeeds once the fork is strictly
//!   longer than the honest chain.
//! * Deposit slashing (PoS): every node endorses each block on the chain it
//!   follows. Minions endorsed the honest blocks up to the confirmation
//!   height, so each fork block at or below that height is a double sign and
//!   yields one slashing proof per minion. Honest producers put every pending
//!   proof in their blocks; minions never do. Once the fork is longest, an
//!   honest block carrying proofs needs endorsement from more than `t` of the
//!   power, which the minions withhold when they hold more than `t`. The
//!   attack succeeds when the fork has then been endorsed by the minion
//!   majority for `k` further slots.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::game::{GameError, GameParams, NodeId, PowerDistribution};
use crate::rational::{self, Rational};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("slashing audit needs a proof-of-stake run")]
    NotProofOfStake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Consensus {
    #[serde(rename = "pow")]
    PowLongestChain,
    #[serde(rename = "pos")]
    PosSlashing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub height: u64,
    /// `None` only for genesis.
    pub producer: Option<NodeId>,
    pub slot: u64,
    pub contains_target_tx: bool,
    pub slashing_proofs: u32,
}

impl Block {
    pub fn contains_slashing_proof(&self) -> bool {
        self.slashing_proofs > 0
    }
}

/// Block tree plus the longest-chain view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainState {
    blocks: Vec<Block>,
    canonical_tip: BlockId,
    pub target_block: Option<BlockId>,
    pub confirmations: u32,
}

impl ChainState {
    pub fn new(confirmations: u32) -> Self {
        let genesis = Block {
            id: BlockId(0),
            parent: None,
            height: 0,
            producer: None,
            slot: 0,
            contains_target_tx: false,
            slashing_proofs: 0,
        };
        Self {
            blocks: vec![genesis],
            canonical_tip: BlockId(0),
            target_block: None,
            confirmations,
        }
    }

    pub fn genesis(&self) -> BlockId {
        BlockId(0)
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.0]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Earliest-seen block of maximal height.
    pub fn canonical_tip(&self) -> BlockId {
        self.canonical_tip
    }

    pub fn height(&self, id: BlockId) -> u64 {
        self.blocks[id.0].height
    }

    pub fn push(
        &mut self,
        parent: BlockId,
        producer: NodeId,
        slot: u64,
        contains_target_tx: bool,
        slashing_proofs: u32,
    ) -> BlockId {
        let id = BlockId(self.blocks.len());
        let height = self.blocks[parent.0].height + 1;
        self.blocks.push(Block {
            id,
            parent: Some(parent),
            height,
            producer: Some(producer),
            slot,
            contains_target_tx,
            slashing_proofs,
        });
        // Strictly greater only: ties keep the first-seen tip.
        if height > self.height(self.canonical_tip) {
            self.canonical_tip = id;
        }
        id
    }

    /// Blocks from `tip` back to genesis, tip first.
    pub fn ancestry(&self, tip: BlockId) -> impl Iterator<Item = &Block> {
        let mut next = Some(tip);
        std::iter::from_fn(move || {
            let block = &self.blocks[next?.0];
            next = block.parent;
            Some(block)
        })
    }

    pub fn is_leaf(&self, id: BlockId) -> bool {
        !self.blocks.iter().any(|b| b.parent == Some(id))
    }

    pub fn on_canonical_chain(&self, id: BlockId) -> bool {
        self.ancestry(self.canonical_tip).any(|b| b.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub powers: PowerDistribution,
    /// Power threshold; PoS finality needs endorsement strictly above it.
    #[serde(rename = "t", with = "rational::as_str")]
    pub threshold: Rational,
    pub minions: BTreeSet<NodeId>,
    pub consensus: Consensus,
    pub confirmations: u32,
    pub horizon_slots: u64,
    #[serde(with = "rational::as_str")]
    pub block_reward: Rational,
    #[serde(with = "rational::as_str")]
    pub double_spend_value: Rational,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        PowerDistribution::new(self.powers.as_slice().to_vec())?;
        if self.horizon_slots == 0 {
            return Err(ChainError::InvalidConfig(
                "horizon_slots must be positive".into(),
            ));
        }
        if self.confirmations == 0 {
            return Err(ChainError::InvalidConfig(
                "confirmations must be at least 1".into(),
            ));
        }
        if let Some(bad) = self.minions.iter().find(|m| m.0 >= self.powers.len()) {
            return Err(ChainError::InvalidConfig(format!(
                "minion {bad} is not a node"
            )));
        }
        if self.threshold < rational::ratio(1, 2) || self.threshold >= Rational::one() {
            return Err(ChainError::InvalidConfig(format!(
                "threshold {} must lie in [1/2, 1)",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn minion_power(&self) -> Rational {
        self.powers.sum_over(self.minions.iter())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Succeeded,
    /// No minions, so no fork was ever started.
    NoFork,
    /// The target block never reached `k` confirmations.
    NotConfirmed,
    /// The fork never overtook (PoW) or never finalized (PoS) in time.
    HorizonExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackResult {
    pub consensus: Consensus,
    pub success: bool,
    pub resolution: Resolution,
    pub slots_elapsed: u64,
    pub confirmed_at_slot: Option<u64>,
    /// Height the fork gained over its base (the target's parent).
    pub fork_length: u64,
    /// Honest blocks, target included, dropped from the canonical chain.
    pub reverted_blocks: u64,
    pub per_node_blocks_canonical: BTreeMap<NodeId, u64>,
    #[serde(with = "rational::map_as_str")]
    pub per_node_block_rewards: BTreeMap<NodeId, Rational>,
    /// Magnate's double-spend proceeds: the configured value on success.
    #[serde(with = "rational::as_str")]
    pub double_spend_gain: Rational,
    /// Honest blocks refused by the minion majority for carrying proofs.
    pub honest_blocks_rejected: u64,
    pub slashing_proofs_generated: u64,
    pub slashing_proofs_included: u64,
    pub slashing_proofs_censored: u64,
    pub double_signs: BTreeMap<NodeId, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceChain {
    Honest,
    Fork,
    Rejected,
}

/// One row of the per-slot trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub slot: u64,
    pub producer: NodeId,
    pub chain: TraceChain,
    pub height: u64,
    pub event: String,
}

pub fn write_trace_csv<W: std::io::Write>(rows: &[TraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "producer", "chain", "height", "event"])?;
    for r in rows {
        let chain = match r.chain {
            TraceChain::Honest => "honest",
            TraceChain::Fork => "fork",
            TraceChain::Rejected => "rejected",
        };
        w.write_record([
            r.slot.to_string(),
            r.producer.to_string(),
            chain.to_string(),
            r.height.to_string(),
            r.event.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Exact power-proportional sampling over a common denominator.
struct ProducerSampler {
    denominator: u64,
    cumulative: Vec<u64>,
}

impl ProducerSampler {
    fn new(powers: &PowerDistribution) -> Result<Self, ChainError> {
        let lcm = powers
            .as_slice()
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let denominator = lcm
            .to_u64()
            .ok_or_else(|| ChainError::InvalidConfig("power denominators exceed 64 bits".into()))?;
        let mut running = BigInt::zero();
        let mut cumulative = Vec::with_capacity(powers.len());
        for v in powers.as_slice() {
            running += v.numer() * (&lcm / v.denom());
            cumulative.push(running.to_u64().expect("bounded by denominator"));
        }
        Ok(Self {
            denominator,
            cumulative,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> NodeId {
        let x = rng.gen_range(0..self.denominator);
        NodeId(self.cumulative.partition_point(|&c| c <= x))
    }
}

enum Stage {
    Confirming,
    Racing,
    Finalizing { endorsed_slots: u64 },
}

/// Runs one attack. Deterministic in `config.rng_seed`.
pub fn run_attack(config: &SimConfig) -> Result<AttackResult, ChainError> {
    simulate(config, None).map(|(result, _)| result)
}

/// Like [`run_attack`], also returning the final block tree and a per-slot trace.
pub fn run_attack_traced(
    config: &SimConfig,
) -> Result<(AttackResult, ChainState, Vec<TraceRow>), ChainError> {
    let mut trace = Vec::new();
    let (result, chain) = simulate(config, Some(&mut trace))?;
    Ok((result, chain, trace))
}

fn simulate(
    config: &SimConfig,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<(AttackResult, ChainState), ChainError> {
    config.validate()?;
    let sampler = ProducerSampler::new(&config.powers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let k = u64::from(config.confirmations);
    let pos = config.consensus == Consensus::PosSlashing;
    let minion_majority = config.minion_power() > config.threshold;

    let mut chain = ChainState::new(config.confirmations);
    let fork_base = chain.genesis();
    let mut honest_tip = chain.genesis();
    let mut fork_tip = fork_base;
    let mut confirm_height = 0;
    let mut confirmed_at_slot = None;
    let mut stage = Stage::Confirming;
    let mut resolution = Resolution::HorizonExhausted;
    let mut slots_elapsed = config.horizon_slots;

    let mut double_signs: BTreeMap<NodeId, u64> = config.minions.iter().map(|m| (*m, 0)).collect();
    let mut proofs_generated: u64 = 0;
    let mut proofs_on_honest: u64 = 0;
    let mut proofs_on_fork: u64 = 0;
    let mut honest_blocks_rejected = 0;

    let mut log = |slot, producer, chain_kind, height, event: &str| {
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow {
                slot,
                producer,
                chain: chain_kind,
                height,
                event: event.to_string(),
            });
        }
    };

    for slot in 0..config.horizon_slots {
        let producer = sampler.draw(&mut rng);
        let is_minion = config.minions.contains(&producer);
        match stage {
            Stage::Confirming => {
                let first = chain.target_block.is_none();
                honest_tip = chain.push(chain.canonical_tip(), producer, slot, first, 0);
                if first {
                    chain.target_block = Some(honest_tip);
                }
                let height = chain.height(honest_tip);
                let target_height = chain.height(chain.target_block.expect("set above"));
                let confirmed = height >= target_height + k;
                log(
                    slot,
                    producer,
                    TraceChain::Honest,
                    height,
                    if first {
                        "target"
                    } else if confirmed {
                        "confirmed"
                    } else {
                        "block"
                    },
                );
                if confirmed {
                    confirm_height = height;
                    confirmed_at_slot = Some(slot);
                    if config.minions.is_empty() {
                        resolution = Resolution::NoFork;
                        slots_elapsed = slot + 1;
                        break;
                    }
                    stage = Stage::Racing;
                }
            }
            Stage::Racing => {
                if is_minion {
                    fork_tip = chain.push(fork_tip, producer, slot, false, 0);
                    let height = chain.height(fork_tip);
                    let mut event = "fork";
                    if pos && height <= confirm_height {
                        for count in double_signs.values_mut() {
                            *count += 1;
                        }
                        proofs_generated += config.minions.len() as u64;
                        event = "fork_double_sign";
                    }
                    log(slot, producer, TraceChain::Fork, height, event);
                } else {
                    let proofs = if pos {
                        proofs_generated - proofs_on_honest
                    } else {
                        0
                    };
                    proofs_on_honest += proofs;
                    honest_tip = chain.push(honest_tip, producer, slot, false, proofs as u32);
                    let event = if proofs > 0 {
                        "slashing_proof"
                    } else {
                        "block"
                    };
                    log(
                        slot,
                        producer,
                        TraceChain::Honest,
                        chain.height(honest_tip),
                        event,
                    );
                }
                if chain.height(fork_tip) > chain.height(honest_tip) {
                    debug_assert_eq!(chain.canonical_tip(), fork_tip);
                    if pos {
                        stage = Stage::Finalizing { endorsed_slots: 0 };
                    } else {
                        resolution = Resolution::Succeeded;
                        slots_elapsed = slot + 1;
                        break;
                    }
                }
            }
            Stage::Finalizing { endorsed_slots } => {
                if is_minion {
                    fork_tip = chain.push(chain.canonical_tip(), producer, slot, false, 0);
                    log(
                        slot,
                        producer,
                        TraceChain::Fork,
                        chain.height(fork_tip),
                        "fork",
                    );
                } else {
                    let pending = proofs_generated - proofs_on_fork;
                    if pending > 0 && minion_majority {
                        honest_blocks_rejected += 1;
                        let height = chain.height(chain.canonical_tip()) + 1;
                        log(slot, producer, TraceChain::Rejected, height, "censored");
                    } else {
                        proofs_on_fork += pending;
                        fork_tip = chain.push(
                            chain.canonical_tip(),
                            producer,
                            slot,
                            false,
                            pending as u32,
                        );
                        let event = if pending > 0 {
                            "slashing_proof"
                        } else {
                            "block"
                        };
                        log(
                            slot,
                            producer,
                            TraceChain::Fork,
                            chain.height(fork_tip),
                            event,
                        );
                    }
                }
                if minion_majority {
                    let endorsed_slots = endorsed_slots + 1;
                    if endorsed_slots >= k {
                        resolution = Resolution::Succeeded;
                        slots_elapsed = slot + 1;
                        break;
                    }
                    stage = Stage::Finalizing { endorsed_slots };
                }
            }
        }
    }
    if confirmed_at_slot.is_none() {
        resolution = Resolution::NotConfirmed;
    }

    let success = resolution == Resolution::Succeeded;
    let canonical: Vec<&Block> = chain.ancestry(chain.canonical_tip()).collect();
    let mut per_node_blocks_canonical: BTreeMap<NodeId, u64> =
        config.powers.nodes().map(|n| (n, 0)).collect();
    let mut slashing_proofs_included = 0;
    for block in &canonical {
        if let Some(p) = block.producer {
            *per_node_blocks_canonical.entry(p).or_default() += 1;
        }
        slashing_proofs_included += u64::from(block.slashing_proofs);
    }
    let per_node_block_rewards = per_node_blocks_canonical
        .iter()
        .map(|(n, c)| {
            (
                *n,
                &config.block_reward * Rational::from_integer(BigInt::from(*c)),
            )
        })
        .collect();
    let fork_length = chain.height(fork_tip) - chain.height(fork_base);
    let reverted_blocks = if success {
        chain.height(honest_tip) - chain.height(fork_base)
    } else {
        0
    };

    let result = AttackResult {
        consensus: config.consensus,
        success,
        resolution,
        slots_elapsed,
        confirmed_at_slot,
        fork_length,
        reverted_blocks,
        per_node_blocks_canonical,
        per_node_block_rewards,
        double_spend_gain: if success {
            config.double_spend_value.clone()
        } else {
            Rational::zero()
        },
        honest_blocks_rejected,
        slashing_proofs_generated: proofs_generated,
        slashing_proofs_included,
        slashing_proofs_censored: proofs_generated - slashing_proofs_included.min(proofs_generated),
        double_signs: if pos { double_signs } else { BTreeMap::new() },
    };
    Ok((result, chain))
}

/// Catch-up probability of an attacker holding `attacker_share` of the
/// power who must gain `deficit` blocks net: `(q/p)^z` with `q` the attacker
/// share and `p = 1 - q`, or 1 when `q ≥ p`.
pub fn gamblers_ruin(attacker_share: f64, deficit: u32) -> f64 {
    let q = attacker_share;
    let p = 1.0 - q;
    if q >= p {
        1.0
    } else {
        (q / p).powi(deficit as i32)
    }
}

/// Net blocks the fork must gain after confirmation: the target and its
/// `k` descendants, plus one to be strictly longer.
pub fn catch_up_deficit(confirmations: u32) -> u32 {
    confirmations + 2
}

/// Per-node base rewards fed into [`derive_game_params`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseRewards {
    #[serde(rename = "r_h", with = "rational::vec_as_str")]
    pub honest: Vec<Rational>,
    #[serde(rename = "r_d", with = "rational::vec_as_str")]
    pub deviant: Vec<Rational>,
    #[serde(rename = "r_dp", with = "rational::vec_as_str")]
    pub deviant_vs_malicious: Vec<Rational>,
}

impl BaseRewards {
    pub fn uniform(n: usize, honest: Rational, deviant: Rational, dvm: Rational) -> Self {
        Self {
            honest: vec![honest; n],
            deviant: vec![deviant; n],
            deviant_vs_malicious: vec![dvm; n],
        }
    }
}

/// Game parameters implied by a bribe pool `D_m`: each node's malicious
/// reward is its honest reward plus its power share of the pool,
/// `R_m,i = R_h,i + v_i·D_m`.
pub fn derive_game_params(
    powers: &PowerDistribution,
    threshold: &Rational,
    base: &BaseRewards,
    bribe_pool: &Rational,
) -> Result<GameParams, GameError> {
    let malicious = base
        .honest
        .iter()
        .zip(powers.as_slice())
        .map(|(h, v)| h + v * bribe_pool)
        .collect();
    GameParams {
        powers: powers.clone(),
        threshold: threshold.clone(),
        reward_honest: base.honest.clone(),
        reward_deviant: base.deviant.clone(),
        reward_malicious: malicious,
        reward_deviant_vs_malicious: base.deviant_vs_malicious.clone(),
    }
    .validated()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlashingAudit {
    pub attack_successful: bool,
    pub offenses: BTreeMap<NodeId, u64>,
    pub total_offenses: u64,
    pub proofs_included: u64,
    pub proofs_censored: u64,
    /// In a successful attack no proof reached the final canonical chain.
    pub censorship_held: bool,
    /// Minions with recorded offenses whose deposits remain exposed because
    /// the attack failed.
    pub slashable: Vec<NodeId>,
}

pub fn pos_slashing_audit(result: &AttackResult) -> Result<SlashingAudit, ChainError> {
    if result.consensus != Consensus::PosSlashing {
        return Err(ChainError::NotProofOfStake);
    }
    let total_offenses = result.double_signs.values().sum();
    let slashable = if result.success {
        Vec::new()
    } else {
        result
            .double_signs
            .iter()
            .filter(|(_, c)| **c > 0)
            .map(|(n, _)| *n)
            .collect()
    };
    Ok(SlashingAudit {
        attack_successful: result.success,
        offenses: result.double_signs.clone(),
        total_offenses,
        proofs_included: result.slashing_proofs_included,
        proofs_censored: result.slashing_proofs_censored,
        censorship_held: !result.success || result.slashing_proofs_included == 0,
        slashable,
    })
}

/// Aggregate of many seeded runs of one configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchSummary {
    pub runs: u64,
    pub successes: u64,
    #[serde(with = "rational::as_str")]
    pub success_frequency: Rational,
    pub success_decimal: String,
    pub total_slots: u64,
    pub total_double_signs: u64,
    pub total_proofs_included_on_success: u64,
}

/// Seed of run `run` in batch `batch` under `seed`.
pub fn run_seed(seed: u64, batch: u64, run: u64) -> u64 {
    seed::derive(seed, seed::streams::CHAIN_RUNS, (batch << 32) | run)
}

/// Runs `runs` copies of `config` with seeds from [`run_seed`], ignoring
/// `config.rng_seed`.
pub fn run_batch(
    config: &SimConfig,
    seed: u64,
    batch: u64,
    runs: u64,
    execution: Execution,
) -> Result<Vec<AttackResult>, ChainError> {
    config.validate()?;
    execution
        .map_indexed(runs as usize, |i| {
            let mut c = config.clone();
            c.rng_seed = run_seed(seed, batch, i as u64);
            run_attack(&c)
        })
        .into_iter()
        .collect()
}

pub fn summarize(results: &[AttackResult]) -> BatchSummary {
    let runs = results.len() as u64;
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let frequency = rational::frequency(successes, runs);
    BatchSummary {
        runs,
        successes,
        success_decimal: rational::to_decimal(&frequency, 4),
        success_frequency: frequency,
        total_slots: results.iter().map(|r| r.slots_elapsed).sum(),
        total_double_signs: results.iter().flat_map(|r| r.double_signs.values()).sum(),
        total_proofs_included_on_success: results
            .iter()
            .filter(|r| r.success)
            .map(|r| r.slashing_proofs_included)
            .sum(),
    }
}

/// Smallest population realising a minion share: minions split `share`
/// evenly and honest nodes split the rest, each group using the fewest
/// nodes that keeps every single node strictly below `t`. Minions come first.
pub fn population_for_share(
    share: &Rational,
    threshold: &Rational,
) -> Result<(PowerDistribution, BTreeSet<NodeId>), ChainError> {
    if share.is_negative() || *share > Rational::one() {
        return Err(ChainError::InvalidConfig(format!(
            "share {share} outside [0, 1]"
        )));
    }
    if !threshold.is_positive() {
        return Err(ChainError::InvalidConfig(format!(
            "threshold {threshold} not positive"
        )));
    }
    let group = |total: &Rational| -> usize {
        if total.is_zero() {
            return 0;
        }
        // Fewest m with total / m < t, i.e. m > total / t.
        let bound = (total / threshold).floor().to_integer();
        (bound + BigInt::one())
            .to_usize()
            .unwrap_or(usize::MAX)
            .max(1)
    };
    let rest = Rational::one() - share;
    let (m, h) = (group(share), group(&rest));
    let mut powers = Vec::with_capacity(m + h);
    for (total, count) in [(share, m), (&rest, h)] {
        if count > 0 {
            let each = total / Rational::from_integer(BigInt::from(count));
            powers.extend(std::iter::repeat_n(each, count));
        }
    }
    let minions = (0..m).map(NodeId).collect();
    Ok((PowerDistribution::new(powers)?, minions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn p3_powers() -> PowerDistribution {
        PowerDistribution::new(vec![ratio(2, 5), ratio(7, 20), ratio(1, 4)]).unwrap()
    }

    fn config(minions: &[usize], consensus: Consensus, k: u32) -> SimConfig {
        SimConfig {
            powers: p3_powers(),
            threshold: ratio(1, 2),
            minions: minions.iter().copied().map(NodeId).collect(),
            consensus,
            confirmations: k,
            horizon_slots: 10_000,
            block_reward: int(1),
            double_spend_value: int(20),
            rng_seed: 7,
        }
    }

    #[test]
    fn sampler_matches_powers_exactly() {
        let s = ProducerSampler::new(&p3_powers()).unwrap();
        assert_eq!(s.denominator, 20);
        assert_eq!(s.cumulative, vec![8, 15, 20]);
    }

    #[test]
    fn no_minions_no_fork() {
        let r = run_attack(&config(&[], Consensus::PowLongestChain, 3)).unwrap();
        assert!(!r.success);
        assert_eq!(r.resolution, Resolution::NoFork);
        assert_eq!(r.fork_length, 0);
        assert_eq!(r.slots_elapsed, 4);
    }

    #[test]
    fn majority_fork_wins() {
        let r = run_attack(&config(&[0, 1], Consensus::PowLongestChain, 3)).unwrap();
        assert!(r.success);
        assert_eq!(r.resolution, Resolution::Succeeded);
        assert!(r.fork_length > r.reverted_blocks);
        assert_eq!(r.double_spend_gain, int(20));
    }

    #[test]
    fn tree_is_well_formed() {
        for minions in [&[0, 1][..], &[2]] {
            for consensus in [Consensus::PowLongestChain, Consensus::PosSlashing] {
                let (_, chain, trace) = run_attack_traced(&config(minions, consensus, 3)).unwrap();
                for b in chain.blocks().iter().skip(1) {
                    assert_eq!(b.height, chain.block(b.parent.unwrap()).height + 1);
                }
                let tip = chain.canonical_tip();
                let max = chain.blocks().iter().map(|b| b.height).max().unwrap();
                assert_eq!(chain.height(tip), max);
                assert!(chain.is_leaf(tip));
                assert!(!trace.is_empty());
            }
        }
    }

    #[test]
    fn target_was_canonical_at_confirmation() {
        let (r, chain, _) =
            run_attack_traced(&config(&[2], Consensus::PowLongestChain, 2)).unwrap();
        let target = chain.target_block.unwrap();
        assert!(chain.block(target).contains_target_tx);
        assert_eq!(chain.height(target), 1);
        if !r.success {
            assert!(chain.on_canonical_chain(target));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let c = config(&[0, 1], Consensus::PosSlashing, 3);
        assert_eq!(run_attack(&c).unwrap(), run_attack(&c).unwrap());
    }

    #[test]
    fn pos_success_censors_every_proof() {
        let r = run_attack(&config(&[0, 1], Consensus::PosSlashing, 3)).unwrap();
        assert!(r.success);
        let audit = pos_slashing_audit(&r).unwrap();
        assert_eq!(audit.proofs_included, 0);
        assert!(audit.censorship_held);
        assert!(audit.offenses.values().all(|c| *c > 0));
        assert!(audit.slashable.is_empty());
    }

    #[test]
    fn audit_rejects_pow_runs() {
        let r = run_attack(&config(&[0, 1], Consensus::PowLongestChain, 3)).unwrap();
        assert_eq!(pos_slashing_audit(&r), Err(ChainError::NotProofOfStake));
    }

    #[test]
    fn invalid_configs() {
        let mut c = config(&[0], Consensus::PowLongestChain, 0);
        assert!(c.validate().is_err());
        c.confirmations = 1;
        c.horizon_slots = 0;
        assert!(c.validate().is_err());
        c.horizon_slots = 1;
        c.minions.insert(NodeId(9));
        assert!(c.validate().is_err());
    }

    #[test]
    fn derived_malicious_rewards() {
        let base = BaseRewards::uniform(3, int(2), int(-1), int(-3));
        let params = derive_game_params(&p3_powers(), &ratio(1, 2), &base, &int(9)).unwrap();
        assert_eq!(
            params.reward_malicious,
            vec![ratio(28, 5), ratio(103, 20), ratio(17, 4)]
        );
        assert!(derive_game_params(&p3_powers(), &ratio(1, 2), &base, &int(0)).is_err());

        let thirds = PowerDistribution::new(vec![ratio(1, 3); 3]).unwrap();
        let params = derive_game_params(&thirds, &ratio(1, 2), &base, &int(3)).unwrap();
        assert_eq!(params.reward_malicious, vec![int(3); 3]);
    }

    #[test]
    fn populations() {
        let (p, m) = population_for_share(&ratio(3, 4), &ratio(1, 2)).unwrap();
        assert_eq!(p.as_slice(), &[ratio(3, 8), ratio(3, 8), ratio(1, 4)]);
        assert_eq!(m.len(), 2);
        let (p, m) = population_for_share(&ratio(1, 4), &ratio(1, 2)).unwrap();
        assert_eq!(p.as_slice(), &[ratio(1, 4), ratio(3, 8), ratio(3, 8)]);
        assert_eq!(m.len(), 1);
        let (p, m) = population_for_share(&int(0), &ratio(1, 2)).unwrap();
        assert!(m.is_empty());
        assert_eq!(p.len(), 3);
        let (p, m) = population_for_share(&ratio(1, 2), &ratio(1, 2)).unwrap();
        assert_eq!((p.len(), m.len()), (4, 2));
    }

    #[test]
    fn gamblers_ruin_values() {
        assert_eq!(gamblers_ruin(0.75, 5), 1.0);
        assert!((gamblers_ruin(0.25, 6) - (1.0f64 / 3.0).powi(6)).abs() < 1e-15);
        assert_eq!(catch_up_deficit(3), 5);
    }
}
