//! Parameter model and the two strategic-form games.
//!
//! Nodes are indexed from 0. A profile in the no-collusion game mixes
//! [`Strategy::Honest`] and [`Strategy::Malicious`]; a profile in the
//! bribery game mixes [`Strategy::Honest`] and [`Strategy::Committed`].
//! A protocol runs only when its supporters hold strictly more than `t`
//! of the power, so an aggregate exactly at `t` falls into the stalled case.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Voting power per node, as exact fractions of the whole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDistribution(#[serde(with = "rational::vec_as_str")] Vec<Rational>);

impl PowerDistribution {
    /// Checked constructor: at least two nodes, all positive, summing to 1.
    pub fn new(powers: Vec<Rational>) -> Result<Self, GameError> {
        let dist = Self(powers);
        let violations = dist.violations();
        if violations.is_empty() {
            Ok(dist)
        } else {
            Err(GameError::InvalidParams(Violations(violations)))
        }
    }

    /// Wraps powers without checking them. [`validate_params`] reports
    /// anything wrong later.
    pub fn new_unchecked(powers: Vec<Rational>) -> Self {
        Self(powers)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn power(&self, node: NodeId) -> &Rational {
        &self.0[node.0]
    }

    pub fn total(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, v| acc + v)
    }

    /// Combined power of `nodes`.
    pub fn sum_over<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> Rational {
        nodes
            .into_iter()
            .fold(Rational::zero(), |acc, n| acc + &self.0[n.0])
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.0.len()).map(NodeId)
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.0.len() < 2 {
            out.push(Violation::TooFewNodes { n: self.0.len() });
        }
        for (i, v) in self.0.iter().enumerate() {
            if !v.is_positive() {
                out.push(Violation::NonPositivePower {
                    node: NodeId(i),
                    power: v.clone(),
                });
            }
        }
        let sum = self.total();
        if !sum.is_one() {
            out.push(Violation::PowersNotNormalized { sum });
        }
        out
    }
}

/// Powers, threshold and the four per-node reward vectors.
///
/// The JSON form uses short field names (`t`, `r_h`, `r_d`, `r_m`, `r_dp`)
/// with every number as a rational string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    pub powers: PowerDistribution,
    #[serde(rename = "t", with = "rational::as_str")]
    pub threshold: Rational,
    /// Reward for running the honest protocol when it succeeds.
    #[serde(rename = "r_h", with = "rational::vec_as_str")]
    pub reward_honest: Vec<Rational>,
    /// Reward for deviating while the honest protocol succeeds.
    #[serde(rename = "r_d", with = "rational::vec_as_str")]
    pub reward_deviant: Vec<Rational>,
    /// Reward for running the malicious protocol when it succeeds.
    #[serde(rename = "r_m", with = "rational::vec_as_str")]
    pub reward_malicious: Vec<Rational>,
    /// Reward for staying honest while the malicious protocol succeeds.
    #[serde(rename = "r_dp", with = "rational::vec_as_str")]
    pub reward_deviant_vs_malicious: Vec<Rational>,
}

impl GameParams {
    /// Builds and validates.
    pub fn new(
        powers: Vec<Rational>,
        threshold: Rational,
        reward_honest: Vec<Rational>,
        reward_deviant: Vec<Rational>,
        reward_malicious: Vec<Rational>,
        reward_deviant_vs_malicious: Vec<Rational>,
    ) -> Result<Self, GameError> {
        Self {
            powers: PowerDistribution::new_unchecked(powers),
            threshold,
            reward_honest,
            reward_deviant,
            reward_malicious,
            reward_deviant_vs_malicious,
        }
        .validated()
    }

    /// Same four rewards for every node.
    pub fn uniform(
        powers: Vec<Rational>,
        threshold: Rational,
        honest: Rational,
        deviant: Rational,
        malicious: Rational,
        deviant_vs_malicious: Rational,
    ) -> Result<Self, GameError> {
        let n = powers.len();
        Self::new(
            powers,
            threshold,
            vec![honest; n],
            vec![deviant; n],
            vec![malicious; n],
            vec![deviant_vs_malicious; n],
        )
    }

    pub fn validated(self) -> Result<Self, GameError> {
        let violations = validate_params(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(GameError::InvalidParams(Violations(violations)))
        }
    }

    pub fn n(&self) -> usize {
        self.powers.len()
    }

    pub fn reward(&self, slot: RewardSlot, node: NodeId) -> &Rational {
        match slot {
            RewardSlot::Honest => &self.reward_honest[node.0],
            RewardSlot::Deviant => &self.reward_deviant[node.0],
            RewardSlot::Malicious => &self.reward_malicious[node.0],
            RewardSlot::DeviantVsMalicious => &self.reward_deviant_vs_malicious[node.0],
        }
    }

    fn check_node(&self, node: NodeId) -> Result<(), GameError> {
        if node.0 < self.n() {
            Ok(())
        } else {
            Err(GameError::UnknownNode { node, n: self.n() })
        }
    }
}

/// The four reward kinds a node can receive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSlot {
    Honest,
    Deviant,
    Malicious,
    DeviantVsMalicious,
}

/// One broken modelling assumption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewNodes {
        n: usize,
    },
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    NonPositivePower {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        power: Rational,
    },
    PowersNotNormalized {
        #[serde(with = "rational::as_str")]
        sum: Rational,
    },
    HonestRewardNotPositive {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        r_h: Rational,
    },
    DeviantNotBelowHonest {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        r_d: Rational,
        #[serde(with = "rational::as_str")]
        r_h: Rational,
    },
    MaliciousNotAboveHonest {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        r_m: Rational,
        #[serde(with = "rational::as_str")]
        r_h: Rational,
    },
    DeviantVsMaliciousNotBelowMalicious {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        r_dp: Rational,
        #[serde(with = "rational::as_str")]
        r_m: Rational,
    },
    ThresholdBelowHalf {
        #[serde(with = "rational::as_str")]
        t: Rational,
    },
    NodeReachesThreshold {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        power: Rational,
        #[serde(with = "rational::as_str")]
        t: Rational,
    },
}

impl Violation {
    /// Number of the modelling assumption this violation breaks
    /// (1: node set and power normalisation, 3: honest rewards,
    /// 4: malicious rewards, 5: threshold).
    pub fn assumption(&self) -> u8 {
        match self {
            Violation::TooFewNodes { .. }
            | Violation::LengthMismatch { .. }
            | Violation::NonPositivePower { .. }
            | Violation::PowersNotNormalized { .. } => 1,
            Violation::HonestRewardNotPositive { .. } | Violation::DeviantNotBelowHonest { .. } => {
                3
            }
            Violation::MaliciousNotAboveHonest { .. }
            | Violation::DeviantVsMaliciousNotBelowMalicious { .. } => 4,
            Violation::ThresholdBelowHalf { .. } | Violation::NodeReachesThreshold { .. } => 5,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assumption {}: ", self.assumption())?;
        match self {
            Violation::TooFewNodes { n } => write!(f, "need at least 2 nodes, got {n}"),
            Violation::LengthMismatch {
                field,
                expected,
                found,
            } => write!(f, "`{field}` has {found} entries, expected {expected}"),
            Violation::NonPositivePower { node, power } => {
                write!(f, "v_{node} = {power} is not positive")
            }
            Violation::PowersNotNormalized { sum } => {
                write!(f, "powers sum to {sum}, normalization requires exactly 1")
            }
            Violation::HonestRewardNotPositive { node, r_h } => {
                write!(f, "R_h,{node} = {r_h} is not positive")
            }
            Violation::DeviantNotBelowHonest { node, r_d, r_h } => {
                write!(f, "R_d,{node} = {r_d} is not below R_h,{node} = {r_h}")
            }
            Violation::MaliciousNotAboveHonest { node, r_m, r_h } => {
                write!(f, "R_m,{node} = {r_m} is not above R_h,{node} = {r_h}")
            }
            Violation::DeviantVsMaliciousNotBelowMalicious { node, r_dp, r_m } => {
                write!(f, "R_d',{node} = {r_dp} is not below R_m,{node} = {r_m}")
            }
            Violation::ThresholdBelowHalf { t } => write!(f, "t = {t} < 1/2"),
            Violation::NodeReachesThreshold { node, power, t } => {
                write!(f, "v_{node} = {power} ≥ t = {t}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("invalid parameters: {0}")]
    InvalidParams(Violations),
    #[error("profile is for the {found} game, expected the {expected} game")]
    VariantMismatch {
        expected: GameVariant,
        found: GameVariant,
    },
    #[error("strategy {strategy:?} of node {node} is not legal in the {variant} game")]
    IllegalStrategy {
        variant: GameVariant,
        node: NodeId,
        strategy: Strategy,
    },
    #[error("profile has {found} entries for {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("node {node} out of range for {n} nodes")]
    UnknownNode { node: NodeId, n: usize },
}

/// Checks every invariant of [`GameParams`]; an empty list means valid.
pub fn validate_params(params: &GameParams) -> Vec<Violation> {
    let n = params.n();
    let mut out = params.powers.violations();
    let vectors = [
        ("r_h", &params.reward_honest),
        ("r_d", &params.reward_deviant),
        ("r_m", &params.reward_malicious),
        ("r_dp", &params.reward_deviant_vs_malicious),
    ];
    let mut lengths_ok = true;
    for (field, v) in vectors {
        if v.len() != n {
            lengths_ok = false;
            out.push(Violation::LengthMismatch {
                field,
                expected: n,
                found: v.len(),
            });
        }
    }

    let t = &params.threshold;
    if *t < rational::ratio(1, 2) {
        out.push(Violation::ThresholdBelowHalf { t: t.clone() });
    }
    for (i, v) in params.powers.as_slice().iter().enumerate() {
        if v >= t {
            out.push(Violation::NodeReachesThreshold {
                node: NodeId(i),
                power: v.clone(),
                t: t.clone(),
            });
        }
    }

    if !lengths_ok {
        return out;
    }
    for i in 0..n {
        let node = NodeId(i);
        let r_h = &params.reward_honest[i];
        let r_d = &params.reward_deviant[i];
        let r_m = &params.reward_malicious[i];
        let r_dp = &params.reward_deviant_vs_malicious[i];
        if !r_h.is_positive() {
            out.push(Violation::HonestRewardNotPositive {
                node,
                r_h: r_h.clone(),
            });
        }
        if r_d >= r_h {
            out.push(Violation::DeviantNotBelowHonest {
                node,
                r_d: r_d.clone(),
                r_h: r_h.clone(),
            });
        }
        if r_m <= r_h {
            out.push(Violation::MaliciousNotAboveHonest {
                node,
                r_m: r_m.clone(),
                r_h: r_h.clone(),
            });
        }
        if r_dp >= r_m {
            out.push(Violation::DeviantVsMaliciousNotBelowMalicious {
                node,
                r_dp: r_dp.clone(),
                r_m: r_m.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Follow the honest protocol.
    Honest,
    /// Run the malicious protocol unconditionally.
    Malicious,
    /// Commit to the bribery contract and follow its order.
    Committed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameVariant {
    /// Nodes choose between honest and malicious with no coordination.
    NoCollusion,
    /// Nodes choose between honest and committing to the bribery contract.
    Bribery,
}

impl GameVariant {
    /// The non-honest strategy of this game.
    pub fn opposing(self) -> Strategy {
        match self {
            GameVariant::NoCollusion => Strategy::Malicious,
            GameVariant::Bribery => Strategy::Committed,
        }
    }

    pub fn allows(self, strategy: Strategy) -> bool {
        strategy == Strategy::Honest || strategy == self.opposing()
    }
}

impl fmt::Display for GameVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameVariant::NoCollusion => "no-collusion",
            GameVariant::Bribery => "bribery",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    variant: GameVariant,
    choices: Vec<Strategy>,
}

impl StrategyProfile {
    pub fn new(variant: GameVariant, choices: Vec<Strategy>) -> Result<Self, GameError> {
        if let Some((i, &s)) = choices
            .iter()
            .enumerate()
            .find(|(_, s)| !variant.allows(**s))
        {
            return Err(GameError::IllegalStrategy {
                variant,
                node: NodeId(i),
                strategy: s,
            });
        }
        Ok(Self { variant, choices })
    }

    pub fn all_honest(variant: GameVariant, n: usize) -> Self {
        Self {
            variant,
            choices: vec![Strategy::Honest; n],
        }
    }

    pub fn all_opposing(variant: GameVariant, n: usize) -> Self {
        Self {
            variant,
            choices: vec![variant.opposing(); n],
        }
    }

    /// Honest everywhere except `deviators`, who play the opposing strategy.
    pub fn with_deviators<'a>(
        variant: GameVariant,
        n: usize,
        deviators: impl IntoIterator<Item = &'a NodeId>,
    ) -> Self {
        let mut p = Self::all_honest(variant, n);
        for d in deviators {
            p.choices[d.0] = variant.opposing();
        }
        p
    }

    /// Profile from a bitmask: bit `i` set means node `i` plays the
    /// opposing strategy.
    pub fn from_mask(variant: GameVariant, n: usize, mask: u64) -> Self {
        let choices = (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    variant.opposing()
                } else {
                    Strategy::Honest
                }
            })
            .collect();
        Self { variant, choices }
    }

    pub fn variant(&self) -> GameVariant {
        self.variant
    }

    pub fn choices(&self) -> &[Strategy] {
        &self.choices
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn choice(&self, node: NodeId) -> Strategy {
        self.choices[node.0]
    }

    /// Copy with `node` switched to the other strategy of the game.
    pub fn flipped(&self, node: NodeId) -> Self {
        let mut p = self.clone();
        p.choices[node.0] = match p.choices[node.0] {
            Strategy::Honest => self.variant.opposing(),
            _ => Strategy::Honest,
        };
        p
    }

    pub fn set(&mut self, node: NodeId, strategy: Strategy) -> Result<(), GameError> {
        if !self.variant.allows(strategy) {
            return Err(GameError::IllegalStrategy {
                variant: self.variant,
                node,
                strategy,
            });
        }
        self.choices[node.0] = strategy;
        Ok(())
    }
}

/// Power behind the honest strategy and behind the opposing one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregatePowers {
    #[serde(with = "rational::as_str")]
    pub honest: Rational,
    #[serde(with = "rational::as_str")]
    pub opposing: Rational,
}

/// Which protocol gathers enough power to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prevailing {
    Honest,
    Opposing,
    Stalled,
}

impl AggregatePowers {
    /// Strict comparison against `t`. With `t ≥ 1/2` at most one side
    /// can exceed it.
    pub fn prevailing(&self, threshold: &Rational) -> Prevailing {
        if self.honest > *threshold {
            Prevailing::Honest
        } else if self.opposing > *threshold {
            Prevailing::Opposing
        } else {
            Prevailing::Stalled
        }
    }
}

pub fn aggregate_powers(
    profile: &StrategyProfile,
    powers: &PowerDistribution,
) -> Result<AggregatePowers, GameError> {
    if profile.len() != powers.len() {
        return Err(GameError::LengthMismatch {
            expected: powers.len(),
            found: profile.len(),
        });
    }
    let honest = profile
        .choices
        .iter()
        .zip(powers.as_slice())
        .filter(|(s, _)| **s == Strategy::Honest)
        .fold(Rational::zero(), |acc, (_, v)| acc + v);
    let opposing = Rational::one() - &honest;
    Ok(AggregatePowers { honest, opposing })
}

fn no_collusion_payoff(
    params: &GameParams,
    strategy: Strategy,
    prevailing: Prevailing,
    node: NodeId,
) -> Rational {
    match (strategy, prevailing) {
        (_, Prevailing::Stalled) => Rational::zero(),
        (Strategy::Honest, Prevailing::Honest) => params.reward_honest[node.0].clone(),
        (Strategy::Honest, Prevailing::Opposing) => {
            params.reward_deviant_vs_malicious[node.0].clone()
        }
        (_, Prevailing::Honest) => params.reward_deviant[node.0].clone(),
        (_, Prevailing::Opposing) => params.reward_malicious[node.0].clone(),
    }
}

fn bribery_payoff(
    params: &GameParams,
    strategy: Strategy,
    prevailing: Prevailing,
    node: NodeId,
) -> Rational {
    match (strategy, prevailing) {
        // The contract orders the honest protocol unless its minions exceed
        // t, so a stall never happens: everyone runs honest with full power.
        (_, Prevailing::Stalled) | (_, Prevailing::Honest) => params.reward_honest[node.0].clone(),
        (Strategy::Honest, Prevailing::Opposing) => {
            params.reward_deviant_vs_malicious[node.0].clone()
        }
        (_, Prevailing::Opposing) => params.reward_malicious[node.0].clone(),
    }
}

fn check_profile(
    params: &GameParams,
    profile: &StrategyProfile,
    expected: GameVariant,
) -> Result<AggregatePowers, GameError> {
    if profile.variant != expected {
        return Err(GameError::VariantMismatch {
            expected,
            found: profile.variant,
        });
    }
    aggregate_powers(profile, &params.powers)
}

/// Payoff of `node` in the game without collusion.
pub fn no_collusion_utility(
    params: &GameParams,
    profile: &StrategyProfile,
    node: NodeId,
) -> Result<Rational, GameError> {
    params.check_node(node)?;
    let agg = check_profile(params, profile, GameVariant::NoCollusion)?;
    Ok(no_collusion_payoff(
        params,
        profile.choice(node),
        agg.prevailing(&params.threshold),
        node,
    ))
}

/// Payoff of `node` in the game with the bribery contract.
pub fn bribery_utility(
    params: &GameParams,
    profile: &StrategyProfile,
    node: NodeId,
) -> Result<Rational, GameError> {
    params.check_node(node)?;
    let agg = check_profile(params, profile, GameVariant::Bribery)?;
    Ok(bribery_payoff(
        params,
        profile.choice(node),
        agg.prevailing(&params.threshold),
        node,
    ))
}

/// Payoff of `node` in whichever game `profile` belongs to.
pub fn utility(
    params: &GameParams,
    profile: &StrategyProfile,
    node: NodeId,
) -> Result<Rational, GameError> {
    match profile.variant {
        GameVariant::NoCollusion => no_collusion_utility(params, profile, node),
        GameVariant::Bribery => bribery_utility(params, profile, node),
    }
}

/// Payoffs of every node, aggregating powers once.
pub fn payoffs(params: &GameParams, profile: &StrategyProfile) -> Result<Vec<Rational>, GameError> {
    let agg = aggregate_powers(profile, &params.powers)?;
    let prevailing = agg.prevailing(&params.threshold);
    let payoff = match profile.variant {
        GameVariant::NoCollusion => no_collusion_payoff,
        GameVariant::Bribery => bribery_payoff,
    };
    Ok(params
        .powers
        .nodes()
        .map(|node| payoff(params, profile.choice(node), prevailing, node))
        .collect())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::rational::{int, ratio};

    /// Three nodes, powers (2/5, 7/20, 1/4), t = 1/2, rewards (2, -1, 5, -3).
    pub fn p3() -> GameParams {
        p3_with_threshold(ratio(1, 2))
    }

    pub fn p3_with_threshold(t: Rational) -> GameParams {
        GameParams::uniform(
            vec![ratio(2, 5), ratio(7, 20), ratio(1, 4)],
            t,
            int(2),
            int(-1),
            int(5),
            int(-3),
        )
        .unwrap()
    }
}
