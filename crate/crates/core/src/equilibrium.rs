//! Strict-Nash and weak-dominance checks, the deviation cascade, the minion
//! deposit bound, and randomized verification of the four game-theoretic
//! claims over generated instances.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::game::{
    payoffs, validate_params, GameError, GameParams, GameVariant, NodeId, RewardSlot, Strategy,
    StrategyProfile, Violations,
};
use crate::generate::{random_params, GeneratorConfig};
use crate::rational::{self, Rational};
use crate::seed;

/// Largest `n` for which opponent profiles are enumerated exhaustively.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 12;
/// Randomized theorem checks scan all subsets, so `n` is kept small.
pub const VERIFY_MAX_NODES: usize = 8;
pub const VERIFY_MIN_NODES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{n} nodes exceeds the enumeration limit of {limit}")]
    EnumerationLimit { n: usize, limit: usize },
    #[error("order {order:?} is not a permutation of 0..{n}")]
    NotAPermutation { order: Vec<usize>, n: usize },
    #[error("node range {min}..={max} must lie within 3..=8 and be non-empty")]
    NodeRange { min: usize, max: usize },
    #[error("at least one instance is required")]
    NoInstances,
}

fn require_valid(params: &GameParams) -> Result<(), EquilibriumError> {
    let violations = validate_params(params);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(GameError::InvalidParams(Violations(violations)).into())
    }
}

/// A unilateral deviation and what it pays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub node: NodeId,
    pub to: Strategy,
    #[serde(with = "rational::as_str")]
    pub payoff_before: Rational,
    #[serde(with = "rational::as_str")]
    pub payoff_after: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NashReport {
    pub is_strict_nash: bool,
    /// First deviation that does not strictly lower the deviator's payoff.
    pub counterexample: Option<Deviation>,
    pub profiles_checked: usize,
}

/// Checks every single-node flip of `profile` within its game.
pub fn is_strict_nash(
    params: &GameParams,
    profile: &StrategyProfile,
) -> Result<NashReport, GameError> {
    let base = payoffs(params, profile)?;
    let mut checked = 1;
    for node in params.powers.nodes() {
        let flipped = profile.flipped(node);
        let after = payoffs(params, &flipped)?.swap_remove(node.0);
        checked += 1;
        if after >= base[node.0] {
            return Ok(NashReport {
                is_strict_nash: false,
                counterexample: Some(Deviation {
                    node,
                    to: flipped.choice(node),
                    payoff_before: base[node.0].clone(),
                    payoff_after: after,
                }),
                profiles_checked: checked,
            });
        }
    }
    Ok(NashReport {
        is_strict_nash: true,
        counterexample: None,
        profiles_checked: checked,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominanceWitness {
    /// The full profile with the node committed.
    pub profile: StrategyProfile,
    #[serde(with = "rational::as_str")]
    pub committed_payoff: Rational,
    #[serde(with = "rational::as_str")]
    pub honest_payoff: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeDominance {
    pub node: NodeId,
    pub never_worse: bool,
    pub strictly_better_somewhere: bool,
    /// Number of opponent profiles where committing pays strictly more.
    pub strict_profiles: usize,
    /// First opponent profile, in mask order, where committing is strictly better.
    pub first_strict: Option<DominanceWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominanceReport {
    pub weakly_dominates: bool,
    pub per_node: Vec<NodeDominance>,
    pub opponent_profiles_checked: usize,
}

/// Checks that committing weakly dominates honesty in the bribery game,
/// enumerating every opponent profile of every node.
pub fn check_weak_dominance(
    params: &GameParams,
    limit: usize,
) -> Result<DominanceReport, EquilibriumError> {
    require_valid(params)?;
    let n = params.n();
    if n > limit || n >= 64 {
        return Err(EquilibriumError::EnumerationLimit { n, limit });
    }
    let mut per_node = Vec::with_capacity(n);
    let mut checked = 0;
    for node in params.powers.nodes() {
        let mut never_worse = true;
        let mut strict_profiles = 0;
        let mut first_strict = None;
        for opponents in 0..1u64 << (n - 1) {
            // Spread the n-1 opponent bits around the node's own bit.
            let low = opponents & ((1 << node.0) - 1);
            let high = (opponents >> node.0) << (node.0 + 1);
            let mask = low | high;
            let honest = StrategyProfile::from_mask(GameVariant::Bribery, n, mask);
            let committed = honest.flipped(node);
            let u_honest = payoffs(params, &honest)?.swap_remove(node.0);
            let u_committed = payoffs(params, &committed)?.swap_remove(node.0);
            checked += 1;
            if u_committed < u_honest {
                never_worse = false;
            } else if u_committed > u_honest {
                strict_profiles += 1;
                if first_strict.is_none() {
                    first_strict = Some(DominanceWitness {
                        profile: committed,
                        committed_payoff: u_committed,
                        honest_payoff: u_honest,
                    });
                }
            }
        }
        per_node.push(NodeDominance {
            node,
            never_worse,
            strictly_better_somewhere: strict_profiles > 0,
            strict_profiles,
            first_strict,
        });
    }
    let weakly_dominates = per_node
        .iter()
        .all(|d| d.never_worse && d.strictly_better_somewhere);
    Ok(DominanceReport {
        weakly_dominates,
        per_node,
        opponent_profiles_checked: checked,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CascadeStep {
    /// Nodes committed so far, in the order they joined.
    pub deviating: Vec<NodeId>,
    pub profile: StrategyProfile,
    #[serde(with = "rational::vec_as_str")]
    pub payoffs: Vec<Rational>,
    /// Every committed node earns at least what it earned one step earlier.
    pub deviator_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CascadeTrace {
    pub order: Vec<NodeId>,
    #[serde(with = "rational::vec_as_str")]
    pub initial_payoffs: Vec<Rational>,
    pub steps: Vec<CascadeStep>,
    pub final_profile: StrategyProfile,
}

impl CascadeTrace {
    pub fn all_monotone(&self) -> bool {
        self.steps.iter().all(|s| s.deviator_monotone)
    }

    /// CSV with columns `step, deviating_set, payoff_0..payoff_{n-1}, monotone`.
    /// Row 0 is the all-honest start; the deviating set is `;`-separated.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let n = self.initial_payoffs.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "deviating_set".to_string()];
        header.extend((0..n).map(|i| format!("payoff_{i}")));
        header.push("monotone".into());
        w.write_record(&header)?;

        let mut row = vec!["0".to_string(), String::new()];
        row.extend(self.initial_payoffs.iter().map(rational::encode));
        row.push("true".into());
        w.write_record(&row)?;
        for (i, step) in self.steps.iter().enumerate() {
            let set = step
                .deviating
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(";");
            let mut row = vec![(i + 1).to_string(), set];
            row.extend(step.payoffs.iter().map(rational::encode));
            row.push(step.deviator_monotone.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Starting from all-honest in the bribery game, commits nodes one at a
/// time in `order` and records everyone's payoff after each step.
pub fn find_deviation_cascade(
    params: &GameParams,
    order: &[NodeId],
) -> Result<CascadeTrace, EquilibriumError> {
    require_valid(params)?;
    let n = params.n();
    let distinct: BTreeSet<_> = order.iter().collect();
    if order.len() != n || distinct.len() != n || order.iter().any(|v| v.0 >= n) {
        return Err(EquilibriumError::NotAPermutation {
            order: order.iter().map(|v| v.0).collect(),
            n,
        });
    }

    let mut profile = StrategyProfile::all_honest(GameVariant::Bribery, n);
    let initial_payoffs = payoffs(params, &profile)?;
    let mut previous = initial_payoffs.clone();
    let mut deviating = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    for &node in order {
        profile.set(node, Strategy::Committed)?;
        deviating.push(node);
        let current = payoffs(params, &profile)?;
        let deviator_monotone = deviating.iter().all(|d| current[d.0] >= previous[d.0]);
        steps.push(CascadeStep {
            deviating: deviating.clone(),
            profile: profile.clone(),
            payoffs: current.clone(),
            deviator_monotone,
        });
        previous = current;
    }
    Ok(CascadeTrace {
        order: order.to_vec(),
        initial_payoffs,
        steps,
        final_profile: profile,
    })
}

/// Infimum of compliant minion deposits:
/// `max_i (R_m,i + max(|R_d,i|, |R_d',i|))`. Valid deposits are strictly greater.
pub fn deposit_bound(params: &GameParams) -> Rational {
    params
        .powers
        .nodes()
        .map(|node| {
            let penalty = params.reward_deviant[node.0]
                .abs()
                .max(params.reward_deviant_vs_malicious[node.0].abs());
            &params.reward_malicious[node.0] + penalty
        })
        .max()
        .expect("at least one node")
}

/// A pair of payoffs for which deviating still pays despite the deposit:
/// `y - deposit ≥ x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolatingPair {
    pub node: NodeId,
    /// Payoff when following the contract.
    pub x_slot: RewardSlot,
    #[serde(with = "rational::as_str")]
    pub x: Rational,
    /// Payoff when deviating, before losing the deposit.
    pub y_slot: RewardSlot,
    #[serde(with = "rational::as_str")]
    pub y: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DepositCheck {
    #[serde(with = "rational::as_str")]
    pub deposit: Rational,
    pub sufficient: bool,
    pub violating_pair: Option<ViolatingPair>,
    pub pairs_checked: usize,
}

// Scan order: the followed payoff `x` walks honest-first, the deviating
// payoff `y` walks malicious-first.
const FOLLOW_ORDER: [RewardSlot; 4] = [
    RewardSlot::Honest,
    RewardSlot::Malicious,
    RewardSlot::Deviant,
    RewardSlot::DeviantVsMalicious,
];
const DEVIATE_ORDER: [RewardSlot; 4] = [
    RewardSlot::Malicious,
    RewardSlot::Honest,
    RewardSlot::Deviant,
    RewardSlot::DeviantVsMalicious,
];

/// Scans all 16 `(x, y)` reward pairs of every node and reports whether
/// `y - deposit < x` always holds.
pub fn verify_deposit_bound(params: &GameParams, deposit: &Rational) -> DepositCheck {
    let mut pairs_checked = 0;
    let mut violating_pair = None;
    for node in params.powers.nodes() {
        for x_slot in FOLLOW_ORDER {
            for y_slot in DEVIATE_ORDER {
                pairs_checked += 1;
                let x = params.reward(x_slot, node);
                let y = params.reward(y_slot, node);
                if violating_pair.is_none() && !(y - deposit < *x) {
                    violating_pair = Some(ViolatingPair {
                        node,
                        x_slot,
                        x: x.clone(),
                        y_slot,
                        y: y.clone(),
                    });
                }
            }
        }
    }
    DepositCheck {
        deposit: deposit.clone(),
        sufficient: violating_pair.is_none(),
        violating_pair,
        pairs_checked,
    }
}

/// Whether some node's largest gain from deviating, `R_m - min(R_d, R_d')`,
/// equals the bound, so a deposit equal to the bound is not enough.
pub fn deposit_bound_attained(params: &GameParams) -> bool {
    let bound = deposit_bound(params);
    params.powers.nodes().any(|node| {
        let worst = params.reward_deviant[node.0]
            .clone()
            .min(params.reward_deviant_vs_malicious[node.0].clone());
        &params.reward_malicious[node.0] - worst == bound
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    /// All-honest is a strict Nash equilibrium without collusion.
    #[serde(rename = "T1")]
    HonestStrictWithoutCollusion,
    /// Deposits above the bound remove every incentive to disobey the contract.
    #[serde(rename = "T2")]
    DepositDeters,
    /// Committing never pays less than honesty, for any deviating subset,
    /// so all-honest is not strict with the contract.
    #[serde(rename = "T3")]
    CommitmentNeverHurts,
    /// All-committed is a strict Nash equilibrium with the contract.
    #[serde(rename = "T4")]
    CommittedStrict,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::HonestStrictWithoutCollusion,
        Theorem::DepositDeters,
        Theorem::CommitmentNeverHurts,
        Theorem::CommittedStrict,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Theorem::HonestStrictWithoutCollusion => "T1",
            Theorem::DepositDeters => "T2",
            Theorem::CommitmentNeverHurts => "T3",
            Theorem::CommittedStrict => "T4",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Theorem::HonestStrictWithoutCollusion => seed::streams::THEOREM_T1,
            Theorem::DepositDeters => seed::streams::THEOREM_T2,
            Theorem::CommitmentNeverHurts => seed::streams::THEOREM_T3,
            Theorem::CommittedStrict => seed::streams::THEOREM_T4,
        }
    }

    /// Runs the claim on one instance. `None` means it held.
    pub fn check(self, params: &GameParams) -> Result<Option<Witness>, GameError> {
        match self {
            Theorem::HonestStrictWithoutCollusion => {
                let profile = StrategyProfile::all_honest(GameVariant::NoCollusion, params.n());
                Ok(is_strict_nash(params, &profile)?
                    .counterexample
                    .map(Witness::ProfitableDeviation))
            }
            Theorem::DepositDeters => Ok(check_deposit_claim(params)),
            Theorem::CommitmentNeverHurts => check_commitment_never_hurts(params),
            Theorem::CommittedStrict => {
                let profile = StrategyProfile::all_opposing(GameVariant::Bribery, params.n());
                Ok(is_strict_nash(params, &profile)?
                    .counterexample
                    .map(Witness::ProfitableDeviation))
            }
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Theorem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(Theorem::HonestStrictWithoutCollusion),
            "T2" => Ok(Theorem::DepositDeters),
            "T3" => Ok(Theorem::CommitmentNeverHurts),
            "T4" => Ok(Theorem::CommittedStrict),
            other => Err(format!("unknown theorem `{other}`")),
        }
    }
}

/// Why a claim failed on a particular instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    ProfitableDeviation(Deviation),
    DeviatorWorseOff {
        deviators: Vec<NodeId>,
        node: NodeId,
        #[serde(with = "rational::as_str")]
        payoff: Rational,
        #[serde(with = "rational::as_str")]
        honest_reward: Rational,
    },
    HonestStrictWithBribery,
    DepositInsufficient(DepositCheck),
    BoundTightnessMismatch {
        attained: bool,
        check_at_bound: DepositCheck,
    },
}

fn check_deposit_claim(params: &GameParams) -> Option<Witness> {
    let bound = deposit_bound(params);
    let above = verify_deposit_bound(params, &(&bound + Rational::one()));
    if !above.sufficient {
        return Some(Witness::DepositInsufficient(above));
    }
    let attained = deposit_bound_attained(params);
    let at_bound = verify_deposit_bound(params, &bound);
    if at_bound.sufficient == attained {
        return Some(Witness::BoundTightnessMismatch {
            attained,
            check_at_bound: at_bound,
        });
    }
    None
}

fn check_commitment_never_hurts(params: &GameParams) -> Result<Option<Witness>, GameError> {
    let n = params.n();
    for mask in 1..1u64 << n {
        let profile = StrategyProfile::from_mask(GameVariant::Bribery, n, mask);
        let pay = payoffs(params, &profile)?;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            if pay[i] < params.reward_honest[i] {
                return Ok(Some(Witness::DeviatorWorseOff {
                    deviators: (0..n).filter(|j| mask >> j & 1 == 1).map(NodeId).collect(),
                    node: NodeId(i),
                    payoff: pay[i].clone(),
                    honest_reward: params.reward_honest[i].clone(),
                }));
            }
        }
    }
    let honest = StrategyProfile::all_honest(GameVariant::Bribery, n);
    if is_strict_nash(params, &honest)?.is_strict_nash {
        return Ok(Some(Witness::HonestStrictWithBribery));
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub instances: usize,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub instance: usize,
    pub params: GameParams,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub theorem: Theorem,
    pub seed: u64,
    pub instances_tested: usize,
    pub failures: usize,
    pub all_passed: bool,
    pub first_failure: Option<Failure>,
}

/// Draws `instances` random valid parameter sets and checks `theorem` on
/// each. Instance `i` uses its own RNG stream derived from `(seed, i)`, so
/// the report does not depend on execution mode.
pub fn verify_theorem(
    theorem: Theorem,
    config: &VerifyConfig,
) -> Result<VerificationReport, EquilibriumError> {
    let gen = &config.generator;
    if gen.n_min < VERIFY_MIN_NODES || gen.n_max > VERIFY_MAX_NODES || gen.n_min > gen.n_max {
        return Err(EquilibriumError::NodeRange {
            min: gen.n_min,
            max: gen.n_max,
        });
    }
    if config.instances == 0 {
        return Err(EquilibriumError::NoInstances);
    }
    let outcomes = config.execution.map_indexed(config.instances, |i| {
        let mut rng = seed::rng_for(config.seed, theorem.stream(), i as u64);
        let params = random_params(&mut rng, gen);
        theorem
            .check(&params)
            .map(|witness| witness.map(|w| (params, w)))
    });

    let mut failures = 0;
    let mut first_failure = None;
    for (instance, outcome) in outcomes.into_iter().enumerate() {
        if let Some((params, witness)) = outcome? {
            failures += 1;
            if first_failure.is_none() {
                first_failure = Some(Failure {
                    instance,
                    params,
                    witness,
                });
            }
        }
    }
    Ok(VerificationReport {
        theorem,
        seed: config.seed,
        instances_tested: config.instances,
        failures,
        all_passed: failures == 0,
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::p3;
    use crate::rational::{int, ratio};

    fn ids(v: &[usize]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn honest_is_strict_without_collusion() {
        let params = p3();
        let report = is_strict_nash(
            &params,
            &StrategyProfile::all_honest(GameVariant::NoCollusion, 3),
        )
        .unwrap();
        assert!(report.is_strict_nash);
        assert!(report.counterexample.is_none());
        assert_eq!(report.profiles_checked, 4);
    }

    #[test]
    fn honest_is_not_strict_with_bribery() {
        let params = p3();
        let report = is_strict_nash(
            &params,
            &StrategyProfile::all_honest(GameVariant::Bribery, 3),
        )
        .unwrap();
        assert!(!report.is_strict_nash);
        let dev = report.counterexample.unwrap();
        assert_eq!(dev.to, Strategy::Committed);
        assert_eq!((dev.payoff_before, dev.payoff_after), (int(2), int(2)));
    }

    #[test]
    fn committed_is_strict_with_bribery() {
        let params = p3();
        let report = is_strict_nash(
            &params,
            &StrategyProfile::all_opposing(GameVariant::Bribery, 3),
        )
        .unwrap();
        assert!(report.is_strict_nash);
    }

    #[test]
    fn dominance_on_p3() {
        let params = p3();
        let report = check_weak_dominance(&params, DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert!(report.weakly_dominates);
        assert_eq!(report.opponent_profiles_checked, 3 * 4);
        // Others both committed: honest node 0 gets R_d' = -3, committed gets 5.
        let both = StrategyProfile::all_opposing(GameVariant::Bribery, 3);
        let with_zero_honest = both.flipped(NodeId(0));
        assert_eq!(payoffs(&params, &both).unwrap()[0], int(5));
        assert_eq!(payoffs(&params, &with_zero_honest).unwrap()[0], int(-3));
        assert!(report.per_node.iter().all(|d| d.strict_profiles >= 1));
    }

    #[test]
    fn dominance_with_smaller_malicious_reward() {
        let mut params = p3();
        params.reward_malicious = vec![int(3); 3];
        assert!(
            check_weak_dominance(&params, DEFAULT_ENUMERATION_LIMIT)
                .unwrap()
                .weakly_dominates
        );
    }

    #[test]
    fn dominance_rejects_invalid_and_oversized() {
        let mut params = p3();
        params.powers =
            crate::game::PowerDistribution::new_unchecked(vec![ratio(9, 20), ratio(11, 20)]);
        assert!(matches!(
            check_weak_dominance(&params, DEFAULT_ENUMERATION_LIMIT),
            Err(EquilibriumError::Game(GameError::InvalidParams(_)))
        ));
        assert!(matches!(
            check_weak_dominance(&p3(), 2),
            Err(EquilibriumError::EnumerationLimit { n: 3, limit: 2 })
        ));
    }

    #[test]
    fn cascade_reverse_order() {
        let trace = find_deviation_cascade(&p3(), &ids(&[2, 1, 0])).unwrap();
        assert_eq!(trace.initial_payoffs, vec![int(2); 3]);
        let expected = [
            vec![int(2), int(2), int(2)],
            vec![int(-3), int(5), int(5)],
            vec![int(5), int(5), int(5)],
        ];
        for (step, want) in trace.steps.iter().zip(expected) {
            assert_eq!(step.payoffs, want);
            assert!(step.deviator_monotone);
        }
        assert_eq!(
            trace.final_profile,
            StrategyProfile::all_opposing(GameVariant::Bribery, 3)
        );
    }

    #[test]
    fn cascade_forward_order() {
        let trace = find_deviation_cascade(&p3(), &ids(&[0, 1, 2])).unwrap();
        assert_eq!(trace.steps[0].payoffs, vec![int(2); 3]);
        assert_eq!(trace.steps[1].payoffs, vec![int(5), int(5), int(-3)]);
        assert_eq!(trace.steps[2].payoffs, vec![int(5); 3]);
        assert_eq!(trace.steps[1].deviating, ids(&[0, 1]));
    }

    #[test]
    fn cascade_rejects_non_permutations() {
        for bad in [&[0, 1][..], &[0, 0, 1], &[0, 1, 3]] {
            assert!(matches!(
                find_deviation_cascade(&p3(), &ids(bad)),
                Err(EquilibriumError::NotAPermutation { .. })
            ));
        }
    }

    #[test]
    fn cascade_csv_layout() {
        let trace = find_deviation_cascade(&p3(), &ids(&[2, 1, 0])).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "step,deviating_set,payoff_0,payoff_1,payoff_2,monotone"
        );
        assert_eq!(lines[3], "2,2;1,-3,5,5,true");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn deposit_bound_values() {
        assert_eq!(deposit_bound(&p3()), int(8));

        let zero = GameParams::uniform(
            vec![ratio(2, 5), ratio(7, 20), ratio(1, 4)],
            ratio(1, 2),
            ratio(1, 2),
            int(0),
            int(1),
            int(0),
        )
        .unwrap();
        assert_eq!(deposit_bound(&zero), int(1));

        let mut hetero = p3();
        hetero.reward_malicious[0] = int(10);
        hetero.reward_deviant_vs_malicious[0] = int(-4);
        assert_eq!(deposit_bound(&hetero), int(14));
    }

    #[test]
    fn deposit_scan() {
        let params = p3();
        let above = verify_deposit_bound(&params, &int(9));
        assert!(above.sufficient);
        assert_eq!(above.pairs_checked, 48);

        let at = verify_deposit_bound(&params, &int(8));
        assert!(!at.sufficient);
        let pair = at.violating_pair.unwrap();
        assert_eq!((pair.y, pair.x), (int(5), int(-3)));
        assert!(deposit_bound_attained(&params));

        let zero = verify_deposit_bound(&params, &int(0));
        let pair = zero.violating_pair.unwrap();
        assert_eq!((pair.y, pair.x), (int(5), int(2)));
    }

    #[test]
    fn theorem_checks_on_p3() {
        for theorem in Theorem::ALL {
            assert_eq!(theorem.check(&p3()).unwrap(), None, "{theorem}");
        }
    }

    #[test]
    fn verify_rejects_bad_ranges() {
        let mut config = VerifyConfig {
            seed: 1,
            instances: 10,
            generator: GeneratorConfig::default(),
            execution: Execution::Sequential,
        };
        config.generator.n_max = 9;
        assert!(verify_theorem(Theorem::CommittedStrict, &config).is_err());
        config.generator.n_max = 8;
        config.instances = 0;
        assert!(matches!(
            verify_theorem(Theorem::CommittedStrict, &config),
            Err(EquilibriumError::NoInstances)
        ));
    }

    #[test]
    fn corrupted_generator_breaks_first_claim() {
        let config = VerifyConfig {
            seed: 3,
            instances: 50,
            generator: GeneratorConfig {
                corrupt_deviant_reward: true,
                ..Default::default()
            },
            execution: Execution::Sequential,
        };
        let report = verify_theorem(Theorem::HonestStrictWithoutCollusion, &config).unwrap();
        assert!(!report.all_passed);
        assert!(matches!(
            report.first_failure.unwrap().witness,
            Witness::ProfitableDeviation(_)
        ));
    }
}
