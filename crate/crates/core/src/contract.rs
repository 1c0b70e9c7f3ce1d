//! The bribery contract as a replayable state machine.
//!
//! The magnate opens the contract with a deposit `D_m` and an expiration
//! time. Nodes commit by locking a deposit `D_i`; once the committed power
//! strictly exceeds `t` the contract orders the malicious protocol and stops
//! accepting commitments. Settlement consults an oracle report:
//!
//! * attack succeeded and the minion ran the malicious protocol: `v_i·D_m + D_i`
//! * malicious protocol ordered but the minion ran the honest one: deposit burned
//! * attack not successful and the contract expired: `D_i` refunded
//!
//! Any share of `D_m` not paid out returns to the magnate as residual.
//! Transitions take `&self` and return a new state.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{NodeId, PowerDistribution};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Honest,
    Malicious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Open,
    AttackOrdered,
    Settled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractConfig {
    /// Logical time after which unsuccessful commitments are refunded.
    pub expiration: u64,
    #[serde(with = "rational::as_str")]
    pub magnate_deposit: Rational,
    pub malicious_protocol_id: String,
    #[serde(with = "rational::as_str")]
    pub threshold: Rational,
    pub powers: PowerDistribution,
}

/// What the oracle observed on the target chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub attack_successful: bool,
    /// Keyed by node index; JSON object keys are decimal strings.
    #[serde(with = "node_keys")]
    pub executed_protocol: BTreeMap<NodeId, Protocol>,
}

// Object keys arrive as strings, and internally tagged events buffer their
// content, so integer keys have to be parsed by hand.
mod node_keys {
    use std::collections::BTreeMap;

    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    use super::Protocol;
    use crate::game::NodeId;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<NodeId, Protocol>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(k, v)| (k.0.to_string(), *v))
            .collect::<BTreeMap<String, Protocol>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<NodeId, Protocol>, D::Error> {
        BTreeMap::<String, Protocol>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|n| (NodeId(n), v))
                    .map_err(|_| D::Error::custom(format!("bad node key `{k}`")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("invalid contract config: {0}")]
    InvalidConfig(String),
    #[error("node {0} is not part of the network")]
    UnknownNode(NodeId),
    #[error("node {0} already committed")]
    DoubleCommit(NodeId),
    #[error("commit at time {clock} after expiration {expiration}")]
    Expired { clock: u64, expiration: u64 },
    #[error("commitments are closed once the attack is ordered")]
    AttackAlreadyOrdered,
    #[error("deposit {0} is negative")]
    NegativeDeposit(String),
    #[error("node {0} never committed")]
    NotCommitted(NodeId),
    #[error("node {0} has already been settled")]
    AlreadySettled(NodeId),
    #[error("oracle report does not cover node {0}")]
    OracleMissingNode(NodeId),
    #[error("oracle reports a successful attack that was never ordered")]
    OracleInconsistent,
    #[error("clock cannot move back from {from} to {to}")]
    TimeRegression { from: u64, to: u64 },
    #[error("minions {0:?} are not settled yet")]
    Unsettled(Vec<NodeId>),
}

/// Result of one settlement request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Settlement {
    Rewarded {
        #[serde(with = "rational::as_str")]
        share: Rational,
        #[serde(with = "rational::as_str")]
        payout: Rational,
    },
    Refunded {
        #[serde(with = "rational::as_str")]
        payout: Rational,
    },
    Burned {
        #[serde(with = "rational::as_str")]
        deposit: Rational,
    },
    /// Attack pending and not expired; nothing recorded.
    NotYetSettleable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractState {
    pub config: ContractConfig,
    pub phase: Phase,
    pub order: Protocol,
    #[serde(with = "rational::map_as_str")]
    pub minions: BTreeMap<NodeId, Rational>,
    pub distributed: BTreeSet<NodeId>,
    pub burned: BTreeSet<NodeId>,
    /// Amount paid to each settled minion (zero for burned ones).
    #[serde(with = "rational::map_as_str")]
    pub ledger: BTreeMap<NodeId, Rational>,
    /// Sum of the `v_i·D_m` shares paid so far.
    #[serde(with = "rational::as_str")]
    pub shares_paid: Rational,
    pub clock: u64,
}

pub fn contract_init(config: ContractConfig) -> Result<ContractState, ContractError> {
    if !config.magnate_deposit.is_positive() {
        return Err(ContractError::InvalidConfig(format!(
            "magnate deposit {} must be positive",
            config.magnate_deposit
        )));
    }
    if config.expiration == 0 {
        return Err(ContractError::InvalidConfig(
            "expiration time must be positive".into(),
        ));
    }
    if config.powers.is_empty() {
        return Err(ContractError::InvalidConfig("no nodes".into()));
    }
    Ok(ContractState {
        config,
        phase: Phase::Open,
        order: Protocol::Honest,
        minions: BTreeMap::new(),
        distributed: BTreeSet::new(),
        burned: BTreeSet::new(),
        ledger: BTreeMap::new(),
        shares_paid: Rational::zero(),
        clock: 0,
    })
}

impl ContractState {
    pub fn committed_power(&self) -> Rational {
        self.config.powers.sum_over(self.minions.keys())
    }

    pub fn is_settled(&self, node: NodeId) -> bool {
        self.distributed.contains(&node) || self.burned.contains(&node)
    }

    pub fn unsettled(&self) -> Vec<NodeId> {
        self.minions
            .keys()
            .copied()
            .filter(|n| !self.is_settled(*n))
            .collect()
    }

    /// Records `node`'s commitment and deposit; orders the attack when the
    /// committed power strictly exceeds `t`.
    pub fn commit(&self, node: NodeId, deposit: Rational) -> Result<ContractState, ContractError> {
        if node.0 >= self.config.powers.len() {
            return Err(ContractError::UnknownNode(node));
        }
        if self.minions.contains_key(&node) {
            return Err(ContractError::DoubleCommit(node));
        }
        if self.order == Protocol::Malicious {
            return Err(ContractError::AttackAlreadyOrdered);
        }
        if self.clock >= self.config.expiration {
            return Err(ContractError::Expired {
                clock: self.clock,
                expiration: self.config.expiration,
            });
        }
        if deposit.is_negative() {
            return Err(ContractError::NegativeDeposit(rational::encode(&deposit)));
        }
        let mut next = self.clone();
        next.minions.insert(node, deposit);
        if next.committed_power() > next.config.threshold {
            next.phase = Phase::AttackOrdered;
            next.order = Protocol::Malicious;
        }
        Ok(next)
    }

    pub fn advance_clock(&self, to: u64) -> Result<ContractState, ContractError> {
        if to < self.clock {
            return Err(ContractError::TimeRegression {
                from: self.clock,
                to,
            });
        }
        let mut next = self.clone();
        next.clock = to;
        next.close_if_settled();
        Ok(next)
    }

    fn close_if_settled(&mut self) {
        let closed = self.phase == Phase::AttackOrdered || self.clock > self.config.expiration;
        if closed && self.unsettled().is_empty() {
            self.phase = Phase::Settled;
        }
    }

    /// Settles `node` against `oracle`. When no rule applies yet the state
    /// is returned unchanged with [`Settlement::NotYetSettleable`].
    pub fn distribute(
        &self,
        node: NodeId,
        oracle: &OracleReport,
    ) -> Result<(ContractState, Settlement), ContractError> {
        let deposit = self
            .minions
            .get(&node)
            .ok_or(ContractError::NotCommitted(node))?;
        if self.is_settled(node) {
            return Err(ContractError::AlreadySettled(node));
        }
        if oracle.attack_successful && self.order != Protocol::Malicious {
            return Err(ContractError::OracleInconsistent);
        }
        let executed = *oracle
            .executed_protocol
            .get(&node)
            .ok_or(ContractError::OracleMissingNode(node))?;

        let ordered_attack = self.order == Protocol::Malicious;
        let settlement =
            if ordered_attack && oracle.attack_successful && executed == Protocol::Malicious {
                let share = self.config.powers.power(node) * &self.config.magnate_deposit;
                let payout = &share + deposit;
                Settlement::Rewarded { share, payout }
            } else if ordered_attack && executed == Protocol::Honest {
                Settlement::Burned {
                    deposit: deposit.clone(),
                }
            } else if !oracle.attack_successful && self.clock > self.config.expiration {
                // Also covers an ordered attack that failed: minions who obeyed
                // get their deposit back.
                Settlement::Refunded {
                    payout: deposit.clone(),
                }
            } else {
                return Ok((self.clone(), Settlement::NotYetSettleable));
            };

        let mut next = self.clone();
        match &settlement {
            Settlement::Rewarded { share, payout } => {
                next.shares_paid += share;
                next.ledger.insert(node, payout.clone());
                next.distributed.insert(node);
            }
            Settlement::Refunded { payout } => {
                next.ledger.insert(node, payout.clone());
                next.distributed.insert(node);
            }
            Settlement::Burned { .. } => {
                next.ledger.insert(node, Rational::zero());
                next.burned.insert(node);
            }
            Settlement::NotYetSettleable => unreachable!(),
        }
        next.close_if_settled();
        Ok((next, settlement))
    }
}

/// Free-function forms of the transitions.
pub fn contract_commit(
    state: &ContractState,
    node: NodeId,
    deposit: Rational,
) -> Result<ContractState, ContractError> {
    state.commit(node, deposit)
}

pub fn advance_clock(state: &ContractState, to: u64) -> Result<ContractState, ContractError> {
    state.advance_clock(to)
}

pub fn contract_distribute(
    state: &ContractState,
    node: NodeId,
    oracle: &OracleReport,
) -> Result<(ContractState, Settlement), ContractError> {
    state.distribute(node, oracle)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettlementSummary {
    #[serde(with = "rational::as_str")]
    pub magnate_deposit: Rational,
    #[serde(with = "rational::map_as_str")]
    pub deposits: BTreeMap<NodeId, Rational>,
    #[serde(with = "rational::map_as_str")]
    pub payouts: BTreeMap<NodeId, Rational>,
    /// Burned deposits, by node.
    #[serde(with = "rational::map_as_str")]
    pub burned: BTreeMap<NodeId, Rational>,
    #[serde(with = "rational::as_str")]
    pub total_paid: Rational,
    #[serde(with = "rational::as_str")]
    pub total_burned: Rational,
    /// Unpaid share of `D_m`, returned to the magnate.
    #[serde(with = "rational::as_str")]
    pub residual: Rational,
    /// `D_m + Σ D_i`.
    #[serde(with = "rational::as_str")]
    pub total_in: Rational,
    /// `total_paid + total_burned + residual == total_in`.
    pub conserved: bool,
}

impl SettlementSummary {
    /// Columns `party, deposit, outcome, payout, burned`; the last row is the
    /// magnate with its residual.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["party", "deposit", "outcome", "payout", "burned"])?;
        for (node, deposit) in &self.deposits {
            let burned = self.burned.get(node);
            let outcome = if burned.is_some() { "burned" } else { "paid" };
            w.write_record([
                node.to_string(),
                rational::encode(deposit),
                outcome.to_string(),
                rational::encode(&self.payouts[node]),
                burned.map(rational::encode).unwrap_or_else(|| "0".into()),
            ])?;
        }
        w.write_record([
            "magnate".to_string(),
            rational::encode(&self.magnate_deposit),
            "residual".to_string(),
            rational::encode(&self.residual),
            "0".to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Totals once every minion is settled.
pub fn settlement_summary(state: &ContractState) -> Result<SettlementSummary, ContractError> {
    let unsettled = state.unsettled();
    if !unsettled.is_empty() {
        return Err(ContractError::Unsettled(unsettled));
    }
    let burned: BTreeMap<_, _> = state
        .burned
        .iter()
        .map(|n| (*n, state.minions[n].clone()))
        .collect();
    let sum = |it: &mut dyn Iterator<Item = &Rational>| it.fold(Rational::zero(), |a, v| a + v);
    let total_paid = sum(&mut state.ledger.values());
    let total_burned = sum(&mut burned.values());
    let total_deposits = sum(&mut state.minions.values());
    let residual = &state.config.magnate_deposit - &state.shares_paid;
    let total_in = &state.config.magnate_deposit + total_deposits;
    let conserved = &total_paid + &total_burned + &residual == total_in;
    Ok(SettlementSummary {
        magnate_deposit: state.config.magnate_deposit.clone(),
        deposits: state.minions.clone(),
        payouts: state.ledger.clone(),
        burned,
        total_paid,
        total_burned,
        residual,
        total_in,
        conserved,
    })
}

/// One line of a contract event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ContractEvent {
    Init(ContractConfig),
    Commit {
        node: NodeId,
        #[serde(with = "rational::as_str")]
        deposit: Rational,
    },
    AdvanceClock {
        to: u64,
    },
    OracleReport(OracleReport),
    Distribute {
        node: NodeId,
    },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Contract { line: usize, source: ContractError },
    #[error("line {line}: {message}")]
    Sequence { line: usize, message: &'static str },
    #[error("event log is empty")]
    Empty,
}

/// Parses a JSON-lines event log; blank lines are skipped.
pub fn parse_event_log(text: &str) -> Result<Vec<(usize, ContractEvent)>, ReplayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|e| (i + 1, e))
                .map_err(|source| ReplayError::Parse {
                    line: i + 1,
                    source,
                })
        })
        .collect()
}

pub fn write_event_log(events: &[ContractEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettlementRecord {
    pub node: NodeId,
    #[serde(flatten)]
    pub settlement: Settlement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub state: ContractState,
    pub settlements: Vec<SettlementRecord>,
}

/// Replays numbered events. The first must be `init`; `distribute` uses the
/// most recent oracle report.
pub fn replay(events: &[(usize, ContractEvent)]) -> Result<Replay, ReplayError> {
    let mut iter = events.iter();
    let (first_line, first) = iter.next().ok_or(ReplayError::Empty)?;
    let ContractEvent::Init(config) = first else {
        return Err(ReplayError::Sequence {
            line: *first_line,
            message: "first event must be init",
        });
    };
    let mut state = contract_init(config.clone()).map_err(|source| ReplayError::Contract {
        line: *first_line,
        source,
    })?;
    let mut oracle: Option<&OracleReport> = None;
    let mut settlements = Vec::new();
    for (line, event) in iter {
        let line = *line;
        let wrap = |source| ReplayError::Contract { line, source };
        state = match event {
            ContractEvent::Init(_) => {
                return Err(ReplayError::Sequence {
                    line,
                    message: "init may only appear once",
                })
            }
            ContractEvent::Commit { node, deposit } => {
                state.commit(*node, deposit.clone()).map_err(wrap)?
            }
            ContractEvent::AdvanceClock { to } => state.advance_clock(*to).map_err(wrap)?,
            ContractEvent::OracleReport(report) => {
                oracle = Some(report);
                state
            }
            ContractEvent::Distribute { node } => {
                let report = oracle.ok_or(ReplayError::Sequence {
                    line,
                    message: "distribute before any oracle report",
                })?;
                let (next, settlement) = state.distribute(*node, report).map_err(wrap)?;
                settlements.push(SettlementRecord {
                    node: *node,
                    settlement,
                });
                next
            }
        };
    }
    Ok(Replay { state, settlements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn config() -> ContractConfig {
        ContractConfig {
            expiration: 100,
            magnate_deposit: int(9),
            malicious_protocol_id: "double-spend".into(),
            threshold: ratio(1, 2),
            powers: PowerDistribution::new(vec![ratio(2, 5), ratio(7, 20), ratio(1, 4)]).unwrap(),
        }
    }

    fn oracle(success: bool, executed: &[(usize, Protocol)]) -> OracleReport {
        OracleReport {
            attack_successful: success,
            executed_protocol: executed.iter().map(|(n, p)| (NodeId(*n), *p)).collect(),
        }
    }

    #[test]
    fn init_state() {
        let s = contract_init(config()).unwrap();
        assert_eq!(s.phase, Phase::Open);
        assert_eq!(s.order, Protocol::Honest);
        assert!(s.minions.is_empty());
        assert_eq!(s.clock, 0);
    }

    #[test]
    fn init_rejects_bad_config() {
        let mut c = config();
        c.magnate_deposit = int(0);
        assert!(matches!(
            contract_init(c),
            Err(ContractError::InvalidConfig(_))
        ));
        let mut c = config();
        c.expiration = 0;
        assert!(matches!(
            contract_init(c),
            Err(ContractError::InvalidConfig(_))
        ));
    }

    #[test]
    fn commits_trigger_attack_above_threshold() {
        let s = contract_init(config()).unwrap();
        let s = s.commit(NodeId(0), int(9)).unwrap();
        assert_eq!((s.phase, s.order), (Phase::Open, Protocol::Honest));
        let s = s.commit(NodeId(1), int(9)).unwrap();
        assert_eq!(
            (s.phase, s.order),
            (Phase::AttackOrdered, Protocol::Malicious)
        );
        assert_eq!(s.committed_power(), ratio(3, 4));
        assert_eq!(
            s.commit(NodeId(2), int(9)),
            Err(ContractError::AttackAlreadyOrdered)
        );
    }

    #[test]
    fn commit_errors() {
        let s = contract_init(config())
            .unwrap()
            .commit(NodeId(0), int(9))
            .unwrap();
        assert_eq!(
            s.commit(NodeId(0), int(9)),
            Err(ContractError::DoubleCommit(NodeId(0)))
        );
        assert_eq!(
            s.commit(NodeId(5), int(9)),
            Err(ContractError::UnknownNode(NodeId(5)))
        );
        let late = s.advance_clock(100).unwrap();
        assert!(matches!(
            late.commit(NodeId(1), int(9)),
            Err(ContractError::Expired { .. })
        ));
        assert!(matches!(
            s.commit(NodeId(1), int(-1)),
            Err(ContractError::NegativeDeposit(_))
        ));
    }

    #[test]
    fn clock() {
        let s = contract_init(config()).unwrap();
        let s = s.advance_clock(50).unwrap();
        assert_eq!(s.clock, 50);
        assert_eq!(s.advance_clock(50).unwrap(), s);
        assert_eq!(
            s.advance_clock(10),
            Err(ContractError::TimeRegression { from: 50, to: 10 })
        );
    }

    #[test]
    fn successful_attack_pays_share_plus_deposit() {
        let s = contract_init(config())
            .unwrap()
            .commit(NodeId(0), int(9))
            .unwrap()
            .commit(NodeId(1), int(9))
            .unwrap();
        let report = oracle(true, &[(0, Protocol::Malicious), (1, Protocol::Malicious)]);
        let (s, out) = s.distribute(NodeId(0), &report).unwrap();
        assert_eq!(
            out,
            Settlement::Rewarded {
                share: ratio(18, 5),
                payout: ratio(63, 5)
            }
        );
        assert_eq!(
            s.distribute(NodeId(0), &report),
            Err(ContractError::AlreadySettled(NodeId(0)))
        );
        let (s, _) = s.distribute(NodeId(1), &report).unwrap();
        assert_eq!(s.phase, Phase::Settled);

        let summary = settlement_summary(&s).unwrap();
        assert_eq!(summary.residual, ratio(9, 4));
        assert_eq!(summary.total_paid, ratio(18, 5) + ratio(63, 20) + int(18));
        assert!(summary.conserved);
    }

    #[test]
    fn expired_commitment_is_refunded() {
        let s = contract_init(config())
            .unwrap()
            .commit(NodeId(0), int(9))
            .unwrap();
        let report = oracle(false, &[(0, Protocol::Honest)]);
        let (pending, out) = s.distribute(NodeId(0), &report).unwrap();
        assert_eq!(out, Settlement::NotYetSettleable);
        assert_eq!(pending, s);
        let s = s.advance_clock(101).unwrap();
        let (s, out) = s.distribute(NodeId(0), &report).unwrap();
        assert_eq!(out, Settlement::Refunded { payout: int(9) });
        let summary = settlement_summary(&s).unwrap();
        assert_eq!(summary.residual, int(9));
        assert!(summary.conserved);
    }

    #[test]
    fn defection_burns_the_deposit() {
        let s = contract_init(config())
            .unwrap()
            .commit(NodeId(0), int(9))
            .unwrap()
            .commit(NodeId(1), int(9))
            .unwrap();
        let report = oracle(true, &[(0, Protocol::Honest), (1, Protocol::Malicious)]);
        let (s, out) = s.distribute(NodeId(0), &report).unwrap();
        assert_eq!(out, Settlement::Burned { deposit: int(9) });
        assert!(s.burned.contains(&NodeId(0)));
        assert_eq!(s.ledger[&NodeId(0)], int(0));
        assert!(matches!(
            settlement_summary(&s),
            Err(ContractError::Unsettled(_))
        ));
        let (s, _) = s.distribute(NodeId(1), &report).unwrap();
        let summary = settlement_summary(&s).unwrap();
        assert_eq!(summary.total_burned, int(9));
        assert!(summary.conserved);
    }

    #[test]
    fn empty_contract_returns_everything() {
        let s = contract_init(config()).unwrap().advance_clock(101).unwrap();
        let summary = settlement_summary(&s).unwrap();
        assert_eq!(summary.residual, int(9));
        assert!(summary.conserved);
    }

    #[test]
    fn distribute_errors() {
        let s = contract_init(config())
            .unwrap()
            .commit(NodeId(0), int(9))
            .unwrap();
        assert_eq!(
            s.distribute(NodeId(1), &oracle(false, &[])),
            Err(ContractError::NotCommitted(NodeId(1)))
        );
        assert_eq!(
            s.distribute(NodeId(0), &oracle(false, &[])),
            Err(ContractError::OracleMissingNode(NodeId(0)))
        );
        assert_eq!(
            s.distribute(NodeId(0), &oracle(true, &[(0, Protocol::Malicious)])),
            Err(ContractError::OracleInconsistent)
        );
    }

    #[test]
    fn replay_from_log() {
        let events = vec![
            ContractEvent::Init(config()),
            ContractEvent::Commit {
                node: NodeId(0),
                deposit: int(9),
            },
            ContractEvent::Commit {
                node: NodeId(1),
                deposit: int(9),
            },
            ContractEvent::AdvanceClock { to: 20 },
            ContractEvent::OracleReport(oracle(
                true,
                &[(0, Protocol::Malicious), (1, Protocol::Malicious)],
            )),
            ContractEvent::Distribute { node: NodeId(0) },
            ContractEvent::Distribute { node: NodeId(1) },
        ];
        let text = write_event_log(&events);
        assert!(text.starts_with(r#"{"event":"init","expiration":100,"magnate_deposit":"9""#));
        let parsed = parse_event_log(&text).unwrap();
        let a = replay(&parsed).unwrap();
        let b = replay(&parsed).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.state.phase, Phase::Settled);
        assert_eq!(a.settlements.len(), 2);
    }

    #[test]
    fn replay_errors_carry_line_numbers() {
        let text = format!(
            "{}\n{}\n",
            serde_json::to_string(&ContractEvent::Init(config())).unwrap(),
            r#"{"event":"distribute","node":0}"#
        );
        let err = replay(&parse_event_log(&text).unwrap()).unwrap_err();
        assert!(err.to_string().starts_with("line 2"));
        let err = parse_event_log("{\"event\":\"bogus\"}").unwrap_err();
        assert!(err.to_string().starts_with("line 1"));
    }
}
