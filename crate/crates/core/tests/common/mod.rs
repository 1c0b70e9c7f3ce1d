//! Shared fixtures and independent reference implementations for the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use bribery_sim::contract::{
    contract_init, ContractConfig, ContractError, ContractEvent, ContractState, OracleReport,
    Protocol, Settlement,
};
use bribery_sim::game::GameParams;
use bribery_sim::generate::{random_params, GeneratorConfig};
use bribery_sim::rational::{int, ratio};
use bribery_sim::{NodeId, Rational};

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
    .expect("P3 is valid")
}

/// Reference payoff without collusion, written straight from the case
/// table. `honest[i]` is true when node i plays honestly.
pub fn reference_no_collusion(params: &GameParams, honest: &[bool], node: usize) -> Rational {
    let (v_h, v_m) = split_power(params, honest);
    let t = &params.threshold;
    if honest[node] && v_h > *t {
        params.reward_honest[node].clone()
    } else if honest[node] && v_m > *t {
        params.reward_deviant_vs_malicious[node].clone()
    } else if !honest[node] && v_h > *t {
        params.reward_deviant[node].clone()
    } else if !honest[node] && v_m > *t {
        params.reward_malicious[node].clone()
    } else {
        Rational::zero()
    }
}

/// Reference payoff with the bribery contract.
pub fn reference_bribery(params: &GameParams, honest: &[bool], node: usize) -> Rational {
    let (v_h, v_m) = split_power(params, honest);
    let t = &params.threshold;
    if honest[node] && v_h > *t {
        params.reward_honest[node].clone()
    } else if honest[node] && v_m > *t {
        params.reward_deviant_vs_malicious[node].clone()
    } else if !honest[node] && v_h > *t {
        params.reward_honest[node].clone()
    } else if !honest[node] && v_m > *t {
        params.reward_malicious[node].clone()
    } else {
        params.reward_honest[node].clone()
    }
}

/// Power summed separately over honest and non-honest nodes.
pub fn split_power(params: &GameParams, honest: &[bool]) -> (Rational, Rational) {
    let mut v_h = Rational::zero();
    let mut v_m = Rational::zero();
    for (v, h) in params.powers.as_slice().iter().zip(honest) {
        if *h {
            v_h += v;
        } else {
            v_m += v;
        }
    }
    (v_h, v_m)
}

pub fn mask_to_honest(n: usize, deviating_mask: u64) -> Vec<bool> {
    (0..n).map(|i| deviating_mask & (1 << i) == 0).collect()
}

/// Exact success probability of the fork race within a finite horizon.
///
/// Confirmation takes `k + 1` slots. Afterwards each slot moves the fork's
/// deficit down by one with probability `q` (a minion block) and up by one
/// otherwise, starting from `k + 2`; success is reaching zero.
pub fn finite_horizon_catch_up(q: f64, k: u32, horizon: u64) -> f64 {
    let start = k as usize + 2;
    let steps = horizon.saturating_sub(u64::from(k) + 1) as usize;
    let width = start + steps + 2;
    let mut dist = vec![0.0; width];
    dist[start] = 1.0;
    let mut absorbed = 0.0;
    for _ in 0..steps {
        let mut next = vec![0.0; width];
        for (d, &p) in dist.iter().enumerate().skip(1) {
            if p == 0.0 {
                continue;
            }
            if d == 1 {
                absorbed += p * q;
            } else {
                next[d - 1] += p * q;
            }
            if d + 1 < width {
                next[d + 1] += p * (1.0 - q);
            }
        }
        dist = next;
    }
    absorbed
}

/// One randomized contract session, driven to full settlement.
#[derive(Debug, Clone)]
pub struct Session {
    pub params: GameParams,
    pub events: Vec<ContractEvent>,
    pub state: ContractState,
    pub settlements: Vec<(NodeId, Settlement)>,
    /// Order the contract issued at its peak (before settlement).
    pub attack_ordered: bool,
    pub deposits: BTreeMap<NodeId, Rational>,
    /// Illegal transitions attempted and rejected along the way.
    pub rejected: usize,
}

fn random_rational<R: Rng>(rng: &mut R, max_num: i64) -> Rational {
    ratio(rng.gen_range(0..=max_num), rng.gen_range(1..=4))
}

/// Random commits, clock advances, oracle outcome and settlements, with
/// some illegal transitions mixed in. Every illegal step must be rejected;
/// the session panics otherwise.
pub fn random_session<R: Rng>(rng: &mut R) -> Session {
    let params = random_params(
        rng,
        &GeneratorConfig {
            n_min: 3,
            n_max: 7,
            ..Default::default()
        },
    );
    let n = params.n();
    let expiration = rng.gen_range(5..=100u64);
    let config = ContractConfig {
        expiration,
        magnate_deposit: ratio(rng.gen_range(1..=60), rng.gen_range(1..=4)),
        malicious_protocol_id: "fork".into(),
        threshold: params.threshold.clone(),
        powers: params.powers.clone(),
    };
    let mut state = contract_init(config.clone()).expect("valid config");
    let mut events = vec![ContractEvent::Init(config)];
    let mut rejected = 0;
    let mut settlements = Vec::new();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let committing = rng.gen_range(0..=n);
    for &i in &order[..committing] {
        let node = NodeId(i);
        if rng.gen_bool(0.3) {
            let to = (state.clock + rng.gen_range(0..=expiration / 4)).min(expiration - 1);
            state = state.advance_clock(to).expect("monotone clock");
            events.push(ContractEvent::AdvanceClock { to });
        }
        let deposit = random_rational(rng, 40);
        match state.commit(node, deposit.clone()) {
            Ok(next) => {
                state = next;
                events.push(ContractEvent::Commit { node, deposit });
            }
            Err(ContractError::AttackAlreadyOrdered) => rejected += 1,
            Err(e) => panic!("unexpected commit error: {e}"),
        }
        if rng.gen_bool(0.1) {
            assert!(matches!(
                state.commit(node, int(1)),
                Err(ContractError::DoubleCommit(_) | ContractError::AttackAlreadyOrdered)
            ));
            rejected += 1;
        }
    }
    if rng.gen_bool(0.2) && state.clock > 0 {
        assert!(matches!(
            state.advance_clock(state.clock - 1),
            Err(ContractError::TimeRegression { .. })
        ));
        rejected += 1;
    }

    let attack_ordered = state.order == Protocol::Malicious;
    let attack_successful = attack_ordered && rng.gen_bool(0.6);
    let executed_protocol = (0..n)
        .map(|i| {
            let minion = state.minions.contains_key(&NodeId(i));
            let p = if minion && rng.gen_bool(0.8) {
                Protocol::Malicious
            } else {
                Protocol::Honest
            };
            (NodeId(i), p)
        })
        .collect();
    let oracle = OracleReport {
        attack_successful,
        executed_protocol,
    };
    events.push(ContractEvent::OracleReport(oracle.clone()));

    let mut minions: Vec<NodeId> = state.minions.keys().copied().collect();
    minions.shuffle(rng);
    // Early settlement attempts, before expiry.
    for &node in minions.iter().take(rng.gen_range(0..=minions.len())) {
        let (next, s) = state.distribute(node, &oracle).expect("legal distribute");
        events.push(ContractEvent::Distribute { node });
        if s != Settlement::NotYetSettleable {
            settlements.push((node, s));
        } else {
            assert_eq!(next, state, "pending settlement must not change state");
        }
        state = next;
    }
    let to = expiration + 1 + rng.gen_range(0..5);
    state = state.advance_clock(to).expect("monotone clock");
    events.push(ContractEvent::AdvanceClock { to });
    for &node in &minions {
        if state.is_settled(node) {
            assert!(matches!(
                state.distribute(node, &oracle),
                Err(ContractError::AlreadySettled(_))
            ));
            rejected += 1;
            continue;
        }
        let (next, s) = state.distribute(node, &oracle).expect("legal distribute");
        assert_ne!(
            s,
            Settlement::NotYetSettleable,
            "after expiry every rule resolves"
        );
        events.push(ContractEvent::Distribute { node });
        settlements.push((node, s));
        state = next;
    }
    let deposits = state.minions.clone();
    Session {
        params,
        events,
        state,
        settlements,
        attack_ordered,
        deposits,
        rejected,
    }
}

/// Conservation computed from the individual settlements rather than the
/// contract's own totals: payouts + burns + unpaid pool = D_m + deposits.
pub fn conservation_holds(session: &Session) -> bool {
    let pool = &session.state.config.magnate_deposit;
    let mut paid = Rational::zero();
    let mut burned = Rational::zero();
    let mut shares = Rational::zero();
    for (node, s) in &session.settlements {
        match s {
            Settlement::Rewarded { payout, .. } => {
                let share = session.params.powers.power(*node) * pool;
                assert_eq!(*payout, &share + &session.deposits[node]);
                shares += share;
                paid += payout;
            }
            Settlement::Refunded { payout } => paid += payout,
            Settlement::Burned { deposit } => burned += deposit,
            Settlement::NotYetSettleable => unreachable!("filtered out"),
        }
    }
    let residual = pool - shares;
    let total_in = pool
        + session
            .deposits
            .values()
            .fold(Rational::zero(), |a, d| a + d);
    paid + burned + residual == total_in
}
