//! Games, contract state machine and fork simulation for studying
//! out-of-band bribery attacks on blockchains whose security rests on
//! rational nodes.
//!
//! * [`game`]: parameter model and the payoff functions of the game without
//!   collusion and the game with a bribery contract.
//! * [`equilibrium`]: strict-Nash and dominance checks, the deviation
//!   cascade, the minion deposit bound and randomized claim verification.
//! * [`contract`]: the bribery contract as a replayable state machine.
//! * [`chain`]: double-spend fork races under longest-chain and
//!   deposit-slashing consensus.
//! * [`runner`]: scenario files, task orchestration and reports.
//!
//! All quantities are exact rationals. Batches run through [`exec`], on
//! rayon when the `parallel` feature is on, with per-item seeds from [`seed`].

pub mod chain;
pub mod contract;
pub mod equilibrium;
pub mod exec;
pub mod game;
pub mod generate;
pub mod rational;
pub mod runner;
pub mod seed;

pub use exec::Execution;
pub use game::{GameParams, NodeId, PowerDistribution, Strategy, StrategyProfile};
pub use rational::Rational;
