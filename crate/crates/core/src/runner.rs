//! Scenario files, task orchestration and reports.
//!
//! A scenario is a JSON document (`schema_version` 1) naming the game
//! parameters, optional simulation and verification settings, a seed and an
//! ordered task list. Running it yields a [`RunReport`] whose serialized form
//! depends only on the scenario and the seed; wall time is kept out of it.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chain::{
    self, derive_game_params, population_for_share, pos_slashing_audit, run_batch, summarize,
    AttackResult, BaseRewards, Consensus, SimConfig,
};
use crate::contract::{self, settlement_summary, Replay};
use crate::equilibrium::{
    self, check_weak_dominance, deposit_bound, find_deviation_cascade, verify_deposit_bound,
    verify_theorem, Theorem, VerifyConfig, DEFAULT_ENUMERATION_LIMIT,
};
use crate::exec::Execution;
use crate::game::{validate_params, GameParams, NodeId, PowerDistribution, Violations};
use crate::generate::GeneratorConfig;
use crate::rational::{self, Rational};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SWEEP_CELL_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: unsupported schema_version {found}, expected {SCHEMA_VERSION}")]
    Schema { path: PathBuf, found: u32 },
    #[error("{path}: {violations}")]
    Assumptions {
        path: PathBuf,
        violations: Violations,
    },
    #[error("{path}: task `{task}` cannot run: {reason}")]
    Unresolvable {
        path: PathBuf,
        task: String,
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("task `{task}`: {message}")]
    Task { task: String, message: String },
    #[error(transparent)]
    Replay(#[from] contract::ReplayError),
}

/// Settings for randomized claim verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerificationSettings {
    pub instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub max_weight: u32,
    pub reward_range: i64,
    /// Mutation switch: lets the generator produce `R_d ≥ R_h`.
    pub corrupt_generator: bool,
}

impl Default for VerificationSettings {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            instances: 1000,
            n_min: g.n_min,
            n_max: g.n_max,
            max_weight: g.max_weight,
            reward_range: g.reward_range,
            corrupt_generator: false,
        }
    }
}

impl VerificationSettings {
    fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_min: self.n_min,
            n_max: self.n_max,
            max_weight: self.max_weight,
            reward_range: self.reward_range,
            corrupt_deviant_reward: self.corrupt_generator,
        }
    }
}

fn default_runs() -> u64 {
    200
}

fn default_horizon() -> u64 {
    10_000
}

fn default_reward() -> Rational {
    Rational::one()
}

/// Chain simulation section. `powers` and `t` fall back to the scenario's
/// game parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    #[serde(default)]
    pub powers: Option<PowerDistribution>,
    #[serde(default, rename = "t", with = "rational::opt_as_str")]
    pub threshold: Option<Rational>,
    pub minions: BTreeSet<NodeId>,
    pub consensus: Consensus,
    pub confirmations: u32,
    #[serde(default = "default_horizon")]
    pub horizon_slots: u64,
    #[serde(default = "default_reward", with = "rational::as_str")]
    pub block_reward: Rational,
    #[serde(with = "rational::as_str")]
    pub double_spend_value: Rational,
    #[serde(default = "default_runs")]
    pub runs: u64,
    /// Magnate deposit `D_m` shared among successful minions.
    #[serde(default, with = "rational::opt_as_str")]
    pub bribe_pool: Option<Rational>,
    #[serde(default)]
    pub base_rewards: Option<BaseRewards>,
}

/// Uniform base rewards used for every sweep cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRewards {
    #[serde(with = "rational::as_str")]
    pub r_h: Rational,
    #[serde(with = "rational::as_str")]
    pub r_d: Rational,
    #[serde(with = "rational::as_str")]
    pub r_dp: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(with = "rational::vec_as_str")]
    pub bribe_pool: Vec<Rational>,
    #[serde(with = "rational::vec_as_str")]
    pub minion_share: Vec<Rational>,
    pub confirmations: Vec<u32>,
    #[serde(rename = "t", with = "rational::vec_as_str")]
    pub threshold: Vec<Rational>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default = "default_consensus")]
    pub consensus: Consensus,
    #[serde(default = "default_horizon")]
    pub horizon_slots: u64,
    pub base_rewards: UniformRewards,
    #[serde(default = "default_reward", with = "rational::as_str")]
    pub block_reward: Rational,
    #[serde(with = "rational::as_str")]
    pub double_spend_value: Rational,
    #[serde(default = "default_cell_cap")]
    pub max_cells: usize,
}

fn default_consensus() -> Consensus {
    Consensus::PowLongestChain
}

fn default_cell_cap() -> usize {
    DEFAULT_SWEEP_CELL_CAP
}

impl SweepGrid {
    pub fn cell_count(&self) -> usize {
        self.bribe_pool.len()
            * self.minion_share.len()
            * self.confirmations.len()
            * self.threshold.len()
    }

    /// Cells in row-major order over (bribe_pool, minion_share, confirmations, t).
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::with_capacity(self.cell_count());
        for pool in &self.bribe_pool {
            for share in &self.minion_share {
                for &k in &self.confirmations {
                    for t in &self.threshold {
                        out.push(SweepCell {
                            index: out.len(),
                            bribe_pool: pool.clone(),
                            minion_share: share.clone(),
                            confirmations: k,
                            threshold: t.clone(),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepCell {
    pub index: usize,
    pub bribe_pool: Rational,
    pub minion_share: Rational,
    pub confirmations: u32,
    pub threshold: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    VerifyT1,
    VerifyT2,
    VerifyT3,
    VerifyT4,
    Dominance,
    Cascade {
        order: Vec<usize>,
    },
    DepositBound {
        #[serde(default, with = "rational::opt_as_str")]
        deposit: Option<Rational>,
    },
    ContractTrace {
        /// Event log path, relative to the scenario file.
        events: PathBuf,
    },
    ChainSim {
        #[serde(default)]
        trace: bool,
    },
    Sweep {
        grid: Box<SweepGrid>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::VerifyT1 => "verify_t1",
            Task::VerifyT2 => "verify_t2",
            Task::VerifyT3 => "verify_t3",
            Task::VerifyT4 => "verify_t4",
            Task::Dominance => "dominance",
            Task::Cascade { .. } => "cascade",
            Task::DepositBound { .. } => "deposit_bound",
            Task::ContractTrace { .. } => "contract_trace",
            Task::ChainSim { .. } => "chain_sim",
            Task::Sweep { .. } => "sweep",
        }
    }

    /// Tasks whose outcome is a pass/fail verdict.
    pub fn is_verification(&self) -> bool {
        matches!(
            self,
            Task::VerifyT1
                | Task::VerifyT2
                | Task::VerifyT3
                | Task::VerifyT4
                | Task::Dominance
                | Task::Cascade { .. }
                | Task::DepositBound { .. }
        )
    }

    fn theorem(&self) -> Option<Theorem> {
        match self {
            Task::VerifyT1 => Some(Theorem::HonestStrictWithoutCollusion),
            Task::VerifyT2 => Some(Theorem::DepositDeters),
            Task::VerifyT3 => Some(Theorem::CommitmentNeverHurts),
            Task::VerifyT4 => Some(Theorem::CommittedStrict),
            _ => None,
        }
    }
}

/// Scenario file as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<GameParams>,
    #[serde(default)]
    pub verification: VerificationSettings,
    #[serde(default)]
    pub simulation: Option<SimulationSettings>,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

/// A loaded and validated scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub file: ScenarioFile,
    /// Directory relative paths in the scenario resolve against.
    pub base_dir: PathBuf,
    /// Explicit parameters, or parameters derived from the simulation's
    /// base rewards and bribe pool.
    pub params: Option<GameParams>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn n(&self) -> Option<usize> {
        self.params.as_ref().map(GameParams::n).or_else(|| {
            self.file
                .simulation
                .as_ref()
                .and_then(|s| s.powers.as_ref().map(PowerDistribution::len))
        })
    }

    /// Simulation config with defaults filled in from the game parameters.
    pub fn sim_config(&self) -> Option<SimConfig> {
        let sim = self.file.simulation.as_ref()?;
        let powers = sim
            .powers
            .clone()
            .or_else(|| self.file.params.as_ref().map(|p| p.powers.clone()))?;
        let threshold = sim
            .threshold
            .clone()
            .or_else(|| self.file.params.as_ref().map(|p| p.threshold.clone()))?;
        Some(SimConfig {
            powers,
            threshold,
            minions: sim.minions.clone(),
            consensus: sim.consensus,
            confirmations: sim.confirmations,
            horizon_slots: sim.horizon_slots,
            block_reward: sim.block_reward.clone(),
            double_spend_value: sim.double_spend_value.clone(),
            rng_seed: self.file.seed,
        })
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(LoadError::Schema {
            path: path.to_path_buf(),
            found: file.schema_version,
        });
    }
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let assumptions = |violations| LoadError::Assumptions {
        path: path.to_path_buf(),
        violations: Violations(violations),
    };

    if let Some(p) = &file.params {
        let v = validate_params(p);
        if !v.is_empty() {
            return Err(assumptions(v));
        }
    }
    let mut scenario = Scenario {
        params: file.params.clone(),
        file,
        base_dir,
    };
    if let Some(config) = scenario.sim_config() {
        let probe = SimConfig {
            rng_seed: 0,
            ..config.clone()
        };
        if let Err(e) = probe.validate() {
            return Err(match e {
                chain::ChainError::Game(crate::game::GameError::InvalidParams(v)) => {
                    assumptions(v.0)
                }
                other => LoadError::Unresolvable {
                    path: path.to_path_buf(),
                    task: "chain_sim".into(),
                    reason: other.to_string(),
                },
            });
        }
        let sim = scenario
            .file
            .simulation
            .as_ref()
            .expect("sim_config needs it");
        if scenario.params.is_none() {
            if let (Some(base), Some(pool)) = (&sim.base_rewards, &sim.bribe_pool) {
                let derived = derive_game_params(&config.powers, &config.threshold, base, pool)
                    .map_err(|e| match e {
                        crate::game::GameError::InvalidParams(v) => assumptions(v.0),
                        other => LoadError::Unresolvable {
                            path: path.to_path_buf(),
                            task: "chain_sim".into(),
                            reason: other.to_string(),
                        },
                    })?;
                scenario.params = Some(derived);
            }
        }
    }
    check_tasks(&scenario, path)?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

fn check_tasks(scenario: &Scenario, path: &Path) -> Result<(), LoadError> {
    let unresolvable = |task: &Task, reason: String| LoadError::Unresolvable {
        path: path.to_path_buf(),
        task: task.name().into(),
        reason,
    };
    for task in &scenario.file.tasks {
        match task {
            Task::Dominance | Task::Cascade { .. } | Task::DepositBound { .. } => {
                let Some(params) = &scenario.params else {
                    return Err(unresolvable(task, "scenario has no game parameters".into()));
                };
                if let Task::Cascade { order } = task {
                    let mut sorted = order.clone();
                    sorted.sort_unstable();
                    if sorted != (0..params.n()).collect::<Vec<_>>() {
                        return Err(unresolvable(
                            task,
                            format!("order {order:?} is not a permutation of 0..{}", params.n()),
                        ));
                    }
                }
            }
            Task::ChainSim { .. } => {
                if scenario.sim_config().is_none() {
                    return Err(unresolvable(
                        task,
                        "needs a simulation section with powers and t".into(),
                    ));
                }
            }
            Task::ContractTrace { events } => {
                let p = scenario.resolve(events);
                if !p.is_file() {
                    return Err(unresolvable(task, format!("{} not found", p.display())));
                }
            }
            Task::Sweep { grid } => {
                if grid.cell_count() > grid.max_cells {
                    return Err(unresolvable(
                        task,
                        format!("{} cells exceeds cap {}", grid.cell_count(), grid.max_cells),
                    ));
                }
            }
            Task::VerifyT1 | Task::VerifyT2 | Task::VerifyT3 | Task::VerifyT4 => {
                let v = &scenario.file.verification;
                if v.n_min < equilibrium::VERIFY_MIN_NODES
                    || v.n_max > equilibrium::VERIFY_MAX_NODES
                    || v.n_min > v.n_max
                    || v.instances == 0
                {
                    return Err(unresolvable(
                        task,
                        "verification needs instances ≥ 1 and 3 ≤ n_min ≤ n_max ≤ 8".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Overrides the scenario's `output_dir`.
    pub output_dir: Option<PathBuf>,
    /// When false nothing is written to disk.
    pub write_artifacts: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub task: String,
    /// `Some` for verification tasks.
    pub passed: Option<bool>,
    pub result: Value,
    /// CSV files written next to the report.
    pub artifacts: Vec<String>,
    #[serde(skip)]
    csv: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub tasks: Vec<TaskReport>,
    pub warnings: Vec<String>,
    pub all_verifications_passed: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    /// Process exit status: nonzero iff a verification task failed.
    pub fn exit_code(&self) -> i32 {
        if self.all_verifications_passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `task,passed` table.
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "task", "passed"])
            .expect("in-memory");
        for (i, t) in self.tasks.iter().enumerate() {
            let passed = t.passed.map(|p| p.to_string()).unwrap_or_default();
            w.write_record([i.to_string(), t.task.clone(), passed])
                .expect("in-memory");
        }
        String::from_utf8(w.into_inner().expect("in-memory")).expect("utf8")
    }

    /// CSV payload of the `index`-th task, if it produced one.
    pub fn task_csv(&self, index: usize) -> Option<&[u8]> {
        self.tasks
            .get(index)?
            .csv
            .first()
            .map(|(_, bytes)| bytes.as_slice())
    }
}

/// Runs every task in declared order.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunReport, RunError> {
    run_tasks(scenario, &scenario.file.tasks, options)
}

/// Runs `tasks` against `scenario` and writes the report plus CSV artifacts.
pub fn run_tasks(
    scenario: &Scenario,
    tasks: &[Task],
    options: &RunOptions,
) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let mut warnings = Vec::new();
    if let Some(sim) = &scenario.file.simulation {
        if let Some(pool) = &sim.bribe_pool {
            if *pool > sim.double_spend_value {
                warnings.push(format!(
                    "bribe pool {pool} exceeds double-spend value {}; the magnate runs at a loss",
                    sim.double_spend_value
                ));
            }
        }
    }

    for task in tasks {
        if let Task::Sweep { grid } = task {
            for pool in grid
                .bribe_pool
                .iter()
                .filter(|p| **p > grid.double_spend_value)
            {
                warnings.push(format!(
                    "sweep bribe pool {pool} exceeds double-spend value {}",
                    grid.double_spend_value
                ));
            }
        }
    }

    let mut reports = Vec::with_capacity(tasks.len());
    for (index, task) in tasks.iter().enumerate() {
        let mut report = run_task(scenario, task, options.execution)?;
        report.artifacts = report
            .csv
            .iter()
            .map(|(name, _)| format!("{index:02}_{name}"))
            .collect();
        reports.push(report);
    }
    let all_verifications_passed = reports.iter().all(|r| r.passed != Some(false));
    let report = RunReport {
        scenario: scenario.file.name.clone(),
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: scenario.file.seed,
        tasks: reports,
        warnings,
        all_verifications_passed,
        wall_time: started.elapsed(),
    };

    let out_dir = options.output_dir.clone().or_else(|| {
        scenario
            .file
            .output_dir
            .as_ref()
            .map(|d| scenario.resolve(d))
    });
    if let (true, Some(dir)) = (options.write_artifacts, out_dir) {
        write_artifacts(&report, &dir)?;
    }
    Ok(report)
}

fn write_artifacts(report: &RunReport, dir: &Path) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let report_path = dir.join("report.json");
    fs::write(&report_path, report.to_json()).map_err(io(&report_path))?;
    for task in &report.tasks {
        for ((_, bytes), name) in task.csv.iter().zip(&task.artifacts) {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
        }
    }
    Ok(())
}

fn task_error(task: &Task, message: impl ToString) -> RunError {
    RunError::Task {
        task: task.name().into(),
        message: message.to_string(),
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("results serialize")
}

fn run_task(
    scenario: &Scenario,
    task: &Task,
    execution: Execution,
) -> Result<TaskReport, RunError> {
    let mut csv = Vec::new();
    let (passed, result) = match task {
        Task::VerifyT1 | Task::VerifyT2 | Task::VerifyT3 | Task::VerifyT4 => {
            let theorem = task.theorem().expect("verification task");
            let v = &scenario.file.verification;
            let config = VerifyConfig {
                seed: scenario.file.seed,
                instances: v.instances,
                generator: v.generator(),
                execution,
            };
            let report = verify_theorem(theorem, &config).map_err(|e| task_error(task, e))?;
            (Some(report.all_passed), to_value(&report))
        }
        Task::Dominance => {
            let params = scenario.params.as_ref().expect("checked at load");
            let report = check_weak_dominance(params, DEFAULT_ENUMERATION_LIMIT)
                .map_err(|e| task_error(task, e))?;
            (Some(report.weakly_dominates), to_value(&report))
        }
        Task::Cascade { order } => {
            let params = scenario.params.as_ref().expect("checked at load");
            let order: Vec<NodeId> = order.iter().copied().map(NodeId).collect();
            let trace = find_deviation_cascade(params, &order).map_err(|e| task_error(task, e))?;
            let terminal = trace
                .steps
                .last()
                .is_some_and(|s| s.payoffs == params.reward_malicious);
            let mut bytes = Vec::new();
            trace
                .write_csv(&mut bytes)
                .map_err(|e| task_error(task, e))?;
            csv.push(("cascade.csv".to_string(), bytes));
            (Some(trace.all_monotone() && terminal), to_value(&trace))
        }
        Task::DepositBound { deposit } => {
            let params = scenario.params.as_ref().expect("checked at load");
            let bound = deposit_bound(params);
            let above = verify_deposit_bound(params, &(&bound + Rational::one()));
            let at = verify_deposit_bound(params, &bound);
            let chosen = deposit.as_ref().map(|d| verify_deposit_bound(params, d));
            let result = json!({
                "bound": rational::encode(&bound),
                "bound_is_exclusive": true,
                "attained": equilibrium::deposit_bound_attained(params),
                "check_above_bound": to_value(&above),
                "check_at_bound": to_value(&at),
                "check_chosen": chosen.as_ref().map(to_value),
            });
            (Some(above.sufficient), result)
        }
        Task::ContractTrace { events } => {
            let path = scenario.resolve(events);
            let trace = contract_trace_file(&path)?;
            if let Some(bytes) = trace.summary_csv {
                csv.push(("contract_summary.csv".to_string(), bytes));
            }
            (trace.conserved, trace.result)
        }
        Task::ChainSim { trace } => {
            let config = scenario.sim_config().expect("checked at load");
            let runs = scenario.file.simulation.as_ref().map_or(0, |s| s.runs);
            let (value, bytes, trace_bytes) = chain_sim(scenario, &config, runs, *trace, execution)
                .map_err(|e| task_error(task, e))?;
            csv.push(("chain_sim.csv".to_string(), bytes));
            if let Some(t) = trace_bytes {
                csv.push(("chain_trace.csv".to_string(), t));
            }
            (None, value)
        }
        Task::Sweep { grid } => {
            let rows =
                sweep(scenario.file.seed, grid, execution).map_err(|e| task_error(task, e))?;
            let mut bytes = Vec::new();
            write_sweep_csv(&rows, &mut bytes).map_err(|e| task_error(task, e))?;
            csv.push(("sweep.csv".to_string(), bytes));
            (None, to_value(&rows))
        }
    };
    Ok(TaskReport {
        task: task.name().to_string(),
        passed,
        result,
        artifacts: Vec::new(),
        csv,
    })
}

/// Outcome of replaying a contract event log.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractTrace {
    pub result: Value,
    /// Settlement table, present once every minion is settled.
    pub summary_csv: Option<Vec<u8>>,
    pub conserved: Option<bool>,
}

pub fn contract_trace_file(path: &Path) -> Result<ContractTrace, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let events = contract::parse_event_log(&text)?;
    let Replay { state, settlements } = contract::replay(&events)?;
    match settlement_summary(&state) {
        Ok(summary) => {
            let mut bytes = Vec::new();
            summary.write_csv(&mut bytes).map_err(|e| RunError::Task {
                task: "contract_trace".into(),
                message: e.to_string(),
            })?;
            let value = json!({
                "final_state": to_value(&state),
                "settlements": to_value(&settlements),
                "summary": to_value(&summary),
            });
            Ok(ContractTrace {
                result: value,
                summary_csv: Some(bytes),
                conserved: Some(summary.conserved),
            })
        }
        Err(unsettled) => {
            let value = json!({
                "final_state": to_value(&state),
                "settlements": to_value(&settlements),
                "summary": null,
                "unsettled": unsettled.to_string(),
            });
            Ok(ContractTrace {
                result: value,
                summary_csv: None,
                conserved: None,
            })
        }
    }
}

/// JSON result, per-run CSV and the optional slot trace CSV.
type ChainSimOutput = (Value, Vec<u8>, Option<Vec<u8>>);

fn chain_sim(
    scenario: &Scenario,
    config: &SimConfig,
    runs: u64,
    trace: bool,
    execution: Execution,
) -> Result<ChainSimOutput, chain::ChainError> {
    let results = run_batch(config, scenario.file.seed, 0, runs, execution)?;
    let summary = summarize(&results);
    let audits = if config.consensus == Consensus::PosSlashing {
        let audits: Vec<_> = results
            .iter()
            .map(pos_slashing_audit)
            .collect::<Result<_, _>>()?;
        Some(json!({
            "censorship_held_in_all_runs": audits.iter().all(|a| a.censorship_held),
            "successful_runs_with_proofs_on_chain":
                audits.iter().filter(|a| a.attack_successful && a.proofs_included > 0).count(),
            "failed_runs_with_slashable_minions":
                audits.iter().filter(|a| !a.attack_successful && !a.slashable.is_empty()).count(),
        }))
    } else {
        None
    };
    let derived = scenario.params.as_ref().map(|p| {
        json!({
            "params": to_value(p),
            "deposit_bound": rational::encode(&deposit_bound(p)),
        })
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "seed",
        "success",
        "resolution",
        "slots_elapsed",
        "fork_length",
        "reverted_blocks",
        "double_signs",
        "proofs_included",
        "proofs_censored",
    ])
    .expect("in-memory");
    for (i, r) in results.iter().enumerate() {
        w.write_record([
            i.to_string(),
            chain::run_seed(scenario.file.seed, 0, i as u64).to_string(),
            r.success.to_string(),
            serde_json::to_value(r.resolution)
                .expect("serializes")
                .as_str()
                .unwrap_or_default()
                .to_string(),
            r.slots_elapsed.to_string(),
            r.fork_length.to_string(),
            r.reverted_blocks.to_string(),
            r.double_signs.values().sum::<u64>().to_string(),
            r.slashing_proofs_included.to_string(),
            r.slashing_proofs_censored.to_string(),
        ])
        .expect("in-memory");
    }
    let bytes = w.into_inner().expect("in-memory");

    let trace_bytes = if trace && runs > 0 {
        let mut first = config.clone();
        first.rng_seed = chain::run_seed(scenario.file.seed, 0, 0);
        let (_, _, rows) = chain::run_attack_traced(&first)?;
        let mut out = Vec::new();
        chain::write_trace_csv(&rows, &mut out)
            .map_err(|e| chain::ChainError::InvalidConfig(e.to_string()))?;
        Some(out)
    } else {
        None
    };

    let first: Option<&AttackResult> = results.first();
    let value = json!({
        "config": to_value(config),
        "summary": to_value(&summary),
        "pos_audit": audits,
        "derived": derived,
        "first_run": first.map(to_value),
    });
    Ok((value, bytes, trace_bytes))
}

/// One row of the sweep matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub cell: usize,
    #[serde(with = "rational::as_str")]
    pub bribe_pool: Rational,
    #[serde(with = "rational::as_str")]
    pub minion_share: Rational,
    pub confirmations: u32,
    #[serde(rename = "t", with = "rational::as_str")]
    pub threshold: Rational,
    pub runs: u64,
    pub successes: Option<u64>,
    #[serde(with = "rational::opt_as_str")]
    pub success_frequency: Option<Rational>,
    pub success_decimal: Option<String>,
    #[serde(with = "rational::opt_as_str")]
    pub r_m_min: Option<Rational>,
    #[serde(with = "rational::opt_as_str")]
    pub r_m_max: Option<Rational>,
    #[serde(with = "rational::opt_as_str")]
    pub deposit_bound: Option<Rational>,
    /// Why the cell was rejected, if it was.
    pub violation: Option<String>,
}

/// Evaluates every grid cell. Cell `i` draws its run seeds from batch `i`
/// of `seed`, so cell 0 matches a direct chain simulation of the same
/// population.
pub fn sweep(seed: u64, grid: &SweepGrid, execution: Execution) -> Result<Vec<SweepRow>, String> {
    if grid.cell_count() > grid.max_cells {
        return Err(format!(
            "{} cells exceeds cap {}",
            grid.cell_count(),
            grid.max_cells
        ));
    }
    let cells = grid.cells();
    Ok(execution.map_indexed(cells.len(), |i| sweep_cell(seed, grid, &cells[i])))
}

/// Simulation config for one sweep cell.
pub fn sweep_cell_config(grid: &SweepGrid, cell: &SweepCell) -> Result<SimConfig, String> {
    let (powers, minions) =
        population_for_share(&cell.minion_share, &cell.threshold).map_err(|e| e.to_string())?;
    Ok(SimConfig {
        powers,
        threshold: cell.threshold.clone(),
        minions,
        consensus: grid.consensus,
        confirmations: cell.confirmations,
        horizon_slots: grid.horizon_slots,
        block_reward: grid.block_reward.clone(),
        double_spend_value: grid.double_spend_value.clone(),
        rng_seed: 0,
    })
}

fn sweep_cell(seed: u64, grid: &SweepGrid, cell: &SweepCell) -> SweepRow {
    let mut row = SweepRow {
        cell: cell.index,
        bribe_pool: cell.bribe_pool.clone(),
        minion_share: cell.minion_share.clone(),
        confirmations: cell.confirmations,
        threshold: cell.threshold.clone(),
        runs: grid.runs,
        successes: None,
        success_frequency: None,
        success_decimal: None,
        r_m_min: None,
        r_m_max: None,
        deposit_bound: None,
        violation: None,
    };
    let config = match sweep_cell_config(grid, cell) {
        Ok(c) => c,
        Err(e) => {
            row.violation = Some(e);
            return row;
        }
    };
    let base = BaseRewards::uniform(
        config.powers.len(),
        grid.base_rewards.r_h.clone(),
        grid.base_rewards.r_d.clone(),
        grid.base_rewards.r_dp.clone(),
    );
    match derive_game_params(&config.powers, &config.threshold, &base, &cell.bribe_pool) {
        Ok(params) => {
            row.r_m_min = params.reward_malicious.iter().min().cloned();
            row.r_m_max = params.reward_malicious.iter().max().cloned();
            row.deposit_bound = Some(deposit_bound(&params));
        }
        Err(e) => {
            row.violation = Some(e.to_string());
            return row;
        }
    }
    // Runs inside a cell stay sequential; cells are the parallel unit.
    match run_batch(
        &config,
        seed,
        cell.index as u64,
        grid.runs,
        Execution::Sequential,
    ) {
        Ok(results) => {
            let s = summarize(&results);
            row.successes = Some(s.successes);
            row.success_decimal = Some(s.success_decimal);
            row.success_frequency = Some(s.success_frequency);
        }
        Err(e) => row.violation = Some(e.to_string()),
    }
    row
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell",
        "bribe_pool",
        "minion_share",
        "confirmations",
        "t",
        "runs",
        "successes",
        "success_frequency",
        "success_decimal",
        "r_m_min",
        "r_m_max",
        "deposit_bound",
        "violation",
    ])?;
    let opt = |v: &Option<Rational>| v.as_ref().map(rational::encode).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.cell.to_string(),
            rational::encode(&r.bribe_pool),
            rational::encode(&r.minion_share),
            r.confirmations.to_string(),
            rational::encode(&r.threshold),
            r.runs.to_string(),
            r.successes.map(|s| s.to_string()).unwrap_or_default(),
            opt(&r.success_frequency),
            r.success_decimal.clone().unwrap_or_default(),
            opt(&r.r_m_min),
            opt(&r.r_m_max),
            opt(&r.deposit_bound),
            r.violation.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
