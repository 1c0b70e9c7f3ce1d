use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use bribery_sim::equilibrium::Theorem;
use bribery_sim::runner::{self, RunOptions, RunReport, Scenario, Task};
use bribery_sim::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "bribery-sim",
    version,
    about = "Commitment-bribery game verifier and fork simulator"
)]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run batches on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every task of a scenario.
    Run { scenario: PathBuf },
    /// Run the scenario's claim checks (all four when it lists none).
    Verify {
        scenario: PathBuf,
        /// Restrict to one claim: T1, T2, T3 or T4.
        #[arg(long)]
        theorem: Option<Theorem>,
    },
    /// Trace a unilateral deviation cascade on the scenario's parameters.
    Cascade {
        scenario: PathBuf,
        /// Comma-separated node order, e.g. 2,1,0.
        #[arg(long, value_delimiter = ',', required = true)]
        order: Vec<usize>,
    },
    /// Replay a bribery-contract event log (JSON lines).
    ContractTrace { events: PathBuf },
    /// Monte-Carlo fork attack from the scenario's simulation section.
    ChainSim {
        scenario: PathBuf,
        /// Also write a per-slot trace of the first run.
        #[arg(long)]
        trace: bool,
    },
    /// Run the scenario's sweep tasks.
    Sweep { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = runner::load_scenario(path)?;
    if let Some(seed) = seed {
        scenario.file.seed = seed;
    }
    Ok(scenario)
}

fn theorem_task(t: Theorem) -> Task {
    match t {
        Theorem::HonestStrictWithoutCollusion => Task::VerifyT1,
        Theorem::DepositDeters => Task::VerifyT2,
        Theorem::CommitmentNeverHurts => Task::VerifyT3,
        Theorem::CommittedStrict => Task::VerifyT4,
    }
}

fn run(cli: Cli) -> Result<u8> {
    let options = RunOptions {
        execution: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        output_dir: cli.out.clone(),
        write_artifacts: true,
    };

    let (scenario, tasks) = match &cli.command {
        Command::ContractTrace { events } => return contract_trace(events, &cli),
        Command::Run { scenario } => {
            let s = load(scenario, cli.seed)?;
            let tasks = s.file.tasks.clone();
            (s, tasks)
        }
        Command::Verify { scenario, theorem } => {
            let s = load(scenario, cli.seed)?;
            let tasks = match theorem {
                Some(t) => vec![theorem_task(*t)],
                None => {
                    let listed: Vec<Task> = s
                        .file
                        .tasks
                        .iter()
                        .filter(|t| t.is_verification())
                        .cloned()
                        .collect();
                    if listed.is_empty() {
                        Theorem::ALL.iter().copied().map(theorem_task).collect()
                    } else {
                        listed
                    }
                }
            };
            (s, tasks)
        }
        Command::Cascade { scenario, order } => {
            let s = load(scenario, cli.seed)?;
            let Some(params) = &s.params else {
                bail!("{}: scenario has no game parameters", scenario.display());
            };
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..params.n()).collect::<Vec<_>>() {
                bail!(
                    "--order {order:?} is not a permutation of 0..{}",
                    params.n()
                );
            }
            (
                s,
                vec![Task::Cascade {
                    order: order.clone(),
                }],
            )
        }
        Command::ChainSim { scenario, trace } => {
            let s = load(scenario, cli.seed)?;
            if s.sim_config().is_none() {
                bail!("{}: no simulation section", scenario.display());
            }
            (s, vec![Task::ChainSim { trace: *trace }])
        }
        Command::Sweep { scenario } => {
            let s = load(scenario, cli.seed)?;
            let tasks: Vec<Task> = s
                .file
                .tasks
                .iter()
                .filter(|t| matches!(t, Task::Sweep { .. }))
                .cloned()
                .collect();
            if tasks.is_empty() {
                bail!("{}: scenario lists no sweep task", scenario.display());
            }
            (s, tasks)
        }
    };

    let report = runner::run_tasks(&scenario, &tasks, &options)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print_report(&report, cli.format)?;
    Ok(report.exit_code() as u8)
}

fn print_report(report: &RunReport, format: Format) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Json => stdout.write_all(report.to_json().as_bytes())?,
        Format::Csv => match (report.tasks.len(), report.task_csv(0)) {
            (1, Some(bytes)) => stdout.write_all(bytes)?,
            _ => stdout.write_all(report.summary_csv().as_bytes())?,
        },
    }
    Ok(())
}

fn contract_trace(events: &Path, cli: &Cli) -> Result<u8> {
    let runner::ContractTrace {
        result: value,
        summary_csv: csv,
        conserved,
    } = runner::contract_trace_file(events)?;
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = serde_json::to_string_pretty(&value)? + "\n";
        std::fs::write(dir.join("contract_trace.json"), json)?;
        if let Some(bytes) = &csv {
            std::fs::write(dir.join("contract_summary.csv"), bytes)?;
        }
    }
    let mut stdout = std::io::stdout().lock();
    match (cli.format, &csv) {
        (Format::Csv, Some(bytes)) => stdout.write_all(bytes)?,
        (Format::Csv, None) => bail!("contract is not fully settled; no summary table"),
        (Format::Json, _) => {
            stdout.write_all((serde_json::to_string_pretty(&value)? + "\n").as_bytes())?
        }
    }
    Ok(if conserved == Some(false) { 1 } else { 0 })
}
