//! `netoperad`: validate inputs, compose operations, analyze wiring diagrams,
//! plan with tasking templates and synthesize fleet designs.
//!
//! Every command writes one JSON report to standard output (or `--report`).
//! Human-readable summaries go to standard error. Exit codes: 0 success,
//! 1 usage or validation error, 2 infeasible or undecided.

mod commands;
mod report;
mod script;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "netoperad", version, about = "Typed-operad engine for system design")]
pub struct Cli {
    /// Machine-readable diagnostics on standard output and no tables on standard error.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for stochastic search; overrides any configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an input file and report whether it is valid.
    Validate {
        path: PathBuf,
        /// Input kind; detected from the top-level keys when omitted.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
    /// Run a composition script against a network template.
    Compose {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// Failure attribution, decomposition equality or requirement soundness.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Compile a tasking scenario and solve it, or export it as LP text.
    Plan(PlanArgs),
    /// Search for the best fleet design within a budget.
    Synthesize(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Network,
    Tasking,
    Wiring,
    Failure,
    Requirements,
    Catalog,
    Scenario,
    PlanScenario,
    SearchConfig,
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Composite failure distributions of named decompositions.
    Failure {
        #[arg(long)]
        wiring: PathBuf,
        #[arg(long)]
        failure: PathBuf,
        /// Composites to evaluate; all of them when omitted.
        #[arg(long)]
        composite: Vec<String>,
    },
    /// Whether two composites flatten to the same wiring diagram.
    Equal {
        #[arg(long)]
        wiring: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Whether component requirements imply the outer ones on a grid.
    Soundness {
        #[arg(long)]
        wiring: PathBuf,
        #[arg(long)]
        composite: String,
        #[arg(long)]
        requirements: PathBuf,
        /// Also check level by level and compare with the flattened result.
        #[arg(long)]
        chained: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Timed,
    Plan,
    Counts,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub template: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = LevelArg::Timed)]
    pub level: LevelArg,
    /// Write the constraint system as LP text and skip solving.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    #[arg(long, default_value_t = 2_000_000)]
    pub node_limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Exhaustive,
    Anneal,
    Genetic,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub template: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Search configuration JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    /// Audit log path; defaults to beside the report.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors; usage mistakes exit 1, not clap's 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(commands::run(&cli, &argv))
}
