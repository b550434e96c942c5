use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mccoll::algorithms::AlgorithmId;
use mccoll::harness::{
    cmd_demo_claims, cmd_run, format_records, format_rows_human, format_search_human,
    rows_exit_code, search_exit_code, ExperimentConfig, GeneratorSpec, SearchRecord, EXIT_FAILED,
    EXIT_OK, EXIT_USAGE,
};
use mccoll::model::{
    parse_process, parse_schedule, run_schedule, serialize_schedule, ModelKind, Problem,
    ProblemKind,
};
use mccoll::search::{optimal_rounds_with, SearchBudget, SearchOptions};
use mccoll::topology::{parse_topology, serialize_topology, ClusterTopology, ProcessRef};

#[derive(Parser)]
#[command(
    name = "mccoll",
    version,
    about = "Collective schedules on multi-core clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms (and optionally the oracle) and print comparison rows.
    Run(RunArgs),
    /// Check a schedule file against a topology.
    Validate(ValidateArgs),
    /// Find the optimal round count by exhaustive search.
    Search(SearchArgs),
    /// Reproduce the broadcast/gather asymmetry and degree-heuristic claims.
    DemoClaims(FormatArgs),
    /// Write a generated topology.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Human,
    Records,
}

#[derive(Args)]
struct FormatArgs {
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct TopologyArgs {
    /// Topology file.
    #[arg(long, conflicts_with = "generator")]
    topology: Option<PathBuf>,
    /// complete:M,P,N | star:P,N,LEAVES | overlap:K | random:M,P,N,PROB
    #[arg(long)]
    generator: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 32)]
    max_rounds: usize,
    #[arg(long, default_value_t = 2_000_000)]
    max_states: usize,
    /// Seconds.
    #[arg(long, default_value_t = 120.0)]
    time_limit: f64,
}

impl BudgetArgs {
    fn budget(&self) -> Result<SearchBudget, String> {
        if self.max_rounds == 0
            || self.max_states == 0
            || self.time_limit.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        {
            return Err("budget values must be positive".into());
        }
        Ok(SearchBudget {
            max_rounds: self.max_rounds,
            max_states: self.max_states,
            time_limit: Duration::from_secs_f64(self.time_limit),
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    topology: TopologyArgs,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long, default_value = "0,0", value_parser = parse_process)]
    root: ProcessRef,
    /// Repeatable.
    #[arg(long = "algorithm")]
    algorithms: Vec<AlgorithmId>,
    /// Repeatable; defaults to the model each algorithm targets.
    #[arg(long = "model")]
    models: Vec<ModelKind>,
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    topology: TopologyArgs,
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    problem: ProblemKind,
    #[arg(long, default_value = "0,0", value_parser = parse_process)]
    root: ProcessRef,
    #[arg(long)]
    model: ModelKind,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    topology: TopologyArgs,
    #[arg(long)]
    problem: ProblemKind,
    #[arg(long, default_value = "0,0", value_parser = parse_process)]
    root: ProcessRef,
    #[arg(long)]
    model: ModelKind,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Write the optimal schedule here.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
    /// Disable symmetry reduction.
    #[arg(long)]
    no_canonical: bool,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    generator: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// A failure that maps to an exit code.
struct Failure(i32, String);

fn usage(message: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, message.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_topology(args: &TopologyArgs) -> Result<(ClusterTopology, String), Failure> {
    match (&args.topology, &args.generator) {
        (Some(path), None) => {
            let t = parse_topology(&read(path)?)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Ok((t, path.display().to_string()))
        }
        (None, Some(spec)) => {
            let g: GeneratorSpec = spec
                .parse()
                .map_err(|e: mccoll::harness::HarnessError| usage(e.to_string()))?;
            Ok((g.build(args.seed), g.label(args.seed)))
        }
        _ => Err(usage("give exactly one of --topology or --generator")),
    }
}

fn problem(kind: ProblemKind, root: ProcessRef) -> Problem {
    Problem::of_kind(kind, root)
}

fn run(cmd: Command) -> Result<(String, i32), Failure> {
    match cmd {
        Command::Run(a) => {
            let (topology, label) = load_topology(&a.topology)?;
            let config = ExperimentConfig {
                label,
                topology,
                problem: a.problem,
                root: a.root,
                algorithms: a.algorithms,
                models: a.models,
                oracle: if a.oracle {
                    Some(a.budget.budget().map_err(usage)?)
                } else {
                    None
                },
                parallel: a.parallel,
            };
            let rows = cmd_run(&config).map_err(|e| usage(e.to_string()))?;
            let text = match a.format.format {
                Format::Human => format_rows_human(&rows),
                Format::Records => format_records(&rows),
            };
            Ok((text, rows_exit_code(&rows)))
        }
        Command::Validate(a) => {
            let (t, _) = load_topology(&a.topology)?;
            let schedule = parse_schedule(&read(&a.schedule)?)
                .map_err(|e| usage(format!("{}: {e}", a.schedule.display())))?;
            let p = problem(a.problem, a.root);
            p.check(&t).map_err(|e| usage(e.to_string()))?;
            let report = run_schedule(&t, &p, &schedule, a.model);
            let text = match a.format.format {
                Format::Human => report.to_text(),
                Format::Records => format_records(&[&report]),
            };
            Ok((text, if report.ok() { EXIT_OK } else { EXIT_FAILED }))
        }
        Command::Search(a) => {
            let (t, _) = load_topology(&a.topology)?;
            let options = SearchOptions {
                canonicalize: !a.no_canonical,
                parallel: a.parallel,
                ..SearchOptions::default()
            };
            let budget = a.budget.budget().map_err(usage)?;
            let result =
                optimal_rounds_with(&t, &problem(a.problem, a.root), a.model, budget, options)
                    .map_err(|e| usage(e.to_string()))?;
            if let (Some(path), Some(w)) = (&a.witness, &result.witness) {
                write(path, &serialize_schedule(w))?;
            }
            let text = match a.format.format {
                Format::Human => format_search_human(&result),
                Format::Records => format_records(&[SearchRecord::from(&result)]),
            };
            Ok((text, search_exit_code(&result)))
        }
        Command::DemoClaims(f) => {
            let report = cmd_demo_claims();
            let text = match f.format {
                Format::Human => report.to_human(),
                Format::Records => report.to_records(),
            };
            Ok((text, if report.ok() { EXIT_OK } else { EXIT_FAILED }))
        }
        Command::Gen(a) => {
            let g: GeneratorSpec = a
                .generator
                .parse()
                .map_err(|e: mccoll::harness::HarnessError| usage(e.to_string()))?;
            let text = serialize_topology(&g.build(a.seed));
            match a.output {
                Some(path) => {
                    write(&path, &text)?;
                    Ok((String::new(), EXIT_OK))
                }
                None => Ok((text, EXIT_OK)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code as u8)
        }
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
