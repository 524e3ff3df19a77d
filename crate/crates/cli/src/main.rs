use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcg_core::algorithms::{audit_trace, distributed_cg, Rounding, RunConfig};
use dcg_core::experiments::{
    generate_scenario, rows_to_csv, run_experiment, sequence_sensitivity_report, Algo, ExperimentSpec, GeneratorParams,
    GraphKind, Hops, RING_ROUTES,
};
use dcg_core::scenario::{CoverageScenario, Field};
use dcg_core::Error;

const AFTER_HELP: &str = "\
List flags take comma-separated values, e.g. --T 1,5,10 --seeds 0,1,2.
--hops accepts a round count or 'd' for the graph diameter.
--orders takes agent orders separated by commas, agents joined by '-',
e.g. --orders 0-1-2,2-1-0; 'ring-routes' expands to the six 5-agent ring routes.

Exit status: 0 success, 1 configuration or input error, 2 invariant audit failure.";

#[derive(Parser)]
#[command(name = "dcg", version, about = "Distributed continuous greedy experiment harness", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random coverage scenario as JSON.
    Generate(GenerateArgs),
    /// Sweep an algorithm over T, K, hops and seeds (or orders) and write CSV.
    Run(RunArgs),
    /// Run the distributed algorithm and check its runtime invariants.
    Audit(SweepArgs),
    /// Compare sequential greedy across orders with the distributed algorithm across seeds.
    Sensitivity(SensitivityArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6.0)]
    width: f64,
    #[arg(long, default_value_t = 6.0)]
    height: f64,
    #[arg(long, default_value_t = 6)]
    rows: usize,
    #[arg(long, default_value_t = 6)]
    cols: usize,
    #[arg(long, default_value_t = 900)]
    points: usize,
    /// One sensing radius per agent.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8,1.5")]
    radii: Vec<f64>,
    #[arg(long, value_enum, default_value_t = GraphArg::Ring)]
    graph: GraphArg,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Ring,
    Path,
    Complete,
    Star,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Distributed,
    Central,
    Sequential,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Sample,
    Argmax,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long = "T", value_delimiter = ',', default_value = "20")]
    steps: Vec<usize>,
    #[arg(long = "K", value_delimiter = ',', default_value = "500")]
    samples: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    hops: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, value_enum, default_value_t = RoundingArg::Sample)]
    rounding: RoundingArg,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_enum, default_value_t = AlgoArg::Distributed)]
    algo: AlgoArg,
    #[arg(long, value_delimiter = ',')]
    orders: Vec<String>,
    /// Fill the ms column with wall time. Output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_delimiter = ',', default_value = "ring-routes")]
    orders: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Audit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Audit(args) => audit(args),
        Command::Sensitivity(args) => sensitivity(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Audit(msg)) => {
            eprintln!("audit failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<CoverageScenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    CoverageScenario::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn parse_orders(raw: &[String]) -> Result<Vec<Vec<usize>>, Failure> {
    let mut orders = Vec::new();
    for item in raw {
        if item == "ring-routes" {
            orders.extend(RING_ROUTES.iter().map(|r| r.to_vec()));
            continue;
        }
        let order = item
            .split('-')
            .map(|a| a.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| Failure::Config(format!("bad order {item:?}: expected agents joined by '-'")))?;
        orders.push(order);
    }
    Ok(orders)
}

fn rounding(arg: RoundingArg) -> Rounding {
    match arg {
        RoundingArg::Sample => Rounding::Sample,
        RoundingArg::Argmax => Rounding::Argmax,
    }
}

fn sweep_spec(algo: Algo, sweep: &SweepArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::new(algo);
    spec.steps = sweep.steps.clone();
    spec.samples = sweep.samples.clone();
    spec.hops = sweep.hops.iter().map(|h| h.parse::<Hops>()).collect::<Result<_, _>>()?;
    spec.seeds = sweep.seeds.clone();
    spec.rounding = rounding(sweep.rounding);
    Ok(spec)
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let params = GeneratorParams {
        field: Field {
            width: args.width,
            height: args.height,
        },
        rows: args.rows,
        cols: args.cols,
        points: args.points,
        radii: args.radii,
        graph: match args.graph {
            GraphArg::Ring => GraphKind::Ring,
            GraphArg::Path => GraphKind::Path,
            GraphArg::Complete => GraphKind::Complete,
            GraphArg::Star => GraphKind::Star,
        },
    };
    let file = generate_scenario(&params, args.seed)?;
    emit(args.out.as_deref(), &file.to_json())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let scenario = load(&args.sweep.scenario)?;
    let algo = match args.algo {
        AlgoArg::Distributed => Algo::Distributed,
        AlgoArg::Central => Algo::Central,
        AlgoArg::Sequential => Algo::Sequential,
        AlgoArg::Brute => Algo::Brute,
    };
    let mut spec = sweep_spec(algo, &args.sweep)?;
    spec.orders = parse_orders(&args.orders)?;
    spec.timing = args.timing;
    let rows = run_experiment(&scenario, &spec)?;
    emit(args.out.as_deref(), &rows_to_csv(&rows))?;
    let failed = rows.iter().filter(|r| r.audit == Some(false)).count();
    if failed > 0 {
        return Err(Failure::Audit(format!("{failed} of {} runs", rows.len())));
    }
    Ok(())
}

fn audit(args: SweepArgs) -> Result<(), Failure> {
    let scenario = load(&args.scenario)?;
    // validates the sweep lists
    let spec = sweep_spec(Algo::Distributed, &args)?;
    let (part, graph) = (scenario.partition(), scenario.graph());
    let mut runs = 0;
    let mut violations = Vec::new();
    for &t in &spec.steps {
        for &k in &spec.samples {
            for h in &spec.hops {
                for &seed in &spec.seeds {
                    let hops = h.resolve(graph.diameter());
                    let cfg = RunConfig::uniform(scenario.num_agents(), t, k, hops, seed).with_rounding(spec.rounding);
                    let out = distributed_cg(scenario.oracle(), part, graph, &cfg)?;
                    runs += 1;
                    if let Err(v) = audit_trace(&out.trace, part, graph, &cfg) {
                        violations.push(format!("T={t} K={k} hops={hops} seed={seed}: {v}"));
                    }
                }
            }
        }
    }
    for v in &violations {
        println!("FAIL {v}");
    }
    if violations.is_empty() {
        println!("{runs} runs, all invariants hold");
        Ok(())
    } else {
        Err(Failure::Audit(format!("{} of {runs} runs", violations.len())))
    }
}

fn sensitivity(args: SensitivityArgs) -> Result<(), Failure> {
    let scenario = load(&args.sweep.scenario)?;
    let orders = parse_orders(&args.orders)?;
    let spec = sweep_spec(Algo::Distributed, &args.sweep)?;
    let (Some(&t), Some(&k), Some(h)) = (spec.steps.first(), spec.samples.first(), spec.hops.first()) else {
        return Err(Failure::Config("sensitivity needs one T, K and hops value".into()));
    };
    if spec.steps.len() > 1 || spec.samples.len() > 1 || spec.hops.len() > 1 {
        return Err(Failure::Config("sensitivity takes a single T, K and hops value".into()));
    }
    let hops = h.resolve(scenario.graph().diameter());
    let template = RunConfig::uniform(scenario.num_agents(), t, k, hops, 0).with_rounding(spec.rounding);
    let report = sequence_sensitivity_report(&scenario, &orders, &template, &spec.seeds)?;
    emit(args.out.as_deref(), &report.to_csv())?;
    eprintln!(
        "sequential spread {:.3}, distributed spread {:.3}, distributed IQR {:.3}",
        report.sequential_spread, report.distributed_spread, report.distributed_iqr
    );
    Ok(())
}
