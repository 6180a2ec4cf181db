use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphquest_core::harness::{run_experiment_on, Algorithm, ExperimentConfig, GraphSource};
use graphquest_core::io::{format_candidates, format_graph, read_answers, read_graph};
use graphquest_core::multi::{
    brute_force_multi, solve_multi, solve_multi_forest, solve_multi_unlimited,
};
use graphquest_core::oracle::verify_plan;
use graphquest_core::single_bounded::{brute_force, solve, solve_down_forest, solve_up_forest};
use graphquest_core::single_unlimited::{
    solve_dag_unlimited, solve_down_forest_unlimited, solve_unlimited, solve_up_forest_unlimited,
};
use graphquest_core::{candidate_set, Dag, Error, Plan, Variant};

mod interact;

#[derive(Parser)]
#[command(
    name = "graphquest",
    version,
    about = "Plan and evaluate yes/no search questions over a DAG"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Choose a question set and print it as JSON.
    Plan(PlanArgs),
    /// Print the candidate set left by an answer file.
    Eval(EvalArgs),
    /// Ask questions on the terminal, phase by phase.
    Interact(InteractArgs),
    /// Run search experiments and write per-trial and aggregate CSVs.
    Simulate(SimulateArgs),
    /// Print a generated graph.
    Gen(GenArgs),
    /// Recompute a plan's worst case from scratch.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Single,
    Multi,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Single => Variant::Single,
            VariantArg::Multi => Variant::Multi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bounded,
    Unlimited,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum StructureArg {
    #[default]
    Auto,
    Dag,
    DownForest,
    UpForest,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Humangs,
    Random,
    #[value(name = "general_first", alias = "general-first")]
    GeneralFirst,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Humangs => Algorithm::Humangs,
            AlgorithmArg::Random => Algorithm::Random,
            AlgorithmArg::GeneralFirst => Algorithm::GeneralFirst,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Question budget; required in bounded mode.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    structure: StructureArg,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    answers: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
}

#[derive(Args)]
struct InteractArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Questions per phase.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    graph: Option<PathBuf>,
    /// `balanced:<m>:<d>[:up]` or `random:<n>:<max_children>`.
    #[arg(long, value_parser = parse_source)]
    gen: Option<GraphSource>,
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    phases: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Repetitions averaged for the random baseline.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    random_runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-trial CSV; the aggregate goes to `<stem>_aggregate.csv` beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_source)]
    gen: GraphSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    /// Defaults to the plan's own variant.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

fn parse_source(s: &str) -> Result<GraphSource, String> {
    s.parse()
}

/// Process exit status with the message printed before exiting.
pub(crate) struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    pub(crate) fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure {
            code,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::UnknownNode(_)
            | Error::DuplicateNode(_)
            | Error::CycleDetected(_)
            | Error::Io(_) => 2,
            Error::InconsistentAnswers(_) => 4,
            _ => 3,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(2, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_graph(path: &Path) -> CliResult<Dag> {
    read_graph(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn wrong_structure(expected: &'static str) -> Failure {
    Error::WrongStructure { expected }.into()
}

fn make_plan(
    dag: &Dag,
    variant: Variant,
    mode: ModeArg,
    k: Option<usize>,
    structure: StructureArg,
) -> CliResult<Plan> {
    let k = match (mode, k) {
        (ModeArg::Bounded, None) => return Err(Failure::new(2, "bounded mode needs --k")),
        (ModeArg::Bounded, Some(k)) => k,
        (ModeArg::Unlimited, _) => 0,
    };
    let down = || {
        dag.is_down_forest()
            .then_some(())
            .ok_or_else(|| wrong_structure("downward forest"))
    };
    let up = || {
        dag.is_up_forest()
            .then_some(())
            .ok_or_else(|| wrong_structure("upward forest"))
    };
    let plan = match (variant, mode, structure) {
        (Variant::Multi, ModeArg::Unlimited, _) => solve_multi_unlimited(dag),
        (Variant::Single, ModeArg::Bounded, StructureArg::Auto) => solve(dag, k)?,
        (Variant::Single, ModeArg::Bounded, StructureArg::Dag) => brute_force(dag, k)?,
        (Variant::Single, ModeArg::Bounded, StructureArg::DownForest) => {
            down()?;
            solve_down_forest(dag, k)?
        }
        (Variant::Single, ModeArg::Bounded, StructureArg::UpForest) => {
            up()?;
            solve_up_forest(dag, k)?
        }
        (Variant::Single, ModeArg::Unlimited, StructureArg::Auto) => solve_unlimited(dag)?,
        (Variant::Single, ModeArg::Unlimited, StructureArg::Dag) => solve_dag_unlimited(dag)?,
        (Variant::Single, ModeArg::Unlimited, StructureArg::DownForest) => {
            down()?;
            solve_down_forest_unlimited(dag)?
        }
        (Variant::Single, ModeArg::Unlimited, StructureArg::UpForest) => {
            up()?;
            solve_up_forest_unlimited(dag)?
        }
        (Variant::Multi, ModeArg::Bounded, StructureArg::Auto) => solve_multi(dag, k)?,
        (Variant::Multi, ModeArg::Bounded, StructureArg::Dag) => brute_force_multi(dag, k)?,
        (Variant::Multi, ModeArg::Bounded, StructureArg::DownForest) => {
            down()?;
            solve_multi_forest(dag, k)?
        }
        (Variant::Multi, ModeArg::Bounded, StructureArg::UpForest) => {
            up()?;
            solve_multi_forest(dag, k)?
        }
    };
    Ok(plan)
}

fn cmd_plan(args: &PlanArgs) -> CliResult<()> {
    let dag = load_graph(&args.graph)?;
    let plan = make_plan(&dag, args.variant.into(), args.mode, args.k, args.structure)?;
    println!("{}", plan.to_json(&dag));
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let dag = load_graph(&args.graph)?;
    let answers = read_answers(&args.answers, &dag)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.answers.display())))?;
    let cand = candidate_set(&dag, &answers, args.variant.into())?;
    print!("{}", format_candidates(&dag, &cand));
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let source = match (&args.graph, &args.gen) {
        (Some(path), _) => GraphSource::File(path.clone()),
        (None, Some(spec)) => spec.clone(),
        (None, None) => return Err(Failure::new(2, "one of --graph or --gen is required")),
    };
    let dag = match &source {
        GraphSource::File(path) => load_graph(path)?,
        generated => generated.load(args.seed)?,
    };
    let mut cfg = ExperimentConfig::new(source, args.algorithm.into(), args.k as usize);
    cfg.phases = args.phases as usize;
    cfg.trials = args.trials as usize;
    cfg.random_runs = args.random_runs as usize;
    cfg.seed = args.seed;
    let out = run_experiment_on(&dag, &cfg)?;
    let agg = out.write(&args.out)?;
    println!("{}", args.out.display());
    println!("{}", agg.display());
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let dag = args.gen.load(args.seed)?;
    let text = format_graph(&dag);
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let dag = load_graph(&args.graph)?;
    let json = std::fs::read_to_string(&args.plan)?;
    let plan = Plan::from_json(&json, &dag)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.plan.display())))?;
    let variant = args.variant.map(Variant::from).unwrap_or(plan.variant);
    let report = verify_plan(&dag, &plan, variant)?;
    println!(
        "{} expected_wcase={} found_wcase={} witness={}",
        if report.pass { "PASS" } else { "FAIL" },
        report.expected_wcase,
        report.found_wcase,
        report.witness_targets.join(",")
    );
    if report.pass {
        Ok(())
    } else {
        Err(Failure::new(6, "plan does not meet its stated worst case"))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Interact(a) => {
            let dag = load_graph(&a.graph)?;
            let stdin = io::stdin();
            let stdout = io::stdout();
            interact::session(
                &dag,
                a.variant.into(),
                a.k as usize,
                stdin.lock(),
                stdout.lock(),
            )
        }
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Verify(a) => cmd_verify(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

/// Reads one trimmed line; `None` at end of input.
pub(crate) fn read_line(input: &mut impl BufRead) -> CliResult<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_owned()))
}
