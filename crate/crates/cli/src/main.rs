use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ctc_core::format::{CutPlanOption, ScenarioFile};
use ctc_core::{parse_scenario, run_axiom_suite, run_file, scenarios, AxiomConfig, CtcError, Model};

const EXIT_INVALID: u8 = 1;
const EXIT_NOT_CV_LOCAL: u8 = 2;
const EXIT_UNEXPECTED_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(name = "ctc", version, about = "Simulate quantum circuits with closed timelike curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file and print a JSON report.
    Run(RunArgs),
    /// List the built-in scenarios, or export one as a scenario file.
    Examples(ExamplesArgs),
    /// Check the trace axioms on random morphisms.
    Axioms(AxiomsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Dctc,
    Pctc,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dctc => Model::Dctc,
            ModelArg::Pctc => Model::Pctc,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    file: PathBuf,
    /// Override the model named in the file.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for the cut-invariance warning.
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated cut edges, one per loop, or `all` to compare every plan.
    #[arg(long)]
    cut_plan: Option<String>,
    #[arg(long)]
    probes: Option<usize>,
    /// Close every cut wire at once under P-CTC, even when the graph is not CV-local.
    #[arg(long)]
    experimental_trace: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExamplesArgs {
    name: Option<String>,
    /// Which input case of the scenario to export.
    #[arg(long, default_value_t = 0)]
    case: usize,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AxiomsArgs {
    /// Check one model; both by default.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ctc_core::axioms::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Core(CtcError),
    Usage(String),
    UnexpectedVerdict(String),
}

impl From<CtcError> for Failure {
    fn from(e: CtcError) -> Self {
        Failure::Core(e)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Usage(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn parse_cut_plan(s: &str) -> Result<CutPlanOption, Failure> {
    match s.trim() {
        "all" => Ok(CutPlanOption::All),
        "default" => Ok(CutPlanOption::Default),
        list => list
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("bad cut edge `{x}`"))))
            .collect::<Result<Vec<_>, _>>()
            .map(CutPlanOption::Edges),
    }
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.file).map_err(|e| Failure::Usage(format!("{}: {e}", args.file.display())))?;
    let mut file = parse_scenario(&text)?;
    if let Some(m) = args.model {
        file.model = m.into();
    }
    let o = &mut file.options;
    if let Some(seed) = args.seed {
        o.seed = seed;
    }
    if let Some(tol) = args.tol {
        o.tol = tol;
    }
    if let Some(plan) = &args.cut_plan {
        o.cut_plan = parse_cut_plan(plan)?;
    }
    if let Some(p) = args.probes {
        o.probes = p;
    }
    o.experimental_trace |= args.experimental_trace;
    let report = run_file(&file)?;
    emit(&report.to_string_pretty(), args.out.as_deref())
}

fn examples(args: &ExamplesArgs) -> Result<(), Failure> {
    let Some(name) = &args.name else {
        return emit(&scenarios::BUILTIN_NAMES.join("\n"), args.out.as_deref());
    };
    let mut s = scenarios::builtin(name)?;
    if let Some(m) = args.model {
        s = s.with_model(m.into());
    }
    if args.case >= s.cases.len() {
        return Err(Failure::Usage(format!("`{name}` has {} cases", s.cases.len())));
    }
    let file = ScenarioFile::from_scenario(&s, args.case)?;
    emit(&file.to_string_pretty(), args.out.as_deref())
}

fn axioms(args: &AxiomsArgs) -> Result<(), Failure> {
    let cfg = AxiomConfig { trials: args.trials, dims: args.dims.clone(), seed: args.seed, tolerance: args.tol };
    let models: Vec<Model> = match args.model {
        Some(m) => vec![m.into()],
        None => Model::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for model in models {
        reports.extend(run_axiom_suite(model, &cfg)?);
    }
    let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
    emit(&text, args.out.as_deref())?;
    let unexpected: Vec<String> =
        reports.iter().filter(|r| !r.as_expected()).map(|r| format!("{} under {}", r.axiom.name(), r.model)).collect();
    if unexpected.is_empty() {
        Ok(())
    } else {
        Err(Failure::UnexpectedVerdict(unexpected.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Examples(a) => examples(a),
        Command::Axioms(a) => axioms(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e @ CtcError::NotCvLocal { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NOT_CV_LOCAL)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::UnexpectedVerdict(msg)) => {
            eprintln!("unexpected axiom verdicts: {msg}");
            ExitCode::from(EXIT_UNEXPECTED_VERDICT)
        }
    }
}
