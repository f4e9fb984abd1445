use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use strategem::figures::{evaluate, run_figure, Mode, RunSettings, FIGURES};
use strategem::mcengine::McOptions;
use strategem::report::{write_csv, write_json, write_table};
use strategem::scenarios::{
    parse_config, CaseKind, Criteria, Scenario, ScenarioParams, StrategyKind,
};
use strategem::validate::{run_validation, Goldens};
use strategem::Error;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(
    name = "strategem",
    version,
    about = "Power of category-based versus dimensional study designs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic and/or Monte Carlo power for one scenario or a configuration grid.
    Power(PowerArgs),
    /// Write the plot-ready CSV panels behind a figure.
    Figure(FigureArgs),
    /// Run the built-in oracle and calibration checks.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Master seed.
    #[arg(long, env = "STRATEGEM_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo replications per scenario.
    #[arg(long)]
    reps: Option<u64>,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Divide replication counts by ten.
    #[arg(long)]
    fast: bool,
    /// Print replication progress to standard error.
    #[arg(long)]
    progress: bool,
    /// Abort a Monte Carlo run after this many seconds.
    #[arg(long, value_name = "SECONDS")]
    time_budget: Option<f64>,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, value_name = "CASE")]
    case: Option<CaseKind>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Total sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Controls.
    #[arg(long)]
    n1: Option<usize>,
    /// Patients.
    #[arg(long)]
    n2: Option<usize>,
    /// Margin between the patient threshold and the control ceiling.
    #[arg(long)]
    d: Option<f64>,
    /// Diagnostic threshold.
    #[arg(long)]
    h: Option<f64>,
    /// Mixture weight.
    #[arg(long)]
    c: Option<f64>,
    /// Number of pathogenetic factors.
    #[arg(long = "N", value_name = "N")]
    n_factors: Option<usize>,
    /// Number of diagnostic measures.
    #[arg(long = "M", value_name = "M")]
    n_measures: Option<usize>,
    #[arg(long)]
    criteria: Option<Criteria>,
    #[arg(long)]
    sigma_eps: Option<f64>,
    #[arg(long)]
    sigma_delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = "both")]
    mode: Mode,
    /// Divide alpha by the number of tested targets.
    #[arg(long)]
    bonferroni: bool,
    /// Emit one JSON object per row instead of CSV.
    #[arg(long)]
    json: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Scenario grid document; replaces the scenario flags.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(value_name = "NAME", value_parser = clap::builder::PossibleValuesParser::new(FIGURES))]
    name: String,
    /// Directory receiving one CSV per panel.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Reduced replication counts; finishes in under a minute.
    #[arg(long)]
    quick: bool,
    /// Golden values to check against instead of the built-in set.
    #[arg(long, value_name = "PATH")]
    goldens: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn settings(run: &RunArgs, mode: Mode, bonferroni: bool) -> Result<RunSettings, Failure> {
    if run.reps == Some(0) {
        return Err(Failure::Usage("--reps must be positive".into()));
    }
    let time_budget = match run.time_budget {
        Some(s) if !(s > 0.0 && s.is_finite()) => {
            return Err(Failure::Usage(
                "--time-budget must be a positive number of seconds".into(),
            ))
        }
        s => s.map(Duration::from_secs_f64),
    };
    Ok(RunSettings {
        mode,
        reps: run.reps,
        seed: run.seed,
        fast: run.fast,
        bonferroni,
        mc: McOptions {
            workers: run.workers,
            time_budget,
            progress: run.progress,
        },
    })
}

fn scenarios_from_flags(a: &PowerArgs) -> Result<Vec<Scenario>, Failure> {
    if let Some(path) = &a.config {
        let set: Vec<&str> = [
            ("--case", a.case.is_some()),
            ("--strategy", a.strategy.is_some()),
            ("--n", a.n.is_some()),
            ("--n1", a.n1.is_some()),
            ("--n2", a.n2.is_some()),
            ("--d", a.d.is_some()),
            ("--h", a.h.is_some()),
            ("--c", a.c.is_some()),
            ("--N", a.n_factors.is_some()),
            ("--M", a.n_measures.is_some()),
            ("--criteria", a.criteria.is_some()),
            ("--sigma-eps", a.sigma_eps.is_some()),
            ("--sigma-delta", a.sigma_delta.is_some()),
            ("--alpha", a.alpha.is_some()),
        ]
        .into_iter()
        .filter_map(|(flag, given)| given.then_some(flag))
        .collect();
        if !set.is_empty() {
            return Err(Failure::Usage(format!(
                "{} cannot be combined with --config; set them in the document",
                set.join(", ")
            )));
        }
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        return parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    let Some(case) = a.case else {
        return Err(Failure::Usage(format!(
            "give --case (one of: {}) or --config",
            CaseKind::NAMES.join(", ")
        )));
    };
    let mut p = ScenarioParams::defaults(case);
    if let Some(v) = a.strategy {
        p.strategy = v;
    }
    if let Some(v) = a.n {
        p.n = v;
    }
    p.n1 = a.n1.or(p.n1);
    p.n2 = a.n2.or(p.n2);
    if let Some(v) = a.d {
        p.d = v;
    }
    if let Some(v) = a.h {
        p.h = v;
    }
    p.c = a.c.or(p.c);
    p.n_factors = a.n_factors.or(p.n_factors);
    p.n_measures = a.n_measures.or(p.n_measures);
    p.criteria = a.criteria.or(p.criteria);
    if let Some(v) = a.sigma_eps {
        p.sigma_eps = v;
    }
    if let Some(v) = a.sigma_delta {
        p.sigma_delta = v;
    }
    if let Some(v) = a.alpha {
        p.alpha = v;
    }
    Ok(vec![Scenario::from_params(p).map_err(usage)?])
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => fs::File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn cmd_power(a: PowerArgs) -> Result<(), Failure> {
    let scenarios = scenarios_from_flags(&a)?;
    if a.mode == Mode::Analytic && a.run.reps.is_some() {
        eprintln!("warning: --reps is ignored in analytic mode");
    }
    let settings = settings(&a.run, a.mode, a.bonferroni)?;
    let mut rows = Vec::new();
    for s in &scenarios {
        rows.extend(evaluate(s, &settings).map_err(|e| match e {
            Error::Configuration(_) => usage(e),
            e => e.into(),
        })?);
    }
    let out = open_output(a.out.as_deref())?;
    if a.json {
        write_json(out, &rows)?;
    } else {
        write_csv(out, &rows)?;
    }
    Ok(())
}

fn cmd_figure(a: FigureArgs) -> Result<(), Failure> {
    let settings = settings(&a.run, Mode::Both, false)?;
    let panels = run_figure(&a.name, &settings)?;
    fs::create_dir_all(&a.out)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", a.out.display())))?;
    for panel in panels {
        let path = a.out.join(format!("{}.csv", panel.name));
        let header: Vec<&str> = panel.header.iter().map(String::as_str).collect();
        write_table(open_output(Some(&path))?, &header, &panel.records)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let goldens = match &a.goldens {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
            Goldens::parse(&text)?
        }
        None => Goldens::embedded(),
    };
    let outcomes = run_validation(a.quick, &goldens);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut failed = Vec::new();
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:width$} {}", o.name, o.detail);
        if !o.passed {
            failed.push(o.name.as_str());
        }
    }
    println!(
        "{} of {} checks passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Power(a) => cmd_power(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
