mod plot;

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use lcm_duo::exactgeom::Rational;
use lcm_duo::model::RobotModel;
use lcm_duo::protocols::equiv::{run_equiv, EquivError, ScheduleFamily, Simulator};
use lcm_duo::registry::{build_algorithm, check_predicate, run_scenario, ComponentSpec, PredicateParams, RegistryError, Scenario};
use lcm_duo::sched::Atomicity;
use lcm_duo::traceio::{read_trace, write_trace, TraceIoError};

/// Exit code for operational errors; 0, 1 and 2 carry verdicts.
const EXIT_ERROR: u8 = 3;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("scenario {path}: {source}")]
    Scenario { path: PathBuf, source: serde_json::Error },
    #[error("trace {path}: {source}")]
    Trace { path: PathBuf, source: TraceIoError },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "lcm-duo", version, about = "Exact two-robot Look-Compute-Move runs and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write its trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Trace destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a predicate on a trace. Exit code 0 holds, 1 fails, 2 undecided.
    Check {
        #[arg(long)]
        trace: PathBuf,
        /// One of dmsd, rdv1, am, rdam, sm, mcv, sro, cge.
        #[arg(long)]
        predicate: String,
        /// Target distance for mcv, e.g. 1/1024.
        #[arg(long)]
        eps: Option<String>,
        /// Expansion steps for cge; defaults to the number of rounds.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run a simulator over seeded schedules and check the projection.
    Equiv(EquivArgs),
    /// Draw a trace as SVG.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SimulatorArg {
    #[value(name = "sim.handshake")]
    Handshake,
    #[value(name = "sim.a")]
    SimA,
    #[value(name = "sim.collapse")]
    Collapse,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Rsynch,
    Asynch,
    Fsynch,
}

#[derive(Args)]
struct EquivArgs {
    #[arg(long, value_enum)]
    simulator: SimulatorArg,
    /// Simulated algorithm id.
    #[arg(long)]
    algorithm: String,
    /// Algorithm parameters as `name=value`, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Target model for sim.collapse.
    #[arg(long, default_value = "FSTA")]
    target: String,
    /// Schedule family; the simulator's own family when omitted.
    #[arg(long, value_enum)]
    schedule: Option<FamilyArg>,
    /// Turns, cycles per robot or rounds, depending on the family.
    #[arg(long)]
    length: Option<u32>,
    /// Atomicity class for asynch schedules.
    #[arg(long, default_value = "NONE")]
    class: String,
    #[arg(long, default_value_t = 50)]
    seeds: u64,
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::File { path: path.to_path_buf(), source }),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::File { path: "<stdout>".into(), source }),
    }
}

fn load_trace(path: &Path) -> Result<lcm_duo::engine::Trace, CliError> {
    let f = fs::File::open(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })?;
    read_trace(BufReader::new(f))
        .map(|(t, _)| t)
        .map_err(|source| CliError::Trace { path: path.to_path_buf(), source })
}

fn cmd_run(scenario: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let text = read_file(scenario)?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|source| CliError::Scenario { path: scenario.to_path_buf(), source })?;
    let sc: Scenario = serde_json::from_value(raw.clone())
        .map_err(|source| CliError::Scenario { path: scenario.to_path_buf(), source })?;
    let trace = run_scenario(&sc)?;
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace, Some(&raw)).map_err(|source| CliError::Trace { path: "<output>".into(), source })?;
    write_out(out, &buf)?;
    Ok(0)
}

fn cmd_check(trace: &Path, predicate: &str, eps: Option<&str>, steps: Option<usize>) -> Result<u8, CliError> {
    let t = load_trace(trace)?;
    let eps = eps
        .map(|s| s.parse::<Rational>().map_err(|e| CliError::Usage(format!("--eps: {e}"))))
        .transpose()?;
    let rep = check_predicate(&t, predicate, &PredicateParams { eps, steps })?;
    println!("{}: {}", rep.predicate, rep.verdict);
    if let Some(w) = &rep.witness {
        if w.from == w.to {
            println!("  at t = {}", w.from);
        } else {
            println!("  during [{}, {}]", w.from, w.to);
        }
        println!("  observed: {}", w.observed);
        println!("  expected: {}", w.expected);
    }
    Ok(rep.verdict.exit_code() as u8)
}

fn cmd_equiv(a: &EquivArgs) -> Result<u8, CliError> {
    let mut spec = ComponentSpec::new(a.algorithm.clone());
    for p in &a.params {
        let (name, value) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param {p:?} is not NAME=VALUE")))?;
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        spec = spec.with(name, value);
    }
    let inner = build_algorithm(&spec)?;
    let sim = match a.simulator {
        SimulatorArg::Handshake => Simulator::Handshake,
        SimulatorArg::SimA => Simulator::SimA,
        SimulatorArg::Collapse => {
            let m: RobotModel = a.target.parse().map_err(CliError::Usage)?;
            Simulator::Collapse(m)
        }
    };
    let family = match a.schedule {
        None => None,
        Some(FamilyArg::Rsynch) => Some(ScheduleFamily::Rsynch { turns: a.length.unwrap_or(18) }),
        Some(FamilyArg::Fsynch) => Some(ScheduleFamily::Fsynch { rounds: a.length.unwrap_or(8) }),
        Some(FamilyArg::Asynch) => {
            let class: Atomicity = a.class.parse().map_err(CliError::Usage)?;
            Some(ScheduleFamily::Asynch { cycles: a.length.unwrap_or(24), class })
        }
    };
    let summary = run_equiv(sim, inner, family, a.seeds)?;
    println!("{summary}");
    for (seed, why) in &summary.failures {
        println!("  seed {seed}: {why}");
    }
    Ok(if summary.passed() { 0 } else { 1 })
}

fn cmd_plot(trace: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let t = load_trace(trace)?;
    write_out(out, plot::render_svg(&t).as_bytes())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { scenario, out } => cmd_run(scenario, out.as_deref()),
        Command::Check { trace, predicate, eps, steps } => cmd_check(trace, predicate, eps.as_deref(), *steps),
        Command::Equiv(args) => cmd_equiv(args),
        Command::Plot { trace, out } => cmd_plot(trace, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
