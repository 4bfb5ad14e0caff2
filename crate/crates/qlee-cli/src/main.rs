//! `qlee` — quantum circuit simulation of 2D linearized Euler flow with
//! classical cross-checks.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical-guard
//! refusal, 3 forward-Euler divergence detected.

use std::path::PathBuf;
use std::process::exit;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qlee::diffops::BoundaryCondition;
use qlee::lee::LeeScheme;
use qlee_cli::commands;
use qlee_cli::config::ExperimentConfig;
use qlee_cli::report::to_json;

#[derive(Parser)]
#[command(
    name = "qlee",
    version,
    about = "Quantum circuits for 2D linearized Euler flow, with classical validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Central,
    Updown,
}

impl From<SchemeArg> for LeeScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Central => LeeScheme::Central,
            SchemeArg::Updown => LeeScheme::Updown,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Dirichlet,
    Periodic,
}

impl From<BcArg> for BoundaryCondition {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
            BcArg::Periodic => BoundaryCondition::Periodic,
        }
    }
}

/// Flags shared by the config-driven subcommands.
#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the Trotter step size.
    #[arg(long)]
    tau: Option<f64>,
    /// Override the number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the spatial scheme.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Override the boundary condition.
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
}

impl ConfigArgs {
    fn load(&self) -> qlee::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(tau) = self.tau {
            cfg.tau = tau;
        }
        if let Some(steps) = self.steps {
            cfg.steps = steps;
        }
        if let Some(scheme) = self.scheme {
            cfg.scheme = scheme.into();
        }
        if let Some(bc) = self.bc {
            cfg.bc = bc.into();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Compute the exact reference evolution and report L2 errors
    /// (auto-disabled above the oracle size guard).
    #[arg(long)]
    oracle: bool,
    /// Write the one-step circuit in text form to this path.
    #[arg(long)]
    dump_circuit: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Override the forward-Euler step size.
    #[arg(long)]
    fdm_tau: Option<f64>,
    /// Write the one-step circuit in text form to this path.
    #[arg(long)]
    dump_circuit: Option<PathBuf>,
}

#[derive(Args)]
struct GateCountArgs {
    /// Smallest per-axis qubit count in the sweep.
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    /// Largest per-axis qubit count in the sweep.
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Spatial scheme (default: central, or the config's value).
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Boundary condition (default: dirichlet, or the config's value).
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    /// Optional config supplying scheme/bc and the background-flow value.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Also measure the true spectral-norm step error (small grids only).
    #[arg(long)]
    measure: bool,
}

#[derive(Args)]
struct ObstacleCheckArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Mask file overriding the config's obstacle source.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the quantum evolution; write CSV snapshots and a JSON report.
    Simulate(SimulateArgs),
    /// Quantum vs forward Euler vs exact propagation, as a per-time L2 table.
    Compare(CompareArgs),
    /// Gate tallies of the step circuit over a grid-size sweep, with a fit.
    GateCount(GateCountArgs),
    /// Evaluate the a-priori one-step error bound.
    Bound(BoundArgs),
    /// Inspect obstacle cells and corrections; run the impermeability test.
    ObstacleCheck(ObstacleCheckArgs),
}

fn main() {
    exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let requested = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if requested { 0 } else { 1 };
        }
    };
    let started = Instant::now();
    match dispatch(cli.command) {
        Ok(code) => {
            eprintln!("completed in {:.2}s", started.elapsed().as_secs_f64());
            code
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}

/// Map failures onto the documented exit codes: guard refusals are 2,
/// everything else (config, parse, IO, unsupported combinations) is 1.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<qlee::Error>() {
            return match e {
                qlee::Error::GuardExceeded { .. }
                | qlee::Error::NonConservative { .. }
                | qlee::Error::PowerIterationDiverged { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn dispatch(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Simulate(args) => {
            let mut cfg = args.common.load()?;
            if args.oracle {
                cfg.oracle = true;
            }
            let out = commands::simulate::run(&cfg, args.dump_circuit.as_deref())?;
            println!(
                "wrote {} snapshot files and report.json to {}",
                out.snapshot_files,
                out.output_dir.display()
            );
            Ok(0)
        }
        Command::Compare(args) => {
            let mut cfg = args.common.load()?;
            if let Some(ft) = args.fdm_tau {
                cfg.fdm_tau = Some(ft);
            }
            let out = commands::compare::run(&cfg, args.dump_circuit.as_deref())?;
            println!(
                "wrote compare.csv and report.json to {}",
                out.output_dir.display()
            );
            if out.report.fdm_diverged {
                let step = out.report.fdm_diverged_at_step.unwrap_or(0);
                let time = out.report.fdm_diverged_at_time.unwrap_or(0.0);
                println!("FDM flagged divergent at step {step} (t = {time})");
                Ok(3)
            } else {
                Ok(0)
            }
        }
        Command::GateCount(args) => {
            let cfg = match &args.config {
                Some(path) => Some(ExperimentConfig::load(path)?),
                None => None,
            };
            let scheme = args
                .scheme
                .map(LeeScheme::from)
                .or(cfg.as_ref().map(|c| c.scheme))
                .unwrap_or(LeeScheme::Central);
            let bc = args
                .bc
                .map(BoundaryCondition::from)
                .or(cfg.as_ref().map(|c| c.bc))
                .unwrap_or(BoundaryCondition::Dirichlet);
            let u_bar = cfg.as_ref().map_or(1.0, |c| c.u_bar);
            let report = commands::gate_count::run(args.n_min, args.n_max, scheme, bc, u_bar)?;
            print!("{}", to_json(&report));
            Ok(0)
        }
        Command::Bound(args) => {
            let cfg = args.common.load()?;
            let report = commands::bound::run(&cfg, args.measure)?;
            print!("{}", to_json(&report));
            Ok(0)
        }
        Command::ObstacleCheck(args) => {
            let cfg = args.common.load()?;
            let text = commands::obstacle_check::run(&cfg, args.mask.as_deref())?;
            print!("{text}");
            Ok(0)
        }
    }
}
