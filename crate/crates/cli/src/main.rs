use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod eval;
mod output;

use commands::Axis;
use config::{Config, EtaConfig, EtaPreset, Resolved, Scenario};
use error::CliError;

/// Steady states, trajectories and parameter sweeps of repeated feedback loops.
#[derive(Parser)]
#[command(name = "qfeedback", version, about)]
struct Cli {
    /// Worker threads for ensembles and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state, spectral gap and closed-form comparison of one configuration.
    Steady(RunArgs),
    /// Seeded ensemble of conditional trajectories of a measurement loop.
    Trajectories(RunArgs),
    /// Metrics over a one- or two-parameter grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Swept parameter as name=start:stop:count; give at most two.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
    },
    /// Runs every self-check; exits 1 if any fails.
    Validate,
}

#[derive(Clone, Copy, ValueEnum)]
enum EtaFlag {
    Noisy,
    Clean,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config, or the sidecar of an earlier run; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    #[arg(long)]
    d: Option<usize>,
    /// Transmissivity of both couplings.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    /// Depolarising strength (1 = no noise).
    #[arg(long)]
    lambda: Option<f64>,
    /// Amplitude-damping strength (0 = no damping).
    #[arg(long)]
    gamma: Option<f64>,
    /// Controller preset.
    #[arg(long, value_enum, conflicts_with = "eta0")]
    eta: Option<EtaFlag>,
    /// Qubit controller diag(eta0, 1 - eta0).
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    phi1: Option<f64>,
    #[arg(long)]
    phi2: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    ntraj: Option<usize>,
    /// Output CSV; the resolved run is recorded next to it as <out>.meta.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<Resolved, CliError> {
        let base = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        let eta = match (self.eta, self.eta0) {
            (_, Some(x)) => Some(EtaPreset::Eta0(x)),
            (Some(EtaFlag::Noisy), None) => Some(EtaPreset::Noisy),
            (Some(EtaFlag::Clean), None) => Some(EtaPreset::Clean),
            (None, None) => None,
        };
        let flags = Config {
            scenario: self.scenario,
            d: self.d,
            tau: self.tau,
            tau1: self.tau1,
            tau2: self.tau2,
            lambda: self.lambda,
            gamma: self.gamma,
            eta: eta.map(|preset| EtaConfig { preset }),
            chi: self.chi,
            phi1: self.phi1,
            phi2: self.phi2,
            a: self.a,
            b: self.b,
            seed: self.seed,
            steps: self.steps,
            ntraj: self.ntraj,
            ..Config::default()
        };
        base.overlay(flags).resolve()
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Steady(args) => commands::steady(&args.resolve()?, &args.out("qfeedback-steady.csv"))?,
        Command::Trajectories(args) => {
            commands::trajectories(&args.resolve()?, &args.out("qfeedback-trajectories.csv"))?
        }
        Command::Sweep { run, axes } => {
            let axes = axes.iter().map(|a| a.parse()).collect::<Result<Vec<Axis>, _>>()?;
            commands::sweep(&run.resolve()?, &axes, &run.out("qfeedback-sweep.csv"))?
        }
        Command::Validate => return Ok(commands::validate()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qfeedback: {e}");
            e.exit_code()
        }
    }
}
