//! `laneform`: runs the corridor models from a JSON config and writes CSV and
//! JSON artifacts plus a manifest.

mod artifacts;
mod commands;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use laneform_core::{Error, Scenario, ScenarioConfig};

use artifacts::{run_id, Artifacts, RunManifest};
use commands::Summary;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "laneform", version, about = "Lane formation in bidirectional corridor flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles and sweeps; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Continuum run with the configured scheme.
    Pde,
    /// Master-equation run of the occupation probabilities.
    Lattice,
    /// Stochastic ensemble of hard-exclusion trajectories.
    Sample,
    /// Steady lane profile and phase-plane curves.
    Stationary,
    /// Lattice against PDE under refinement.
    Compare,
    /// Built-in corridor preset (I, II or III) run through the continuum solver.
    Scenario { name: String },
    /// One run per value of a scalar config key.
    Sweep {
        /// `c`, a parameter name such as `gamma0`, or a dotted config path.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
        /// Run kind for each value.
        #[arg(long, value_enum, default_value_t = RunKind::Pde)]
        run: RunKind,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RunKind {
    Pde,
    Lattice,
    Sample,
    Stationary,
    Compare,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Pde => "pde".into(),
            Command::Lattice => "lattice".into(),
            Command::Sample => "sample".into(),
            Command::Stationary => "stationary".into(),
            Command::Compare => "compare".into(),
            Command::Scenario { name } => format!("scenario {name}"),
            Command::Sweep { axis, values, run } => format!("sweep {run:?} {axis}=[{values}]").to_lowercase(),
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Params(_) | Error::Config(_) | Error::InitialRange { .. } | Error::Cfl { .. } => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_CONFIG };
        }
    }
    EXIT_NUMERICAL
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.command {
        Command::Scenario { name } => {
            if cli.config.is_some() {
                return Err(Error::Config("scenario runs use the built-in preset; drop --config".into()).into());
            }
            Scenario::parse(name)
                .ok_or_else(|| Error::Config(format!("unknown scenario {name:?}; expected I, II or III")))?
                .preset()
        }
        _ => {
            let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::from_json(&text).with_context(|| format!("config {}", path.display()))?
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn run_kind(kind: RunKind, cfg: &ScenarioConfig, out: &Artifacts, dir: &Path, workers: usize) -> Result<Summary> {
    match kind {
        RunKind::Pde => commands::pde(cfg, out, dir),
        RunKind::Lattice => commands::lattice(cfg, out, dir),
        RunKind::Sample => commands::sample(cfg, out, dir, workers),
        RunKind::Stationary => commands::stationary(cfg, out, dir),
        RunKind::Compare => commands::compare(cfg, out, dir),
    }
}

fn execute(cli: &Cli, cfg: &ScenarioConfig, out: &Artifacts, workers: usize) -> Result<()> {
    let here = Path::new("");
    match &cli.command {
        Command::Pde | Command::Scenario { .. } => commands::pde(cfg, out, here).map(drop),
        Command::Lattice => commands::lattice(cfg, out, here).map(drop),
        Command::Sample => commands::sample(cfg, out, here, workers).map(drop),
        Command::Stationary => commands::stationary(cfg, out, here).map(drop),
        Command::Compare => commands::compare(cfg, out, here).map(drop),
        Command::Sweep { axis, values, run } => {
            let values = sweep::parse_values(values)?;
            // Ensembles inside a sweep run single-threaded; the sweep itself is parallel.
            sweep::sweep(cfg, axis, &values, workers, out, |c, dir| run_kind(*run, c, out, dir, 1))
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()).into());
    }
    let command = cli.command.name();
    let config_json = cfg.to_json();
    let out = Artifacts::new(&cli.out, run_id(&command, &config_json, cfg.seed, ""))
        .with_context(|| format!("creating {}", cli.out.display()))?;
    let started = now();
    out.json("config.json", serde_json::to_value(&cfg)?)?;
    log::info!("run {} ({command}) writing to {}", out.run_id(), cli.out.display());

    let result = execute(cli, &cfg, &out, workers);
    let manifest = RunManifest {
        run_id: out.run_id().to_string(),
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: serde_json::to_value(&cfg)?,
        started,
        finished: now(),
        status: if result.is_ok() { "ok".into() } else { "failed".into() },
        error: result.as_ref().err().map(|e| format!("{e:#}")),
        files: out.inventory()?,
    };
    out.write_manifest(&manifest).context("writing manifest")?;
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
