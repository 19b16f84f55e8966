//! `mfcascade`: analytic curves, simulation and estimation runs from a
//! config file.
//!
//! Exit codes: 0 success, 2 invalid configuration or parameters, 3 domain
//! errors, 4 degenerate data, 6 I/O. `check` exits 0, 1 or 5 for a pass, fail
//! or undetermined overall verdict.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use mfcascade::renyi::Status;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mfcascade::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use mfcascade::Error as E;
        match self {
            CliError::Core(E::Domain(_) | E::Support(_) | E::Overflow(_)) => 3,
            CliError::Core(E::DegenerateData(_)) => 4,
            CliError::Core(_) | CliError::Config(_) => 2,
            CliError::Io(_) => 6,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mfcascade", version, about = "Multifractal OU cascades: analytic scaling and Monte Carlo estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic T(q), K(q), admissible range, b threshold and condition verdicts.
    Analytic(Common),
    /// Sample paths of X, Lambda_n and A_n and the dyadic masses of one replica.
    Simulate(Common),
    /// Partition and moment-scaling estimates against the analytic curve.
    Estimate(Common),
    /// Condition verdicts as JSON on stdout.
    Check(Common),
    /// Discrete Legendre transform of the analytic or a tabulated curve.
    Legendre(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    config: PathBuf,
    /// Output directory; must not exist unless --force.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    /// Worker threads for replica generation; does not affect results.
    #[arg(long)]
    threads: Option<usize>,
    /// Override a config value, e.g. --set cascade.n_layers=10.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve(c: &Common) -> Result<config::RunConfig, CliError> {
    let mut tree = config::load_tree(&c.config)?;
    for kv in &c.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set needs KEY=VALUE, got {kv:?}")))?;
        config::set_dotted(&mut tree, k.trim(), v.trim())?;
    }
    if let Some(s) = c.seed {
        config::set_dotted(&mut tree, "seed", &s.to_string())?;
    }
    if let Some(r) = c.replicas {
        config::set_dotted(&mut tree, "replicas", &r.to_string())?;
    }
    let cfg = config::resolve(tree)?;
    cfg.cascade_config().validate()?;
    Ok(cfg)
}

fn run(name: &str, c: &Common, f: fn(&config::RunConfig, &mut output::OutDir) -> Result<serde_json::Value, CliError>) -> Result<u8, CliError> {
    let start = Instant::now();
    let cfg = resolve(c)?;
    let dir = c.out.as_ref().ok_or_else(|| CliError::Config("--out is required".into()))?;
    let mut out = output::OutDir::create(dir, c.force)?;
    let results = f(&cfg, &mut out)?;
    out.finish(name, &cfg, results, start.elapsed().as_secs_f64())?;
    Ok(0)
}

fn check(c: &Common) -> Result<u8, CliError> {
    let start = Instant::now();
    let cfg = resolve(c)?;
    let (summary, overall) = commands::check(&cfg)?;
    // A closed stdout (e.g. piped into `head`) is not an error of the check.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).unwrap());
    if let Some(dir) = &c.out {
        let mut out = output::OutDir::create(dir, c.force)?;
        out.json("check.json", &summary)?;
        out.finish("check", &cfg, serde_json::json!({ "overall": summary["overall"] }), start.elapsed().as_secs_f64())?;
    }
    Ok(match overall {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Undetermined => 5,
    })
}

fn dispatch(cmd: &Command) -> Result<u8, CliError> {
    match cmd {
        Command::Analytic(c) => run("analytic", c, commands::analytic),
        Command::Simulate(c) => run("simulate", c, commands::simulate),
        Command::Estimate(c) => run("estimate", c, commands::estimate),
        Command::Legendre(c) => run("legendre", c, commands::legendre_cmd),
        Command::Check(c) => check(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Analytic(c) | Command::Simulate(c) | Command::Estimate(c) | Command::Check(c) | Command::Legendre(c) => c,
    };
    let result = match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(CliError::Config(format!("--threads: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
