//! The `prespa-sim` command line: argument parsing, configuration loading and
//! the data/metadata files written by each run.

mod commands;
mod config;

pub use commands::RunOutput;
pub use config::{
    parse_duration_us, BudgetSection, Cardinal, CavityInput, ChiChannelKind, ChiSection, GrapeSection, GrapeTask, HeatingSection,
    LifetimeSection, Profile, RamseySection, RatesSection, RunConfig, SpectroscopySection, Spectroscopy2dSection, SteadySection, TrajectorySection,
    WignerSection, CONFIG_VERSION,
};

use crate::error::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const THREADS_ENV: &str = "PRESPA_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "prespa-sim", version, about = "Simulations of a parity-recovering bosonic memory")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration, merged over the selected defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, value_name = "PROFILE")]
    defaults: Option<Profile>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to PRESPA_SIM_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory receiving data.csv and meta.json.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cardinal-state fidelity decay and fitted lifetimes.
    Lifetime {
        /// ideal-prespa, free-t4c, free-fock or full-noise
        #[arg(long, value_parser = kebab::<crate::experiments::LifetimeMode>)]
        mode: Option<crate::experiments::LifetimeMode>,
        /// optimal or experimental
        #[arg(long, value_parser = kebab::<crate::experiments::CodeChoice>)]
        code: Option<crate::experiments::CodeChoice>,
        /// Longest hold time, e.g. 2000us or 2ms.
        #[arg(long, value_parser = parse_duration_us)]
        tmax: Option<f64>,
        #[arg(long, value_parser = parse_duration_us)]
        tstep: Option<f64>,
        /// mathematical or unitary
        #[arg(long, value_parser = kebab::<crate::experiments::DecodePath>)]
        decode: Option<crate::experiments::DecodePath>,
    },
    /// Monte Carlo jump statistics against the closed-form distribution.
    Trajectory {
        #[arg(long)]
        kappa_t: Option<f64>,
        #[arg(long)]
        ntraj: Option<usize>,
    },
    /// Multi-tone drive rates for each conversion path.
    Rates,
    /// Photon-number-resolved transmon spectroscopy.
    Spectroscopy {
        #[arg(long, value_parser = parse_duration_us)]
        hold: Option<f64>,
    },
    /// Two-tone Raman spectroscopy map.
    Spectroscopy2d {
        #[arg(long)]
        init_fock: Option<usize>,
    },
    /// Parity Ramsey fringes of a code state.
    Ramsey,
    /// Wigner function on a square grid.
    Wigner,
    /// Process matrix of a correction cycle.
    Chi {
        /// identity, ideal-prespa or comb
        #[arg(long, value_parser = kebab::<ChiChannelKind>)]
        channel: Option<ChiChannelKind>,
        #[arg(long, value_parser = parse_duration_us)]
        duration: Option<f64>,
    },
    /// Long-time photon distribution under the driven comb model.
    Steady {
        #[arg(long, value_parser = parse_duration_us)]
        time: Option<f64>,
    },
    /// Cavity heating versus mixing-tone strength.
    Heating,
    /// Optimal-control pulse synthesis.
    Grape {
        /// prepare or decode
        #[arg(long, value_parser = kebab::<GrapeTask>)]
        task: Option<GrapeTask>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Decoherence budget totals.
    Budget {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Fast invariant checks.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Lifetime { .. } => "lifetime",
            Command::Trajectory { .. } => "trajectory",
            Command::Rates => "rates",
            Command::Spectroscopy { .. } => "spectroscopy",
            Command::Spectroscopy2d { .. } => "spectroscopy2d",
            Command::Ramsey => "ramsey",
            Command::Wigner => "wigner",
            Command::Chi { .. } => "chi",
            Command::Steady { .. } => "steady",
            Command::Heating => "heating",
            Command::Grape { .. } => "grape",
            Command::Budget { .. } => "budget",
            Command::Validate => "validate",
        }
    }

    fn apply(&self, cfg: &mut RunConfig) {
        match self {
            Command::Lifetime { mode, code, tmax, tstep, decode } => {
                let s = &mut cfg.lifetime;
                s.mode = mode.unwrap_or(s.mode);
                s.tmax = tmax.unwrap_or(s.tmax);
                s.tstep = tstep.unwrap_or(s.tstep);
                s.decode = decode.unwrap_or(s.decode);
                cfg.code = code.unwrap_or(cfg.code);
            }
            Command::Trajectory { kappa_t, ntraj } => {
                cfg.trajectory.kappa_t = kappa_t.unwrap_or(cfg.trajectory.kappa_t);
                cfg.trajectory.ntraj = ntraj.unwrap_or(cfg.trajectory.ntraj);
            }
            Command::Spectroscopy { hold } => cfg.spectroscopy.hold = hold.unwrap_or(cfg.spectroscopy.hold),
            Command::Spectroscopy2d { init_fock } => cfg.spectroscopy2d.init_fock = init_fock.unwrap_or(cfg.spectroscopy2d.init_fock),
            Command::Chi { channel, duration } => {
                cfg.chi.channel = channel.unwrap_or(cfg.chi.channel);
                cfg.chi.duration = duration.unwrap_or(cfg.chi.duration);
            }
            Command::Grape { task, max_iterations } => {
                cfg.grape.task = task.unwrap_or(cfg.grape.task);
                cfg.grape.adam.max_iterations = max_iterations.unwrap_or(cfg.grape.adam.max_iterations);
            }
            Command::Budget { input } => {
                if input.is_some() {
                    cfg.budget.input.clone_from(input);
                }
            }
            Command::Steady { time } => cfg.steady.time = time.unwrap_or(cfg.steady.time),
            Command::Rates | Command::Ramsey | Command::Wigner | Command::Heating | Command::Validate => {}
        }
    }

    fn run(&self, cfg: &RunConfig) -> Result<RunOutput> {
        run_command(self.name(), cfg)
    }
}

/// Subcommand names accepted by [`run_command`].
pub const COMMANDS: [&str; 13] =
    ["lifetime", "trajectory", "rates", "spectroscopy", "spectroscopy2d", "ramsey", "wigner", "chi", "steady", "heating", "grape", "budget", "validate"];

/// Runs one subcommand on a resolved configuration without touching the
/// filesystem (except `budget`, which may read `budget.input`).
pub fn run_command(name: &str, cfg: &RunConfig) -> Result<RunOutput> {
    match name {
        "lifetime" => commands::lifetime(cfg),
        "trajectory" => commands::trajectory(cfg),
        "rates" => commands::rates(cfg),
        "spectroscopy" => commands::spectroscopy(cfg),
        "spectroscopy2d" => commands::spectroscopy2d(cfg),
        "ramsey" => commands::ramsey(cfg),
        "wigner" => commands::wigner_map(cfg),
        "chi" => commands::chi(cfg),
        "steady" => commands::steady(cfg),
        "heating" => commands::heating(cfg),
        "grape" => commands::grape_run(cfg),
        "budget" => commands::budget(cfg),
        "validate" => commands::validate(cfg),
        other => Err(Error::InvalidInput(format!("unknown command '{other}'"))),
    }
}

/// Hex SHA-256 of the compact JSON form of the resolved configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn load_config(global: &GlobalArgs) -> Result<RunConfig> {
    let profile = global.defaults.unwrap_or(Profile::Desk);
    match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text, profile)
        }
        None => Ok(RunConfig::profile(profile)),
    }
}

fn write_outputs(dir: &Path, command: &str, cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    std::fs::write(dir.join("data.csv"), &out.csv).map_err(|e| Error::Io(e.to_string()))?;
    let meta = serde_json::json!({
        "command": command,
        "figure": out.figure,
        "version": env!("CARGO_PKG_VERSION"),
        "config_version": cfg.version,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "summary": out.summary,
        "config": cfg,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))? + "\n";
    std::fs::write(dir.join("meta.json"), text).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<Option<String>> {
    let mut cfg = load_config(&cli.global)?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    cli.command.apply(&mut cfg);
    cfg.validate()?;
    let threads = thread_count(cli.global.threads)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Config(e.to_string()))?;
    let out = pool.install(|| cli.command.run(&cfg))?;
    let name = cli.command.name();
    let dir = cli.global.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("runs").join(name));
    write_outputs(&dir, name, &cfg, &out)?;
    let _ = write!(stdout, "{}", out.report);
    let _ = writeln!(stdout, "wrote {}", dir.display());
    Ok(out.failure)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 for usage and configuration errors,
/// 3 for numerical failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, &mut std::io::stdout()) {
        Ok(None) => 0,
        Ok(Some(failure)) => {
            eprintln!("error: {failure}");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
