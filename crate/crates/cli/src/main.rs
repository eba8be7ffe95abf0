//! `ipid`: run the controller bench from the command line.
//!
//! Exit codes: 0 success, 1 check failed, 2 usage or domain error,
//! 3 divergence.

mod input;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipid_core::equivalence::{map_gains, verify_equivalence};
use ipid_core::scenarios::{builtin, run_scenario, ControllerSpec, Scenario, BUILTIN_NAMES};
use ipid_core::tuning::{identify_broida, tune_pi_broida_with_floor, DEFAULT_DEAD_TIME_FLOOR};
use ipid_core::{Error, IntelligentConfig, IntelligentKind, NoiseModel, RunConfig, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEFAULT_H: f64 = 0.01;

#[derive(Parser, Debug)]
#[command(name = "ipid", version, about = "Sampled PID vs intelligent PID bench")]
struct Cli {
    /// Sampling period in seconds (overrides scenario and config values).
    #[arg(long = "h", global = true)]
    h: Option<f64>,
    /// Seed for measurement noise and random test sequences.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a builtin scenario, a config file, or every builtin.
    Scenario {
        /// Builtin name or path to a TOML config.
        name: Option<String>,
        /// Run every builtin scenario.
        #[arg(long, conflicts_with = "name")]
        all: bool,
        /// Add Gaussian measurement noise with this standard deviation.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Print the classic gains equivalent to an intelligent controller.
    MapGains {
        kind: String,
        #[command(flatten)]
        gains: GainArgs,
    },
    /// Check classic vs intelligent outputs on a random error sequence.
    Verify {
        kind: String,
        #[command(flatten)]
        gains: GainArgs,
        #[arg(long, default_value_t = 1000)]
        n_samples: usize,
    },
    /// Fit a first-order plus dead-time model to a step response CSV.
    Identify {
        csv: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        step_amplitude: f64,
    },
    /// Open-loop run of the plant described by `--config`.
    Simulate,
}

#[derive(Args, Debug)]
struct GainArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long = "KP", default_value_t = 0.0, allow_negative_numbers = true)]
    kp: f64,
    #[arg(long = "KI", default_value_t = 0.0, allow_negative_numbers = true)]
    ki: f64,
    #[arg(long = "KD", default_value_t = 0.0, allow_negative_numbers = true)]
    kd: f64,
}

/// A command failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn check(msg: impl Into<String>) -> Self {
        Failure { code: 1, msg: msg.into() }
    }

    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } => 3,
            Error::NotSettled(_) | Error::DegenerateResponse => 1,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(format!("i/o error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Scenario { name, all, noise } => cmd_scenario(cli, name.as_deref(), *all, *noise),
        Command::MapGains { kind, gains } => cmd_map_gains(cli, kind, gains),
        Command::Verify { kind, gains, n_samples } => cmd_verify(cli, kind, gains, *n_samples),
        Command::Identify { csv, step_amplitude } => cmd_identify(csv, *step_amplitude),
        Command::Simulate => cmd_simulate(cli),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_toml(&text)?)
}

fn out_dir(cli: &Cli, config: Option<&RunConfig>) -> Result<PathBuf, Failure> {
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| config.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn apply_overrides(cli: &Cli, mut s: Scenario, noise: Option<f64>) -> Result<Scenario, Failure> {
    if let Some(h) = cli.h {
        s.h = h;
    }
    if let Some(std) = noise {
        s.noise = NoiseModel::Gaussian { std, seed: cli.seed.unwrap_or(0) };
    } else if let Some(seed) = cli.seed {
        s.noise = s.noise.with_seed(seed);
    }
    s.validate()?;
    Ok(s)
}

fn cmd_scenario(cli: &Cli, name: Option<&str>, all: bool, noise: Option<f64>) -> CmdResult {
    let mut config = None;
    let scenarios: Vec<Scenario> = if all {
        BUILTIN_NAMES.iter().map(|n| builtin(n).expect("builtin names resolve")).collect()
    } else {
        let source = match (name, &cli.config) {
            (Some(n), _) => n.to_string(),
            (None, Some(p)) => p.display().to_string(),
            (None, None) => return Err(Failure::usage("give a scenario name, --all, or --config")),
        };
        let s = match builtin(&source) {
            Some(s) => s,
            None if Path::new(&source).is_file() => {
                let c = load_config(Path::new(&source))?;
                let s = c.to_scenario()?;
                config = Some(c);
                s
            }
            None => {
                return Err(Failure::usage(format!(
                    "unknown scenario '{source}'; builtins are {}",
                    BUILTIN_NAMES.join(", ")
                )))
            }
        };
        vec![s]
    };
    let scenarios = scenarios.into_iter().map(|s| apply_overrides(cli, s, noise)).collect::<Result<Vec<_>, _>>()?;
    let dir = out_dir(cli, config.as_ref())?;

    let outcomes: Vec<CmdResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios.iter().map(|s| scope.spawn(|| run_and_write(s, &dir))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Failure::usage("worker panicked")))).collect()
    });
    let mut worst: Option<Failure> = None;
    for outcome in outcomes {
        if let Err(f) = outcome {
            eprintln!("error: {f}");
            if worst.as_ref().map_or(true, |w| f.code > w.code) {
                worst = Some(f);
            }
        }
    }
    match worst {
        Some(f) => Err(Failure { code: f.code, msg: "one or more scenarios failed".into() }),
        None => Ok(()),
    }
}

fn run_and_write(s: &Scenario, dir: &Path) -> CmdResult {
    let run = run_scenario(s)?;
    output::write_run(dir, s, &run)?;
    println!("{}: wrote {}", s.name, dir.join(format!("{}.csv", s.name)).display());
    match run.diverged_at {
        Some(t) => Err(Failure { code: 3, msg: format!("{}: diverged at t = {t} s, partial trajectory written", s.name) }),
        None => Ok(()),
    }
}

fn intelligent_config(kind: &str, g: &GainArgs) -> Result<(IntelligentKind, IntelligentConfig), Failure> {
    let kind: IntelligentKind = kind.parse()?;
    let cfg = IntelligentConfig::for_kind(kind, g.alpha, g.kp, g.ki, g.kd)?;
    Ok((kind, cfg))
}

fn cmd_map_gains(cli: &Cli, kind: &str, gains: &GainArgs) -> CmdResult {
    let h = cli.h.unwrap_or(DEFAULT_H);
    let (kind, cfg) = intelligent_config(kind, gains)?;
    let corr = map_gains(kind, &cfg, h)?;
    for line in corr.key_value_lines() {
        println!("{line}");
    }
    Ok(())
}

fn cmd_verify(cli: &Cli, kind: &str, gains: &GainArgs, n: usize) -> CmdResult {
    if n == 0 {
        return Err(Failure::usage("--n-samples must be at least 1"));
    }
    let h = cli.h.unwrap_or(DEFAULT_H);
    let (kind, cfg) = intelligent_config(kind, gains)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
    let e: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let report = verify_equivalence(kind, &cfg, h, &TimeSeries::new(h, 0.0, e)?)?;
    println!("samples={}", report.samples);
    println!("max_abs_diff={:e}", report.max_abs_diff);
    println!("max_abs_u={:e}", report.max_abs_u);
    println!("tolerance={:e}", report.tolerance());
    if report.passes() {
        println!("result=pass");
        Ok(())
    } else {
        println!("result=fail");
        Err(Failure::check("classic and intelligent outputs differ beyond tolerance"))
    }
}

fn cmd_identify(path: &Path, amplitude: f64) -> CmdResult {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let response = input::read_step_response(&text).map_err(Failure::usage)?;
    let y0 = response.values()[0];
    let fit = identify_broida(&response, amplitude, y0)?;
    if fit.delay < DEFAULT_DEAD_TIME_FLOOR {
        eprintln!(
            "warning: identified dead time {} s is below the floor {DEFAULT_DEAD_TIME_FLOOR} s; PI gains use the floor",
            fit.delay
        );
    }
    let gains = tune_pi_broida_with_floor(&fit, DEFAULT_DEAD_TIME_FLOOR)?;
    println!("k={}", fit.gain);
    println!("T={}", fit.time_constant);
    println!("tau={}", fit.delay);
    println!("kp={}", gains.kp);
    println!("ki={}", gains.ki);
    Ok(())
}

fn cmd_simulate(cli: &Cli) -> CmdResult {
    let path = cli.config.as_ref().ok_or_else(|| Failure::usage("simulate needs --config"))?;
    let config = load_config(path)?;
    let mut s = config.to_scenario()?;
    s.controller = ControllerSpec::OpenLoop;
    let s = apply_overrides(cli, s, None)?;
    let dir = out_dir(cli, Some(&config))?;
    let run = run_scenario(&s)?;
    output::write_trajectory(&dir, &s.name, &run.trajectory)?;
    if let Some(y) = run.trajectory.output.last() {
        println!("final_output={y}");
    }
    match run.diverged_at {
        Some(t) => Err(Failure { code: 3, msg: format!("diverged at t = {t} s, partial trajectory written") }),
        None => Ok(()),
    }
}
