//! `wta` command line: argument parsing, the `run` and `replay` commands,
//! and exit-code mapping.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::cost::{CostOptions, ThreatSense};
use crate::llm::{read_replay, render_assignment, reparse, write_replay, BackendConfig, FallbackSolver, ParseOptions};
use crate::mission::{run_mission, AssignerKind, BaselineMode, MissionConfig, MissionLog};
use crate::output::{emit_plot, write_metrics, write_trajectory_csv};
use crate::scenario::{load_scenario, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_BREACH: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FATAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "wta", version, about = "Closed-loop weapon-target assignment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one engagement and write its result files.
    Run(RunArgs),
    /// Re-parse the model replies stored in a replay log.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AssignerArg {
    Hungarian,
    Milp,
    Auction,
    Llm,
    #[value(name = "random_init", alias = "random-init")]
    RandomInit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SenseArg {
    Literal,
    Inverted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Hungarian,
    Milp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    Hungarian,
    Random,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario TOML file; the bundled baseline when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    assigner: AssignerArg,
    /// Chat-completion URL or mock://<mode>.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    /// Per-query timeout, seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 2)]
    max_retries: usize,
    #[arg(long, value_enum, default_value = "hungarian")]
    fallback: SolverArg,
    /// Reject out-of-range indices in replies instead of clipping them.
    #[arg(long)]
    strict_parse: bool,
    #[arg(long, value_enum, default_value = "hungarian")]
    baseline: BaselineArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epoch_dt: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    emit_plots: bool,
    #[arg(long, default_value_t = 0.0)]
    switch_penalty: f64,
    #[arg(long, value_enum)]
    coverage: Option<OnOff>,
    #[arg(long, value_enum, default_value = "inverted")]
    threat_sense: SenseArg,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `None` selects the bundled baseline scenario.
    pub scenario_path: Option<PathBuf>,
    pub mission: MissionConfig<f64>,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayConfig {
    pub log: PathBuf,
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Invocation {
    Run(RunConfig),
    Replay(ReplayConfig),
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Help, version, or a clap usage error; clap renders it.
    #[error("{0}")]
    Clap(#[from] clap::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("fatal: {0}")]
    Fatal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => EXIT_OK,
            CliError::Clap(_) | CliError::Usage(_) | CliError::Input(_) => EXIT_USAGE,
            CliError::Fatal(_) => EXIT_FATAL,
        }
    }
}

/// Parses `argv` (program name first) into a validated invocation.
pub fn parse_args<I, S>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    match Cli::try_parse_from(argv)?.command {
        Command::Run(a) => run_config(a).map(Invocation::Run),
        Command::Replay(a) => Ok(Invocation::Replay(ReplayConfig {
            log: a.log,
            strict: a.strict,
        })),
    }
}

fn run_config(a: RunArgs) -> Result<RunConfig, CliError> {
    let assigner = match a.assigner {
        AssignerArg::Hungarian => AssignerKind::Hungarian,
        AssignerArg::Milp => AssignerKind::Milp,
        AssignerArg::Auction => AssignerKind::Auction,
        AssignerArg::Llm => AssignerKind::Llm,
        AssignerArg::RandomInit => AssignerKind::RandomInit,
    };
    let backend = match (assigner, a.backend) {
        (AssignerKind::Llm, None) => {
            return Err(CliError::Usage(format!(
                "--assigner llm needs --backend <url|mock://mode>; a live endpoint also needs its API key in ${}",
                a.api_key_env
            )))
        }
        (AssignerKind::Llm, Some(url)) => {
            let defaults = BackendConfig::default();
            let cfg = BackendConfig {
                endpoint_url: url,
                model_name: a.model.unwrap_or(defaults.model_name),
                api_key_env_var: a.api_key_env,
                timeout: a.timeout,
                temperature: a.temperature,
                max_retries: a.max_retries,
                fallback_solver: match a.fallback {
                    SolverArg::Hungarian => FallbackSolver::Hungarian,
                    SolverArg::Milp => FallbackSolver::Milp,
                },
                strict_parse: a.strict_parse,
            };
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            if cfg.mock_mode().is_none() && std::env::var_os(&cfg.api_key_env_var).is_none() {
                return Err(CliError::Usage(format!(
                    "backend {} needs an API key in ${}",
                    cfg.endpoint_url, cfg.api_key_env_var
                )));
            }
            Some(cfg)
        }
        (_, Some(_)) => return Err(CliError::Usage("--backend only applies to --assigner llm".into())),
        (_, None) => None,
    };
    if !(a.switch_penalty >= 0.0 && a.switch_penalty.is_finite()) {
        return Err(CliError::Usage(format!("--switch-penalty must be ≥ 0, got {}", a.switch_penalty)));
    }
    if let Some(e) = a.epoch_dt {
        if !(e > 0.0 && e.is_finite()) {
            return Err(CliError::Usage(format!("--epoch-dt must be > 0, got {e}")));
        }
    }
    Ok(RunConfig {
        scenario_path: a.scenario,
        mission: MissionConfig {
            assigner,
            baseline: match a.baseline {
                BaselineArg::Hungarian => BaselineMode::Hungarian,
                BaselineArg::Random => BaselineMode::Random,
            },
            seed: a.seed,
            switch_penalty: a.switch_penalty,
            coverage: a.coverage.map(|c| c == OnOff::On),
            epoch_dt: a.epoch_dt,
            cost_options: CostOptions {
                normalize: true,
                threat_sense: match a.threat_sense {
                    SenseArg::Literal => ThreatSense::Literal,
                    SenseArg::Inverted => ThreatSense::Inverted,
                },
            },
            auction_eps: 1e-6,
            backend,
        },
        output_dir: a.out,
        emit_plots: a.emit_plots,
    })
}

/// Files written by [`execute_run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutputs {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub replay: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
}

pub fn load_run_scenario(cfg: &RunConfig) -> Result<Scenario<f64>, CliError> {
    match &cfg.scenario_path {
        Some(p) => load_scenario(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => Ok(Scenario::baseline()),
    }
}

/// Runs the mission and writes its result files into `cfg.output_dir`.
pub fn execute_run(cfg: &RunConfig) -> Result<(MissionLog<f64>, RunOutputs), CliError> {
    let scenario = load_run_scenario(cfg)?;
    if let Some(e) = cfg.mission.epoch_dt {
        if e < scenario.physics.sim_dt {
            return Err(CliError::Usage(format!(
                "--epoch-dt {e} is shorter than the scenario's sim_dt {}",
                scenario.physics.sim_dt
            )));
        }
    }
    let log = run_mission(&scenario, &cfg.mission).map_err(|e| CliError::Fatal(e.to_string()))?;
    let io = |p: &Path, e: std::io::Error| CliError::Fatal(format!("{}: {e}", p.display()));
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let trajectory = dir.join("trajectory.csv");
    write_trajectory_csv(&log, &trajectory).map_err(|e| io(&trajectory, e))?;
    let metrics = dir.join("metrics.json");
    write_metrics(&log, &metrics).map_err(|e| io(&metrics, e))?;
    let replay = if cfg.mission.assigner == AssignerKind::Llm {
        let p = dir.join("replay.jsonl");
        write_replay(&p, &log.replay).map_err(|e| io(&p, e))?;
        Some(p)
    } else {
        None
    };
    let mut plots = Vec::new();
    if cfg.emit_plots {
        for (name, t) in [("initial.svg", 0.0), ("final.svg", log.metrics.end_time)] {
            let p = dir.join(name);
            emit_plot(&log, t, &p).map_err(|e| io(&p, e))?;
            plots.push(p);
        }
    }
    Ok((
        log,
        RunOutputs {
            trajectory,
            metrics,
            replay,
            plots,
        },
    ))
}

/// Human-readable re-parse of every reply in a replay log.
pub fn replay_report(cfg: &ReplayConfig) -> Result<String, CliError> {
    let records = read_replay(&cfg.log).map_err(|e| CliError::Input(format!("{}: {e}", cfg.log.display())))?;
    let opts = ParseOptions { strict: cfg.strict };
    let mut out = String::new();
    for r in &records {
        out.push_str(&format!(
            "h={} t={} source={:?} applied={}\n",
            r.h,
            r.t,
            r.source,
            render_assignment(&r.assignment)
        ));
        for (i, res) in reparse(r, opts).into_iter().enumerate() {
            let line = match res {
                Ok(p) if p.clipped.is_empty() => render_assignment(&p.ids),
                Ok(p) => format!("{} (clipped positions {:?})", render_assignment(&p.ids), p.clipped),
                Err(e) => format!("parse failure: {e}"),
            };
            out.push_str(&format!("  reply {}: {line}\n", i + 1));
        }
    }
    Ok(out)
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, S>(argv: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(|inv| match inv {
        Invocation::Run(cfg) => {
            let (log, outputs) = execute_run(&cfg)?;
            let m = &log.metrics;
            println!(
                "intercepted {} breached {} surviving {} switches {} fallbacks {} end {} s",
                m.targets_intercepted,
                m.assets_breached,
                m.targets_surviving,
                m.total_switches,
                m.fallback_count,
                m.end_time
            );
            println!("wrote {}", outputs.trajectory.display());
            println!("wrote {}", outputs.metrics.display());
            for p in outputs.replay.iter().chain(&outputs.plots) {
                println!("wrote {}", p.display());
            }
            Ok(if m.assets_breached > 0 { EXIT_BREACH } else { EXIT_OK })
        }
        Invocation::Replay(cfg) => {
            print!("{}", replay_report(&cfg)?);
            Ok(EXIT_OK)
        }
    });
    match result {
        Ok(code) => code,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("wta: {e}");
            e.exit_code()
        }
    }
}
