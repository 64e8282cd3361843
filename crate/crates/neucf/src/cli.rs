use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use neucf_core::scenario::{builtin_scenarios, ControllerKind, ScenarioScript, BUILTIN_NAMES};
use neucf_core::sim::{run_scenario, SimConfig};

use crate::compare::compare;
use crate::io::{self, IoError, BUILTIN_SCHEME, SCENARIO_EXTENSION};
use crate::output::{self, RunMeta};

#[derive(Debug, Parser)]
#[command(name = "neucf", version, about = "Closed-loop reaching with a neural-field decision layer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// Run both controllers over scenarios and seeds and tabulate metrics.
    Compare(CompareArgs),
    /// Serve live sessions over HTTP and WebSocket.
    Serve(ServeArgs),
    /// List the builtin scenarios, optionally writing them as files.
    Scenarios(ScenariosArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Control tick in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Render and segment synthetic camera frames.
    #[arg(long)]
    pub vision_mode: bool,
    /// Simulation settings as inline JSON or a path to a JSON file.
    #[arg(long, value_name = "JSON")]
    pub config: Option<String>,
}

impl SimArgs {
    pub fn resolve(&self) -> Result<SimConfig, CliError> {
        let mut cfg = match &self.config {
            None => SimConfig::default(),
            Some(text) if text.trim_start().starts_with('{') => io::parse_config(text)?,
            Some(path) => io::parse_config(&io::read_text(Path::new(path))?)?,
        };
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        cfg.vision_mode |= self.vision_mode;
        cfg.validate().map_err(|e| CliError::Other(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `builtin:<name>` or a path to a scenario file.
    #[arg(long, required_unless_present = "from_meta")]
    pub scenario: Option<String>,
    #[arg(long)]
    pub controller: Option<ControllerKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Reproduce a previous run from its run_meta.json.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["scenario", "controller", "seed", "dt", "vision_mode", "config"])]
    pub from_meta: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Scenarios to compare; all builtins when omitted.
    #[arg(long)]
    pub scenario: Vec<String>,
    /// First seed; repeat k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    /// Directory for compare.txt and compare.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Directory with the operator panel bundle.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    /// Write each builtin as `<name>.scenario.json` into this directory.
    #[arg(long)]
    pub write: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(IoError::NotFound(_)) => 2,
            _ => 1,
        }
    }
}

impl From<neucf_core::Error> for CliError {
    fn from(e: neucf_core::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Serve(args) => cmd_serve(&args),
        Command::Scenarios(args) => cmd_scenarios(&args),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let (source, script, cfg) = match &args.from_meta {
        Some(path) => {
            let meta: RunMeta =
                serde_json::from_str(&io::read_text(path)?).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
            (meta.source, meta.scenario, meta.config)
        }
        None => {
            let source = args.scenario.clone().expect("clap requires --scenario without --from-meta");
            let mut script = io::load_scenario(&source)?;
            if let Some(kind) = args.controller {
                script.controller = kind;
            }
            if let Some(seed) = args.seed {
                script.seed = seed;
            }
            (source, script, args.sim.resolve()?)
        }
    };
    log::info!("running {} with {} (seed {})", script.name, script.controller.as_str(), script.seed);
    let outcome = run_scenario(&script, &cfg)?;
    let meta = RunMeta::new(&source, &script, &cfg, &outcome);
    output::write_run(&args.out, &outcome, &meta)?;
    let last = outcome.log.last();
    println!(
        "{} [{} seed {}]: {} at {} s, final ({:.3}, {:.3}) cm -> {}",
        script.name,
        script.controller.as_str(),
        script.seed,
        outcome.status.label(),
        outcome.status.t(),
        last.p.x,
        last.p.y,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let cfg = args.sim.resolve()?;
    let scripts: Vec<ScenarioScript> = if args.scenario.is_empty() {
        builtin_scenarios()
    } else {
        args.scenario.iter().map(|s| io::load_scenario(s)).collect::<Result<_, _>>()?
    };
    let seeds: Vec<u64> = (0..args.repeats).map(|k| args.seed + k).collect();
    let report = compare(&scripts, &seeds, &cfg);
    let text = report.to_text();
    print!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.clone(), source })?;
        io::write_file(&dir.join("compare.txt"), &text)?;
        io::write_file(&dir.join("compare.json"), report.to_json())?;
    }
    Ok(())
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let cfg = args.sim.resolve()?;
    let addr = SocketAddr::new(args.host, args.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
    rt.block_on(crate::service::serve(addr, cfg, args.static_dir.clone(), |bound| {
        println!("listening on http://{bound}");
    }))
    .map_err(|e| CliError::Other(format!("serve: {e}")))
}

pub fn cmd_scenarios(args: &ScenariosArgs) -> Result<(), CliError> {
    for name in BUILTIN_NAMES {
        println!("{BUILTIN_SCHEME}{name}");
    }
    if let Some(dir) = &args.write {
        std::fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.clone(), source })?;
        for script in builtin_scenarios() {
            io::write_file(&dir.join(format!("{}{SCENARIO_EXTENSION}", script.name)), io::serialize_scenario(&script))?;
        }
    }
    Ok(())
}
