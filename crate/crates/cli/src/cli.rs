use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use healthgrid_core::grid::Scenario;
use healthgrid_core::policy::{PolicyConfig, PolicyKind};
use healthgrid_core::scenarios::{builtin, BUILTIN_NAMES};
use healthgrid_core::sim::{compare_policies, trajectory_jsonl, SweepAxis};

use crate::error::AppError;
use crate::report::{render_metrics, render_run, render_sweep, Format};
use crate::request::{RunRequest, ScenarioRef, SweepRequest, DEFAULT_HORIZON};
use crate::service::{serve, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "healthgrid", version, about = "Health-aware fuel-mix simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one policy and report its metrics.
    Run(RunArgs),
    /// Run several policies on the same random stream.
    Compare(CompareArgs),
    /// Sweep a cap or V and report one row per value.
    Sweep(SweepArgs),
    /// Check a scenario file and list every violated invariant.
    Validate(ValidateArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file or built-in name.
    #[arg(long, default_value = "figure1")]
    pub scenario: String,
    /// Horizon in slots.
    #[arg(long = "T", default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Environment seed; defaults to the scenario's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "lyapunov")]
    pub policy: PolicyKind,
    #[arg(long = "V", default_value_t = 10.0)]
    pub v: f64,
    /// Write the per-slot trajectory as JSON Lines.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Read a RunRequest document instead of the scenario and policy flags.
    #[arg(long, conflicts_with_all = ["policy", "v"])]
    pub request: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "min_emission,min_health,lyapunov")]
    pub policies: Vec<PolicyKind>,
    #[arg(long = "V", default_value_t = 10.0)]
    pub v: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub axis: SweepAxis,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value = "lyapunov")]
    pub policy: PolicyKind,
    #[arg(long = "V", default_value_t = 10.0)]
    pub v: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Scenario file or built-in name.
    #[arg(long, required_unless_present = "path")]
    pub scenario: Option<String>,
    #[arg(conflicts_with = "scenario")]
    pub path: Option<String>,
    /// Print the normalized scenario document.
    #[arg(long)]
    pub print: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Simulations allowed to run at once; defaults to the number of CPUs.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write every finished job record to this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// A `--scenario` argument: an existing file, otherwise a built-in name.
pub fn scenario_arg(arg: &str) -> Result<ScenarioRef, AppError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| AppError::invalid("unreadable_scenario", format!("{arg}: {e}")))?;
        let raw: Scenario = serde_json::from_str(&text).map_err(|e| AppError::invalid("malformed_scenario", format!("{arg}: {e}")))?;
        return Ok(ScenarioRef::Inline(Box::new(raw)));
    }
    if builtin(arg).is_some() {
        return Ok(ScenarioRef::Named(arg.to_string()));
    }
    Err(AppError::not_found(format!(
        "'{arg}' is neither a file nor a built-in scenario ({})",
        BUILTIN_NAMES.join(", ")
    )))
}

fn no_stored(_: &str) -> Option<Scenario> {
    None
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), AppError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| AppError::internal(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| AppError::internal(e.to_string()))
        }
    }
}

fn config(kind: PolicyKind, v: f64) -> PolicyConfig {
    PolicyConfig { v, ..PolicyConfig::of(kind) }
}

fn run(args: RunArgs) -> Result<(), AppError> {
    let c = &args.common;
    let mut request = match &args.request {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| AppError::invalid("unreadable_request", format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunRequest>(&text).map_err(|e| AppError::invalid("malformed_request", e.to_string()))?
        }
        None => RunRequest {
            scenario: scenario_arg(&c.scenario)?,
            policy_config: config(args.policy, args.v),
            horizon: c.horizon,
            seed: c.seed,
            include_trajectory: false,
        },
    };
    request.include_trajectory |= args.trajectory.is_some();
    let mut metrics = request.prepare(&no_stored)?.run()?;
    if let Some(path) = &args.trajectory {
        let records = metrics.trajectory.take().unwrap_or_default();
        fs::write(path, trajectory_jsonl(&records)).map_err(|e| AppError::internal(format!("{}: {e}", path.display())))?;
    }
    metrics.trajectory = None;
    write_out(c.out.as_deref(), &render_run(&metrics, c.format)?)
}

fn compare(args: CompareArgs) -> Result<(), AppError> {
    let c = &args.common;
    let scenario = scenario_arg(&c.scenario)?.resolve(&no_stored)?;
    let configs: Vec<PolicyConfig> = args.policies.iter().map(|&k| config(k, args.v)).collect();
    for cfg in &configs {
        cfg.check()?;
    }
    let seed = c.seed.unwrap_or(scenario.rng_seed);
    let rows = compare_policies(&scenario, &configs, c.horizon, seed)?;
    write_out(c.out.as_deref(), &render_metrics(&rows, c.format)?)
}

fn sweep(args: SweepArgs) -> Result<(), AppError> {
    let c = &args.common;
    let request = SweepRequest {
        scenario: scenario_arg(&c.scenario)?,
        policy_config: config(args.policy, args.v),
        axis: args.axis,
        values: args.values.clone(),
        horizon: c.horizon,
        seed: c.seed,
    };
    let points = request.prepare(&no_stored)?.run()?;
    write_out(c.out.as_deref(), &render_sweep(&points, c.format)?)
}

fn validate(args: ValidateArgs) -> Result<(), AppError> {
    let arg = args.scenario.or(args.path).expect("clap requires one of them");
    let scenario = scenario_arg(&arg)?.resolve(&no_stored)?;
    if args.print {
        return write_out(None, &(scenario.to_json() + "\n"));
    }
    let plants: usize = scenario.subregions.iter().map(|s| s.plants.len()).sum();
    write_out(
        None,
        &format!(
            "{arg}: valid ({} subregions, {} fuels, {plants} plants)\n",
            scenario.n_subregions(),
            scenario.n_fuels()
        ),
    )
}

fn serve_cmd(args: ServeArgs) -> Result<(), AppError> {
    let mut config = ServiceConfig::default();
    if let Some(w) = args.workers {
        config.workers = w;
    }
    config.out_dir = args.out_dir;
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::internal(e.to_string()))?;
    runtime
        .block_on(serve(addr, config))
        .map_err(|e| AppError::internal(format!("server on {addr}: {e}")))
}

pub fn execute(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
        Command::Serve(a) => serve_cmd(a),
    }
}
